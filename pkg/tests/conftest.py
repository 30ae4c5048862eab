import numpy as np
import pytest

from connectlab.graph import GraphParams, build_connect_later_graph, positive_pair_matrix


@pytest.fixture(scope="session")
def aligned():
    return build_connect_later_graph(GraphParams(swapped=False))


@pytest.fixture(scope="session")
def swapped():
    return build_connect_later_graph(GraphParams(swapped=True))


@pytest.fixture(scope="session")
def sp_aligned(aligned):
    return positive_pair_matrix(aligned)


@pytest.fixture(scope="session")
def sp_swapped(swapped):
    return positive_pair_matrix(swapped)


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def random_spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


# -- acceptance summary -------------------------------------------------------
# Acceptance tests call record(...) with a one-line verdict; the lines are
# printed together at the end of the run, whatever the capture mode.

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    def _record(number: int, title: str, ok: bool, detail: str, seconds: float):
        verdict = "PASS" if ok else "FAIL"
        _ACCEPTANCE[number] = f"criterion {number:2d} {verdict}  {title}: {detail} ({seconds:.2f}s)"
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
