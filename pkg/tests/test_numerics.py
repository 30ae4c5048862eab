import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connectlab.errors import NumericalError, ValidationError
from connectlab.numerics import Rng, cholesky_solve, loguniform, sym_eig

from conftest import random_spd, random_symmetric


def test_sym_eig_identity():
    w, v = sym_eig(np.eye(2))
    assert w.tolist() == [1.0, 1.0]
    assert np.allclose(v.T @ v, np.eye(2))


def test_sym_eig_two_by_two_closed_form():
    w, v = sym_eig([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(w, [3.0, 1.0], atol=1e-12)
    s = 1 / math.sqrt(2)
    assert np.allclose(np.abs(v[:, 0]), [s, s], atol=1e-12)
    assert np.allclose(v[:, 1] * np.sign(v[0, 1]), [s, -s], atol=1e-12)


def test_sym_eig_random_reconstruction():
    rng = np.random.default_rng(7)
    m = random_symmetric(rng, 8)
    w, v = sym_eig(m)
    assert np.max(np.abs(v @ np.diag(w) @ v.T - m)) <= 1e-8
    assert np.all(np.diff(w) <= 0)
    # independent LAPACK route
    assert np.allclose(w, np.linalg.eigvalsh(m)[::-1], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_sym_eig_trace_and_orthonormality(n, seed):
    m = random_symmetric(np.random.default_rng(seed), n)
    w, v = sym_eig(m)
    assert abs(w.sum() - np.trace(m)) <= 1e-8
    assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-8


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(ValidationError):
        sym_eig([[1.0, 2.0], [0.0, 1.0]])


def test_cholesky_solve_examples():
    assert np.allclose(cholesky_solve(np.eye(2), [3.0, -1.0]), [3.0, -1.0])
    assert np.allclose(cholesky_solve([[4.0, 0.0], [0.0, 9.0]], [2.0, 3.0]), [0.5, 1 / 3])


def test_cholesky_solve_indefinite_reports_pivot():
    with pytest.raises(NumericalError) as info:
        cholesky_solve([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0])
    assert info.value.index == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cholesky_matches_eigen_solve(seed):
    rng = np.random.default_rng(seed)
    a = random_spd(rng, 8)
    b = rng.normal(size=8)
    x = cholesky_solve(a, b)
    assert np.max(np.abs(a @ x - b)) <= 1e-8 * np.max(np.abs(b))
    w, v = sym_eig(a)
    x_eig = v @ ((v.T @ b) / w)
    assert np.max(np.abs(x - x_eig)) <= 1e-6


def test_loguniform_degenerate_and_invalid():
    rng = Rng(0)
    assert loguniform(rng, 2.0, 2.0) == 2.0
    with pytest.raises(ValidationError):
        loguniform(rng, 0.0, 1.0)
    with pytest.raises(ValidationError):
        loguniform(rng, 2.0, 1.0)


def test_loguniform_log_mean():
    rng = Rng(123)
    logs = np.array([math.log(loguniform(rng, 1.0, math.e)) for _ in range(100_000)])
    assert abs(logs.mean() - 0.5) <= 0.01
    assert logs.min() >= 0.0 and logs.max() <= 1.0


def test_rng_determinism_bytes():
    a = Rng(99).uniform(size=1000).tobytes()
    b = Rng(99).uniform(size=1000).tobytes()
    assert a == b
    assert Rng(100).uniform(size=1000).tobytes() != a


def test_rng_split_independent_of_parent_position():
    parent = Rng(5)
    first = parent.split("trial-3").uniform(size=4)
    parent.uniform(size=1000)
    again = parent.split("trial-3").uniform(size=4)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, parent.split("trial-4").uniform(size=4))


def test_rng_rejects_bad_seed():
    with pytest.raises(ValidationError):
        Rng(-1)
    with pytest.raises(ValidationError):
        Rng(2**64)
