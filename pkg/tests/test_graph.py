import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connectlab.errors import ValidationError
from connectlab.graph import (
    GraphParams,
    build_connect_later_graph,
    graph_from_config,
    interpolate_graphs,
    load_graph_config,
    normalized_adjacency,
    positive_pair_matrix,
)
from connectlab.numerics import sym_eig

P = GraphParams()


def test_swapped_edges(swapped):
    assert swapped.edge(1, 4) == 0.2
    assert swapped.edge(1, 3) == 0.05
    assert swapped.edge(2, 3) == 0.2


def test_aligned_edges(aligned):
    assert aligned.edge(1, 3) == 0.2
    assert aligned.edge(1, 4) == 0.05


@pytest.mark.parametrize("swap", [False, True])
def test_rows_stochastic_and_symmetric(swap):
    g = build_connect_later_graph(GraphParams(swapped=swap))
    assert np.all(np.abs(g.a_pre.sum(axis=1) - 1.0) <= 1e-12)
    assert np.array_equal(g.a_pre, g.a_pre.T)
    assert g.source_nodes == [0, 1]
    assert g.target_nodes == [2, 3, 4, 5, 6, 7]
    assert g.class_of.tolist() == [1, 2, 1, 2, 1, 2, 1, 2]


def test_swapped_is_aligned_with_source_nodes_exchanged(aligned, swapped):
    # relabel 1<->2 in the aligned kernel: pairs touching {1,2} move across
    perm = [1, 0, 2, 3, 4, 5, 6, 7]
    moved = aligned.a_pre[np.ix_(perm, perm)]
    assert np.array_equal(moved[2:, 2:], swapped.a_pre[2:, 2:])
    assert np.array_equal(moved[:2, 2:], swapped.a_pre[:2, 2:])


def test_literal_edge_2_5_breaks_rows():
    g = build_connect_later_graph(GraphParams(swapped=True), literal_edge_2_5=True)
    rows = g.a_pre.sum(axis=1)
    assert g.edge(2, 5) == 0.2 and g.edge(2, 3) == 0.0
    assert abs(rows[2] - 1.0) > 0.1  # node 3 loses an alpha edge
    assert abs(rows[4] - 1.0) > 0.1  # node 5 gains one


@pytest.mark.parametrize(
    "bad",
    [
        dict(rho=0.15, alpha=0.2, beta=0.25, gamma=0.1),
        dict(rho=0.4, alpha=0.2, beta=0.1, gamma=0.1),
        dict(rho=0.5, alpha=0.2, beta=0.1, gamma=0.05),
    ],
)
def test_invalid_params(bad):
    with pytest.raises(ValidationError):
        build_connect_later_graph(GraphParams(**bad))


def test_interpolation_endpoints_and_midpoint(aligned, swapped):
    assert interpolate_graphs(aligned, swapped, 0.0) is aligned
    assert interpolate_graphs(aligned, swapped, 1.0) is swapped
    mid = interpolate_graphs(aligned, swapped, 0.5)
    expected = (P.alpha + P.gamma) / 2
    assert mid.edge(1, 3) == pytest.approx(expected, abs=1e-15)
    assert mid.edge(1, 4) == pytest.approx(expected, abs=1e-15)
    assert np.all(np.abs(mid.a_pre.sum(axis=1) - 1) <= 1e-12)


def test_interpolation_rejects_mismatch(aligned):
    other = aligned.permuted([1, 0, 2, 3, 4, 5, 6, 7])
    with pytest.raises(ValidationError):
        interpolate_graphs(aligned, other, 0.5)


def brute_force_s_plus(g):
    n = g.n
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = sum(g.p_u[k] * g.a_pre[k, i] * g.a_pre[k, j] for k in range(n))
    return out


def test_positive_pair_matches_triple_loop(sp_swapped, swapped):
    assert np.allclose(sp_swapped, brute_force_s_plus(swapped), atol=1e-15)
    # exact rational value from the triple loop: 17/800
    assert sp_swapped[0, 3] == pytest.approx(17 / 800, abs=1e-15)


def test_positive_pair_sums_to_one(sp_aligned, sp_swapped):
    for sp in (sp_aligned, sp_swapped):
        assert abs(sp.sum() - 1.0) <= 1e-10
        assert np.array_equal(sp, sp.T)


def test_identity_kernel_gives_scaled_identity(aligned):
    from connectlab.graph import AugmentationGraph

    g = AugmentationGraph(aligned.class_of, aligned.domain_of, np.eye(8), np.full(8, 1 / 8))
    sp = positive_pair_matrix(g)
    assert np.allclose(sp, np.eye(8) / 8)
    assert np.allclose(normalized_adjacency(sp), np.eye(8))


@pytest.mark.parametrize("which", ["sp_aligned", "sp_swapped"])
def test_normalized_adjacency_top_eigenpair(which, request):
    sp = request.getfixturevalue(which)
    a = normalized_adjacency(sp)
    assert np.array_equal(a, a.T)
    w, v = sym_eig(a)
    assert abs(w[0] - 1.0) <= 1e-8
    sq = np.sqrt(sp.sum(axis=1))
    assert np.allclose(np.abs(v[:, 0]), sq / np.linalg.norm(sq), atol=1e-8)


def test_normalized_adjacency_isolated_node():
    sp = np.diag([0.5, 0.5, 0.0])
    with pytest.raises(ValidationError, match="node 3"):
        normalized_adjacency(sp)


@settings(max_examples=25, deadline=None)
@given(st.permutations(range(8)), st.booleans())
def test_permutation_equivariance(perm, swap):
    g = build_connect_later_graph(GraphParams(swapped=swap))
    perm = np.array(perm)
    gp = g.permuted(perm)
    sp, spp = positive_pair_matrix(g), positive_pair_matrix(gp)
    assert np.allclose(spp, sp[np.ix_(perm, perm)], atol=1e-15)
    assert np.allclose(normalized_adjacency(spp), normalized_adjacency(sp)[np.ix_(perm, perm)], atol=1e-14)


def test_graph_config_roundtrip(tmp_path):
    cfg = {
        "nodes": 8,
        "classes": [1, 2, 1, 2, 1, 2, 1, 2],
        "domains": ["source", "source"] + ["target"] * 6,
        "params": {"rho": 0.4, "alpha": 0.2, "beta": 0.1, "gamma": 0.05},
        "swapped": True,
        "literal_edge_2_5": False,
    }
    path = tmp_path / "g.json"
    path.write_text(json.dumps(cfg))
    g = load_graph_config(path)
    assert g.edge(1, 4) == 0.2
    with pytest.raises(ValidationError):
        graph_from_config({**cfg, "nodes": 9})
