"""Finite augmentation graphs and the positive-pair quantities derived from them.

Nodes are numbered 1..n in every public accessor (matching how the
8-node construction is usually written down); arrays are 0-indexed.
Class labels are 1..r. Domains are the strings ``"source"`` / ``"target"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .numerics import as_matrix

SOURCE = "source"
TARGET = "target"

ROW_TOL = 1e-12


@dataclass(frozen=True)
class GraphParams:
    rho: float = 0.4
    alpha: float = 0.2
    beta: float = 0.1
    gamma: float = 0.05
    swapped: bool = False

    def violations(self) -> list[str]:
        bad = []
        vals = dict(rho=self.rho, alpha=self.alpha, beta=self.beta, gamma=self.gamma)
        for k, v in vals.items():
            if not 0.0 < v < 1.0:
                bad.append(f"{k}={v} not in (0, 1)")
        if not self.rho > max(self.alpha, self.beta):
            bad.append("rho > max(alpha, beta)")
        if not min(self.alpha, self.beta) > self.gamma:
            bad.append("min(alpha, beta) > gamma")
        total = self.rho + 2 * self.alpha + self.beta + 2 * self.gamma
        if abs(total - 1.0) > 1e-12:
            bad.append(f"rho + 2*alpha + beta + 2*gamma = 1 (got {total!r})")
        return bad

    def validate(self) -> "GraphParams":
        bad = self.violations()
        if bad:
            raise ValidationError("invalid GraphParams: " + "; ".join(bad))
        return self


@dataclass(frozen=True, eq=False)
class AugmentationGraph:
    class_of: np.ndarray
    domain_of: tuple[str, ...]
    a_pre: np.ndarray
    p_u: np.ndarray
    name: str = ""
    check_rows: bool = field(default=True, repr=False)

    def __post_init__(self):
        a = as_matrix(self.a_pre, "a_pre")
        cls = np.asarray(self.class_of, dtype=np.int64)
        p = np.asarray(self.p_u, dtype=np.float64)
        n = len(cls)
        if a.shape != (n, n) or p.shape != (n,) or len(self.domain_of) != n:
            raise ValidationError("graph arrays disagree on node count")
        if np.any(a < 0):
            raise ValidationError("a_pre has negative entries")
        if self.check_rows:
            rows = a.sum(axis=1)
            bad = np.flatnonzero(np.abs(rows - 1.0) > ROW_TOL)
            if bad.size:
                raise ValidationError(
                    f"a_pre rows not stochastic at nodes {[int(i) + 1 for i in bad]}"
                )
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError("p_u must be a probability vector")
        doms = set(self.domain_of)
        if not doms <= {SOURCE, TARGET} or doms != {SOURCE, TARGET}:
            raise ValidationError("need at least one source and one target node")
        r = int(cls.max())
        if set(cls.tolist()) != set(range(1, r + 1)):
            raise ValidationError("class labels must cover 1..r")
        object.__setattr__(self, "a_pre", a)
        object.__setattr__(self, "class_of", cls)
        object.__setattr__(self, "p_u", p)
        object.__setattr__(self, "domain_of", tuple(self.domain_of))

    @property
    def n(self) -> int:
        return len(self.class_of)

    @property
    def n_classes(self) -> int:
        return int(self.class_of.max())

    @property
    def source_nodes(self) -> list[int]:
        return [i for i, d in enumerate(self.domain_of) if d == SOURCE]

    @property
    def target_nodes(self) -> list[int]:
        return [i for i, d in enumerate(self.domain_of) if d == TARGET]

    def edge(self, i: int, j: int) -> float:
        """Augmentation probability A_pre(j | i), 1-based nodes."""
        return float(self.a_pre[i - 1, j - 1])

    def permuted(self, perm) -> "AugmentationGraph":
        """Relabel nodes: new node k is old node perm[k] (0-based)."""
        perm = np.asarray(perm)
        return AugmentationGraph(
            class_of=self.class_of[perm],
            domain_of=tuple(self.domain_of[i] for i in perm),
            a_pre=self.a_pre[np.ix_(perm, perm)],
            p_u=self.p_u[perm],
            name=self.name,
            check_rows=self.check_rows,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": self.n,
            "classes": self.class_of.tolist(),
            "domains": list(self.domain_of),
            "a_pre": self.a_pre.tolist(),
            "p_u": self.p_u.tolist(),
        }


# Edge lists of the 8-node construction, 1-based unordered pairs.
_BETA_EDGES = [(1, 2), (3, 4), (5, 6), (7, 8)]
_PROP_ALPHA = [(1, 3), (3, 5), (5, 7), (2, 4), (4, 6), (6, 8), (1, 7), (2, 8)]
_PROP_GAMMA = [(1, 4), (2, 3), (3, 6), (4, 5), (5, 8), (6, 7), (1, 8), (2, 7)]
# Swapped graph: weights touching nodes 1 and 2 exchanged across the two domains.
_SWAP_ALPHA = [(1, 4), (3, 5), (5, 7), (2, 3), (4, 6), (6, 8), (1, 8), (2, 7)]
_SWAP_GAMMA = [(1, 3), (2, 4), (3, 6), (4, 5), (5, 8), (6, 7), (1, 7), (2, 8)]

CONNECT_LATER_CLASSES = np.array([1, 2, 1, 2, 1, 2, 1, 2])  # label 1 is y=+1, label 2 is y=-1
CONNECT_LATER_DOMAINS = (SOURCE, SOURCE) + (TARGET,) * 6


def build_connect_later_graph(
    p: GraphParams = GraphParams(), literal_edge_2_5: bool = False
) -> AugmentationGraph:
    """The 8-node, two-domain graph; ``p.swapped`` selects the misaligned variant.

    ``literal_edge_2_5`` reproduces the swapped alpha list verbatim, with
    {2,5} in place of {2,3}. That kernel is not row-stochastic, so the
    returned graph skips the row check and is for inspection only.
    """
    p.validate()
    alpha_edges = list(_SWAP_ALPHA if p.swapped else _PROP_ALPHA)
    gamma_edges = _SWAP_GAMMA if p.swapped else _PROP_GAMMA
    if literal_edge_2_5:
        if not p.swapped:
            raise ValidationError("literal_edge_2_5 only applies to the swapped graph")
        alpha_edges[alpha_edges.index((2, 3))] = (2, 5)
    a = np.eye(8) * p.rho
    for edges, w in ((alpha_edges, p.alpha), (_BETA_EDGES, p.beta), (gamma_edges, p.gamma)):
        for i, j in edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = w
    return AugmentationGraph(
        class_of=CONNECT_LATER_CLASSES.copy(),
        domain_of=CONNECT_LATER_DOMAINS,
        a_pre=a,
        p_u=np.full(8, 1 / 8),
        name="swapped" if p.swapped else "aligned",
        check_rows=not literal_edge_2_5,
    )


def interpolate_graphs(g0: AugmentationGraph, g1: AugmentationGraph, s: float) -> AugmentationGraph:
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"interpolation weight must be in [0, 1], got {s}")
    if (
        g0.n != g1.n
        or not np.array_equal(g0.class_of, g1.class_of)
        or g0.domain_of != g1.domain_of
    ):
        raise ValidationError("interpolate_graphs needs identical nodes, labels and domains")
    if s == 0.0:
        return g0
    if s == 1.0:
        return g1
    return AugmentationGraph(
        class_of=g0.class_of.copy(),
        domain_of=g0.domain_of,
        a_pre=(1.0 - s) * g0.a_pre + s * g1.a_pre,
        p_u=(1.0 - s) * g0.p_u + s * g1.p_u,
        name=f"interp({g0.name},{g1.name},{s:g})",
    )


def positive_pair_matrix(g: AugmentationGraph) -> np.ndarray:
    """S+[i, j] = sum_k p_u[k] A(i|k) A(j|k)."""
    a = g.a_pre
    sp = a.T @ (g.p_u[:, None] * a)
    return 0.5 * (sp + sp.T)


def marginals(sp) -> np.ndarray:
    return np.asarray(sp).sum(axis=1)


def normalized_adjacency(sp) -> np.ndarray:
    sp = as_matrix(sp, "s_plus")
    w = marginals(sp)
    zero = np.flatnonzero(w <= 0)
    if zero.size:
        raise ValidationError(f"node {int(zero[0]) + 1} has zero positive-pair marginal")
    d = 1.0 / np.sqrt(w)
    return d[:, None] * sp * d[None, :]


def load_graph_config(path) -> AugmentationGraph:
    """Read ``{nodes, classes, domains, params{...}, swapped, literal_edge_2_5}``.

    Only the 8-node construction is buildable from params; ``nodes``,
    ``classes`` and ``domains`` are checked against it when present.
    """
    cfg = json.loads(Path(path).read_text()) if not isinstance(path, dict) else path
    return graph_from_config(cfg)


def graph_from_config(cfg: dict) -> AugmentationGraph:
    params = dict(cfg.get("params", {}))
    gp = GraphParams(
        rho=float(params.get("rho", 0.4)),
        alpha=float(params.get("alpha", 0.2)),
        beta=float(params.get("beta", 0.1)),
        gamma=float(params.get("gamma", 0.05)),
        swapped=bool(cfg.get("swapped", False)),
    )
    g = build_connect_later_graph(gp, literal_edge_2_5=bool(cfg.get("literal_edge_2_5", False)))
    if "nodes" in cfg and int(cfg["nodes"]) != g.n:
        raise ValidationError(f"only the 8-node construction is supported, got nodes={cfg['nodes']}")
    if "classes" in cfg and list(cfg["classes"]) != g.class_of.tolist():
        raise ValidationError("classes in config do not match the construction")
    if "domains" in cfg and tuple(cfg["domains"]) != g.domain_of:
        raise ValidationError("domains in config do not match the construction")
    return g
