"""Linear probes on frozen encoders and exact tabular ERM on finite graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .graph import AugmentationGraph
from .numerics import as_matrix, cholesky_solve
from .spectral import Encoder

DEFAULT_ETA = 1e-4
VOTE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FtAugmentation:
    """Fine-tuning augmentation kernel; row x is A_ft(. | x)."""

    kernel: np.ndarray
    name: str = ""

    def __post_init__(self):
        k = as_matrix(self.kernel, "kernel")
        if k.shape[0] != k.shape[1]:
            raise ValidationError("augmentation kernel must be square")
        if np.any(k < 0) or np.any(np.abs(k.sum(axis=1) - 1.0) > 1e-12):
            raise ValidationError("augmentation kernel rows must be probability distributions")
        object.__setattr__(self, "kernel", k)

    @classmethod
    def identity(cls, n: int) -> "FtAugmentation":
        return cls(np.eye(n), name="identity")

    @classmethod
    def from_graph(cls, g: AugmentationGraph) -> "FtAugmentation":
        return cls(g.a_pre.copy(), name=f"generic({g.name})")


@dataclass(frozen=True, eq=False)
class LinearProbe:
    b: np.ndarray
    eta: float

    @property
    def n_classes(self) -> int:
        return self.b.shape[0]

    def scores(self, e: Encoder) -> np.ndarray:
        return e.features @ self.b.T

    def to_dict(self) -> dict:
        return {"eta": self.eta, "b": self.b.tolist()}


def _source_weights(g: AugmentationGraph) -> np.ndarray:
    src = g.source_nodes
    if not src:
        raise ValidationError("graph has no source nodes")
    p = np.zeros(g.n)
    p[src] = 1.0 / len(src)
    return p


def _one_hot(g: AugmentationGraph) -> np.ndarray:
    return np.eye(g.n_classes)[g.class_of - 1]


def probe_moments(e: Encoder, g: AugmentationGraph, aug: FtAugmentation):
    """Second moments E[phi(x') phi(x')^T] and E[y_x phi(x')^T] under P_S and aug."""
    if e.n != g.n or aug.kernel.shape[0] != g.n:
        raise ValidationError("encoder, graph and augmentation disagree on node count")
    # joint[x, x'] = P_S(x) A_ft(x'|x)
    joint = _source_weights(g)[:, None] * aug.kernel
    phi = e.features
    m_pp = phi.T @ (joint.sum(axis=0)[:, None] * phi)
    m_yp = _one_hot(g).T @ joint @ phi
    return m_pp, m_yp


def fit_linear_probe(
    e: Encoder, g: AugmentationGraph, aug: FtAugmentation, eta: float = DEFAULT_ETA
) -> LinearProbe:
    """Exact ridge minimizer of E||B phi(x') - y_x||^2 + eta ||B||_F^2."""
    if not eta > 0:
        raise ValidationError(f"ridge weight eta must be > 0, got {eta}")
    m_pp, m_yp = probe_moments(e, g, aug)
    gram = m_pp + eta * np.eye(e.k)
    try:
        # B gram = m_yp  <=>  gram B^T = m_yp^T (gram symmetric)
        b = cholesky_solve(gram, m_yp.T).T
    except NumericalError as exc:
        raise NumericalError(f"regularized probe Gram matrix is singular: {exc}") from exc
    return LinearProbe(b=b, eta=float(eta))


def classify(p: LinearProbe, e: Encoder, x: int) -> int:
    """Predicted label (1-based) for 0-based node x; ties go to the smallest label."""
    return int(np.argmax(p.b @ e.features[x])) + 1


def predict_all(p: LinearProbe, e: Encoder) -> np.ndarray:
    return np.argmax(p.scores(e), axis=1) + 1


def target_error(predict, g: AugmentationGraph) -> float:
    """0-1 error under uniform P_T. ``predict`` is a callable node -> label or a label array."""
    tgt = g.target_nodes
    if callable(predict):
        preds = np.array([predict(x) for x in tgt])
    else:
        preds = np.asarray(predict)[tgt]
    return float(np.mean(preds != g.class_of[tgt]))


@dataclass(frozen=True)
class ErmMinimizerSet:
    """status[x] is ("forced", (label,)), ("tied", labels) or ("free", all labels)."""

    status: tuple
    votes: np.ndarray
    min_target_error: float
    max_target_error: float

    def nodes_with(self, kind: str) -> list[int]:
        """1-based nodes whose status is ``kind``."""
        return [i + 1 for i, (s, _) in enumerate(self.status) if s == kind]

    def forced_correct(self, g: AugmentationGraph) -> list[int]:
        return [
            i + 1
            for i, (s, labels) in enumerate(self.status)
            if s == "forced" and labels[0] == g.class_of[i]
        ]

    def to_dict(self) -> dict:
        return {
            "status": [{"node": i + 1, "kind": s, "labels": list(l)} for i, (s, l) in enumerate(self.status)],
            "min_target_error": self.min_target_error,
            "max_target_error": self.max_target_error,
        }


def erm_votes(g: AugmentationGraph, aug: FtAugmentation) -> np.ndarray:
    """votes[x', c] = sum_{x in source} P_S(x) A_ft(x'|x) [y_x = c]."""
    joint = _source_weights(g)[:, None] * aug.kernel
    return joint.T @ _one_hot(g)


def erm_minimizers(g: AugmentationGraph, aug: FtAugmentation) -> ErmMinimizerSet:
    """Characterize every minimizer of the 0-1 ERM objective over tabular classifiers.

    The objective decomposes per augmented node x', so a minimizer picks any
    label with maximal vote at each node independently.
    """
    if aug.kernel.shape[0] != g.n:
        raise ValidationError("augmentation and graph disagree on node count")
    votes = erm_votes(g, aug)
    labels = np.arange(1, g.n_classes + 1)
    status = []
    for v in votes:
        top = v.max()
        if top <= VOTE_TOL:
            status.append(("free", tuple(labels.tolist())))
            continue
        best = tuple(labels[v >= top - VOTE_TOL].tolist())
        status.append(("forced" if len(best) == 1 else "tied", best))

    tgt = g.target_nodes
    lo = hi = 0
    for x in tgt:
        allowed = status[x][1]
        truth = int(g.class_of[x])
        lo += truth not in allowed
        hi += any(lab != truth for lab in allowed)
    return ErmMinimizerSet(
        status=tuple(status),
        votes=votes,
        min_target_error=lo / len(tgt),
        max_target_error=hi / len(tgt),
    )
