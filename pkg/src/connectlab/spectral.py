"""Spectral contrastive pretraining on a finite augmentation graph.

An encoder is a table of features, one row per node. The objective is

    L(phi) = -2 sum_ij S+[i,j] <phi_i, phi_j> + sum_ij p_i p_j <phi_i, phi_j>^2

and its global minimizer is a scaled truncated eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .numerics import Rng, as_matrix, sym_eig

INIT_SCALE = 0.01


@dataclass(frozen=True, eq=False)
class Encoder:
    features: np.ndarray

    def __post_init__(self):
        f = as_matrix(self.features, "features")
        if f.shape[1] < 1:
            raise ValidationError("encoder needs k >= 1")
        object.__setattr__(self, "features", f)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def k(self) -> int:
        return self.features.shape[1]

    def __call__(self, node: int) -> np.ndarray:
        return self.features[node]

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "features": self.features.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Encoder":
        enc = cls(np.array(d["features"], dtype=np.float64))
        if enc.n != d["n"] or enc.k != d["k"]:
            raise ValidationError("encoder JSON shape does not match n/k")
        return enc


def _check(features, sp, p_u):
    sp = as_matrix(sp, "s_plus")
    p_u = np.asarray(p_u, dtype=np.float64)
    n = sp.shape[0]
    if sp.shape != (n, n) or p_u.shape != (n,) or features.shape[0] != n:
        raise ValidationError("encoder, S+ and p_u disagree on node count")
    return sp, p_u


def spectral_loss(e: Encoder, sp, p_u) -> float:
    f = e.features
    sp, p_u = _check(f, sp, p_u)
    gram = f @ f.T
    return float(-2.0 * np.sum(sp * gram) + np.sum(np.outer(p_u, p_u) * gram**2))


def spectral_grad(features: np.ndarray, sp, p_u) -> np.ndarray:
    """d loss / d features; S+ is symmetric so both inner-product slots contribute equally."""
    sp, p_u = _check(features, sp, p_u)
    gram = features @ features.T
    pp = np.outer(p_u, p_u)
    return -4.0 * sp @ features + 4.0 * (pp * gram) @ features


def pretrain_closed_form(sp, k: int, p_u=None) -> Encoder:
    """Global minimizer of the spectral loss with feature dimension k.

    With D = diag(p_u) the loss equals ||M - U U^T||_F^2 - ||M||_F^2 for
    M = D^-1/2 S+ D^-1/2 and U = D^1/2 phi, so U is the top-k eigenpairs of
    M scaled by sqrt(max(lambda, 0)). When p_u is omitted the S+ marginals
    are used, which makes M the usual normalized adjacency.
    """
    sp = as_matrix(sp, "s_plus")
    n = sp.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"feature dimension k must be in [1, {n}], got {k}")
    w = sp.sum(axis=1) if p_u is None else np.asarray(p_u, dtype=np.float64)
    if np.any(w <= 0):
        raise ValidationError(f"node {int(np.argmin(w)) + 1} has zero weight")
    d = 1.0 / np.sqrt(w)
    m = d[:, None] * sp * d[None, :]
    lam, vecs = sym_eig(0.5 * (m + m.T))
    lam_k = np.clip(lam[:k], 0.0, None)
    return Encoder(d[:, None] * vecs[:, :k] * np.sqrt(lam_k)[None, :])


def pretrain_gd(sp, k: int, steps: int, lr: float, rng: Rng, p_u=None) -> Encoder:
    """Full-batch gradient descent on the spectral loss from a small uniform init."""
    sp = as_matrix(sp, "s_plus")
    n = sp.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"feature dimension k must be in [1, {n}], got {k}")
    if not lr > 0:
        raise ValidationError(f"learning rate must be > 0, got {lr}")
    if steps < 0:
        raise ValidationError(f"steps must be >= 0, got {steps}")
    p_u = np.full(n, 1.0 / n) if p_u is None else np.asarray(p_u, dtype=np.float64)
    f = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n, k))
    for step in range(steps):
        with np.errstate(over="ignore", invalid="ignore"):
            f = f - lr * spectral_grad(f, sp, p_u)
        if not np.all(np.isfinite(f)):
            raise NumericalError(f"gradient descent diverged at step {step}", index=step)
    loss = spectral_loss(Encoder(f), sp, p_u)
    if not math.isfinite(loss):
        raise NumericalError(f"gradient descent diverged at step {steps}", index=steps)
    return Encoder(f)
