"""Dense linear algebra and reproducible random streams.

Matrices are plain ``numpy.ndarray`` of float64. Everything here is small
(n <= a few hundred), so clarity wins over speed except in the Cholesky
path, which the GP fits hit repeatedly.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalError, ValidationError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


class Rng:
    """Counter-based (Philox) random stream with labelled splitting.

    ``split(label)`` derives an independent child stream whose seed depends
    only on the parent seed and the label path, never on how many draws the
    parent has made. Parallel trials therefore get stable streams.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self.gen = np.random.Generator(np.random.Philox(ss))

    def split(self, label) -> "Rng":
        digest = hashlib.blake2b(str(label).encode(), digest_size=4).digest()
        return Rng(self.seed, self.path + (int.from_bytes(digest, "little"),))

    def uniform(self, lo=0.0, hi=1.0, size=None):
        return self.gen.uniform(lo, hi, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, lo, hi=None, size=None):
        return self.gen.integers(lo, hi, size)

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path})"


def sym_eig(m, tol: float = 1e-10):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues sorted descending and
    eigenvectors in the columns of ``V``. ``tol`` is the symmetry tolerance
    for the input check; the rotation loop runs until the off-diagonal
    Frobenius norm drops below ``JACOBI_TOL`` relative to ``max(1, ||m||_F)``.
    """
    a = as_matrix(m).copy()
    n, n2 = a.shape
    if n != n2:
        raise ValidationError(f"sym_eig needs a square matrix, got {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        raise ValidationError("sym_eig input is not symmetric within tolerance")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(a)))

    mask = ~np.eye(n, dtype=bool)

    def off(x):
        # direct sum; ||x||^2 - sum(diag^2) cancels catastrophically near convergence
        return float(np.sqrt(np.sum(x[mask] ** 2)))

    for _ in range(JACOBI_MAX_SWEEPS):
        if off(a) <= JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        if off(a) > JACOBI_TOL * scale:
            raise NumericalError(
                f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor; on failure, report the first non-positive pivot."""
    a = as_matrix(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    # Slow path only to locate the failing pivot for the error message.
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - low[j, :j] @ low[j, :j]
        if not d > 0.0:
            raise NumericalError(
                f"matrix is not positive definite: pivot {j} = {d:.3e}", index=j
            )
        low[j, j] = math.sqrt(d)
        low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    # numpy rejected it but the scalar loop passed; trust the loop.
    return low


def cho_solve(low: np.ndarray, b) -> np.ndarray:
    y = solve_triangular(low, b, lower=True)
    return solve_triangular(low.T, y, lower=False)


def cholesky_solve(a, b) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"cholesky_solve needs a square matrix, got {a.shape}")
    b = np.asarray(b, dtype=np.float64)
    return cho_solve(cholesky(a), b)


def loguniform(rng: Rng, lo: float, hi: float) -> float:
    if not lo > 0:
        raise ValidationError(f"loguniform lower bound must be > 0, got {lo}")
    if hi < lo:
        raise ValidationError(f"loguniform upper bound {hi} < lower bound {lo}")
    if hi == lo:
        return float(lo)
    u = rng.uniform(math.log(lo), math.log(hi))
    # exp(log(hi)) can overshoot by one ulp
    return float(min(max(math.exp(u), lo), hi))
