"""Connectivity between class-domain groups, exact and estimated.

Exact values average S+ over unordered node pairs grouped by whether the
two nodes share class and/or domain:

    rho    same class, same domain
    alpha  same class, different domain
    beta   different class, same domain
    gamma  different class, different domain

Estimated values are the held-out error of a binary classifier that tries
to tell two class-domain groups apart: the harder they are to separate,
the more connected they are.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import AugmentationGraph
from .numerics import Rng, as_matrix

CATEGORIES = ("rho", "alpha", "beta", "gamma")
CSV_FIELDS = ("graph_id", "rho", "alpha", "beta", "gamma", "ratio_ag", "ratio_bg", "satisfied")


@dataclass(frozen=True)
class ConnectivityReport:
    rho: float
    alpha: float
    beta: float
    gamma: float
    ratio_alpha_gamma: float
    ratio_beta_gamma: float
    condition_satisfied: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self, graph_id: str) -> dict:
        return {
            "graph_id": graph_id,
            "rho": repr(self.rho),
            "alpha": repr(self.alpha),
            "beta": repr(self.beta),
            "gamma": repr(self.gamma),
            "ratio_ag": repr(self.ratio_alpha_gamma),
            "ratio_bg": repr(self.ratio_beta_gamma),
            "satisfied": str(self.condition_satisfied).lower(),
        }


def reports_to_csv(rows: list[tuple[str, ConnectivityReport]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for gid, rep in rows:
        w.writerow(rep.csv_row(gid))
    return buf.getvalue()


def pair_category(g: AugmentationGraph, i: int, j: int) -> str:
    same_class = g.class_of[i] == g.class_of[j]
    same_domain = g.domain_of[i] == g.domain_of[j]
    if same_class:
        return "rho" if same_domain else "alpha"
    return "beta" if same_domain else "gamma"


def check_transfer_condition(alpha: float, beta: float, gamma: float) -> tuple[bool, float, float]:
    """(alpha > gamma and beta > gamma, alpha/gamma, beta/gamma)."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be > 0 to form ratios, got {gamma}")
    return (alpha > gamma and beta > gamma), alpha / gamma, beta / gamma


def make_report(rho, alpha, beta, gamma) -> ConnectivityReport:
    if gamma > 0:
        ok, rag, rbg = check_transfer_condition(alpha, beta, gamma)
    else:
        ok, rag, rbg = (alpha > gamma and beta > gamma), math.inf, math.inf
    return ConnectivityReport(
        rho=float(rho),
        alpha=float(alpha),
        beta=float(beta),
        gamma=float(gamma),
        ratio_alpha_gamma=float(rag),
        ratio_beta_gamma=float(rbg),
        condition_satisfied=bool(ok),
    )


def exact_connectivity(sp, g: AugmentationGraph, nonzero_only: bool = False) -> ConnectivityReport:
    """Mean S+ weight over all distinct unordered pairs in each category.

    With ``nonzero_only`` the mean runs over pairs with positive weight only.
    """
    sp = as_matrix(sp, "s_plus")
    if sp.shape != (g.n, g.n):
        raise ValidationError("S+ and graph disagree on node count")
    iu, ju = np.triu_indices(g.n, k=1)
    same_c = g.class_of[iu] == g.class_of[ju]
    dom = np.array(g.domain_of)
    same_d = dom[iu] == dom[ju]
    masks = {
        "rho": same_c & same_d,
        "alpha": same_c & ~same_d,
        "beta": ~same_c & same_d,
        "gamma": ~same_c & ~same_d,
    }
    weights = sp[iu, ju]
    means = {}
    for name, mask in masks.items():
        if nonzero_only:
            mask = mask & (weights > 0)
        if not mask.any():
            raise ValidationError(f"connectivity category {name!r} has no node pairs")
        means[name] = float(weights[mask].mean())
    return make_report(**means)


# -- classifier-based estimate ----------------------------------------------


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    loss_history: list[float] = field(default_factory=list)

    def decision(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        return x @ self.weights + self.bias

    def predict_proba(self, x) -> np.ndarray:
        return _sigmoid(self.decision(x))

    def predict(self, x) -> np.ndarray:
        return (self.decision(x) > 0).astype(np.int64)


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def logistic_loss(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray) -> float:
    t = x @ w + b
    # log(1 + e^t) - y t, stable
    return float(np.mean(np.logaddexp(0.0, t) - y * t))


def logistic_grad(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray):
    r = _sigmoid(x @ w + b) - y
    return x.T @ r / len(y), float(r.mean())


def train_logistic(x, y, steps: int = 300, lr: float = 1.0, rng: Rng | None = None) -> LogisticModel:
    """Full-batch gradient descent on mean cross-entropy.

    Inputs are standardized internally and the fitted weights mapped back.
    A step that would raise the loss is rejected and the rate halved, so
    ``loss_history`` is non-increasing.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise ValidationError("x and y lengths differ")
    if not np.all(np.isfinite(x)):
        raise ValidationError("training points must be finite")
    if set(np.unique(y).tolist()) != {0.0, 1.0}:
        raise ValidationError("train_logistic needs both binary classes present")

    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    xs = (x - mu) / sd
    d = x.shape[1]
    if rng is None:
        w = np.zeros(d)
    else:
        w = rng.normal(0.0, 0.01, size=d)
    b = 0.0
    loss = logistic_loss(w, b, xs, y)
    history = [loss]
    for _ in range(steps):
        gw, gb = logistic_grad(w, b, xs, y)
        while True:
            w_new, b_new = w - lr * gw, b - lr * gb
            new_loss = logistic_loss(w_new, b_new, xs, y)
            if new_loss <= loss or lr < 1e-12:
                break
            lr *= 0.5
        if new_loss > loss:
            break
        w, b, loss = w_new, b_new, new_loss
        history.append(loss)
    return LogisticModel(weights=w / sd, bias=float(b - np.sum(w * mu / sd)), loss_history=history)


def empirical_connectivity(
    sampler_a,
    sampler_b,
    n_train: int,
    n_test: int,
    rng: Rng,
    steps: int = 300,
    lr: float = 1.0,
) -> float:
    """Held-out error of a logistic classifier separating draws of a from draws of b.

    Samplers are callables ``(rng, n) -> array`` of shape (n,) or (n, d).
    ``n_train`` and ``n_test`` count points per group.
    """
    if n_train < 100 or n_test < 100:
        raise ValidationError("n_train and n_test must each be >= 100")
    r_train, r_test, r_init = rng.split("train"), rng.split("test"), rng.split("init")

    def draw(r, n):
        a = np.asarray(sampler_a(r, n), dtype=np.float64)
        b = np.asarray(sampler_b(r, n), dtype=np.float64)
        if a.ndim == 1:
            a, b = a[:, None], b[:, None]
        return np.vstack([a, b]), np.concatenate([np.zeros(n), np.ones(n)])

    xtr, ytr = draw(r_train, n_train)
    xte, yte = draw(r_test, n_test)
    model = train_logistic(xtr, ytr, steps=steps, lr=lr, rng=r_init)
    return float(np.mean(model.predict(xte) != yte))


def gaussian_sampler(mean, scale: float = 1.0):
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))

    def draw(rng: Rng, n: int):
        return rng.normal(mean, scale, size=(n, len(mean)))

    return draw


def gaussian_bayes_error(separation: float) -> float:
    """Bayes error between two equal-prior unit Gaussians whose means differ by ``separation``."""
    return 0.5 * math.erfc(abs(separation) / 2.0 / math.sqrt(2.0))
