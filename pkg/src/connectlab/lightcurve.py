"""Synthetic multiband light curves, GP modelling and redshifting augmentation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize_scalar

from .errors import AugmentationError, NumericalError, ValidationError
from .numerics import Rng, cho_solve, cholesky, loguniform

# LSST ugrizy effective wavelengths, Angstrom.
LSST_BANDS = (3671.0, 4827.0, 6223.0, 7546.0, 8691.0, 9712.0)

WAVELENGTH_SCALE = 6000.0
TIME_SCALE_GRID = (10.0, 20.0, 40.0, 80.0, 160.0)
JITTER = 1e-8
JITTER_ESCALATIONS = 3
SEASON_GAP_DAYS = 50.0
DROPOUT_FRAC = 0.1
SNR_THRESHOLD = 5.0
SPEED_OF_LIGHT_KMS = 299792.458


@dataclass(frozen=True, eq=False)
class LightCurve:
    times: np.ndarray
    wavelengths: np.ndarray
    flux: np.ndarray
    flux_err: np.ndarray
    redshift: float
    label: int | None = None
    id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = {}
        for name in ("times", "wavelengths", "flux", "flux_err"):
            a = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"light curve {name} has non-finite values")
            arrays[name] = a
        n = len(arrays["times"])
        if any(len(a) != n for a in arrays.values()):
            raise ValidationError("light curve columns have different lengths")
        if np.any(arrays["flux_err"] <= 0):
            raise ValidationError("flux_err must be strictly positive")
        if np.any(np.diff(arrays["times"]) < 0):
            raise ValidationError("light curve times must be ascending")
        if not self.redshift > 0:
            raise ValidationError(f"redshift must be > 0, got {self.redshift}")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    def __len__(self):
        return len(self.times)

    def subset(self, mask) -> "LightCurve":
        return replace(
            self,
            times=self.times[mask],
            wavelengths=self.wavelengths[mask],
            flux=self.flux[mask],
            flux_err=self.flux_err[mask],
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "wavelength", "flux", "flux_err"])
        for row in zip(self.times, self.wavelengths, self.flux, self.flux_err):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {"redshift": self.redshift, "class": self.label, "id": self.id, **self.meta}

    def save(self, csv_path) -> None:
        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv())
        csv_path.with_suffix(".json").write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, csv_path) -> "LightCurve":
        csv_path = Path(csv_path)
        side = json.loads(csv_path.with_suffix(".json").read_text())
        with csv_path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
        meta = {k: v for k, v in side.items() if k not in ("redshift", "class", "id")}
        return cls(
            times=col("time"),
            wavelengths=col("wavelength"),
            flux=col("flux"),
            flux_err=col("flux_err"),
            redshift=float(side["redshift"]),
            label=side.get("class"),
            id=str(side.get("id", "")),
            meta=meta,
        )


# -- synthesis --------------------------------------------------------------


def bazin(t, amplitude, t0, rise, fall):
    """A e^{-(t-t0)/fall} / (1 + e^{-(t-t0)/rise})."""
    dt = np.asarray(t, dtype=np.float64) - t0
    # e^{-dt/fall} / (1 + e^{-dt/rise}) written to avoid overflow for dt << 0
    return amplitude * np.exp(-dt / fall - np.logaddexp(0.0, -dt / rise))


def bazin_peak_time(t0, rise, fall):
    if not fall > rise:
        raise ValidationError("Bazin pulse has an interior peak only when fall > rise")
    return t0 + rise * math.log(fall / rise - 1.0)


def sed_weight(wavelength, center=5500.0, width=2500.0):
    """Smooth colour term; relative amplitude of the pulse at a given wavelength."""
    return np.exp(-0.5 * ((np.asarray(wavelength) - center) / width) ** 2)


@dataclass(frozen=True)
class SynthParams:
    amplitude: float = 100.0
    t0: float = 50.0
    rise: float = 5.0
    fall: float = 25.0
    bands: tuple = LSST_BANDS
    cadence: float = 6.0
    duration: float = 200.0
    noise: float = 2.0
    redshift: float = 0.1
    label: int | None = None


def synth_lightcurve(params: SynthParams, rng: Rng, id: str = "") -> LightCurve:
    """Bazin pulse sampled every ``cadence`` days in each band, bands staggered within a cycle."""
    p = params
    if not (p.rise > 0 and p.fall > 0 and p.cadence > 0 and p.duration > 0 and p.noise > 0):
        raise ValidationError("rise, fall, cadence, duration and noise must be positive")
    if p.amplitude < 0:
        raise ValidationError("amplitude must be >= 0")
    times, waves = [], []
    nb = len(p.bands)
    for j, w in enumerate(p.bands):
        t = np.arange(0.0, p.duration, p.cadence) + p.cadence * j / nb
        times.append(t)
        waves.append(np.full(len(t), float(w)))
    t = np.concatenate(times)
    w = np.concatenate(waves)
    order = np.argsort(t, kind="stable")
    t, w = t[order], w[order]
    truth = bazin(t, p.amplitude, p.t0, p.rise, p.fall) * sed_weight(w)
    err = np.full(len(t), float(p.noise))
    flux = truth + rng.normal(0.0, 1.0, size=len(t)) * err
    return LightCurve(t, w, flux, err, redshift=p.redshift, label=p.label, id=id)


# -- Gaussian process -------------------------------------------------------


def matern32(t1, w1, t2, w2, amplitude, time_scale, wave_scale=WAVELENGTH_SCALE):
    dt = (np.asarray(t1)[:, None] - np.asarray(t2)[None, :]) / time_scale
    dw = (np.asarray(w1)[:, None] - np.asarray(w2)[None, :]) / wave_scale
    r = np.sqrt(3.0) * np.sqrt(dt * dt + dw * dw)
    return amplitude**2 * (1.0 + r) * np.exp(-r)


@dataclass(frozen=True, eq=False)
class GaussianProcessModel:
    """Zero-mean GP with a Matern-3/2 kernel over (time, wavelength)."""

    times: np.ndarray
    wavelengths: np.ndarray
    flux: np.ndarray
    flux_err: np.ndarray
    amplitude: float
    time_scale: float
    wave_scale: float
    chol: np.ndarray
    alpha: np.ndarray
    log_likelihood: float
    jitter: float = 0.0

    def _k(self, t, w):
        return matern32(self.times, self.wavelengths, t, w, self.amplitude, self.time_scale, self.wave_scale)

    def predict(self, t, w):
        """Posterior mean and standard deviation of the latent flux at (t, w)."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        w = np.atleast_1d(np.asarray(w, dtype=np.float64))
        ks = self._k(t, w)
        mean = ks.T @ self.alpha
        v = solve_triangular(self.chol, ks, lower=True) if ks.size else ks
        var = self.amplitude**2 - np.sum(v * v, axis=0)
        return mean, np.sqrt(np.clip(var, 0.0, None))

    @property
    def prior_variance(self) -> float:
        return self.amplitude**2


def _factorize(t, w, flux, err, amplitude, time_scale, wave_scale):
    k = matern32(t, w, t, w, amplitude, time_scale, wave_scale) + np.diag(err**2)
    jitter = 0.0
    last = None
    for attempt in range(JITTER_ESCALATIONS + 1):
        try:
            low = cholesky(k + jitter * np.eye(len(t)))
            break
        except NumericalError as exc:
            last = exc
            jitter = JITTER * (10.0**attempt) * max(1.0, float(np.mean(np.diag(k))))
    else:
        raise NumericalError(
            f"GP covariance not positive definite after {JITTER_ESCALATIONS} jitter escalations "
            f"(last jitter {jitter:.1e}): {last}"
        )
    alpha = cho_solve(low, flux)
    loglik = -0.5 * flux @ alpha - np.sum(np.log(np.diag(low))) - 0.5 * len(t) * math.log(2 * math.pi)
    return low, alpha, float(loglik), jitter


def gp_log_likelihood(lc: LightCurve, time_scale: float, amplitude=None, wave_scale=WAVELENGTH_SCALE) -> float:
    amp = _default_amplitude(lc) if amplitude is None else amplitude
    return _factorize(lc.times, lc.wavelengths, lc.flux, lc.flux_err, amp, time_scale, wave_scale)[2]


def _default_amplitude(lc: LightCurve) -> float:
    return float(max(np.max(np.abs(lc.flux)), np.max(lc.flux_err)))


def profile_amplitude(lc: LightCurve, time_scale: float, wave_scale=WAVELENGTH_SCALE) -> float:
    """Amplitude maximizing the marginal likelihood at a fixed time length scale."""
    top = _default_amplitude(lc)
    res = minimize_scalar(
        lambda la: -gp_log_likelihood(lc, time_scale, math.exp(la), wave_scale),
        bounds=(math.log(1e-3 * top), math.log(10.0 * top)),
        method="bounded",
        options={"xatol": 1e-2},
    )
    return float(math.exp(res.x))


def fit_gp(lc: LightCurve, length_scale_grid=TIME_SCALE_GRID, wave_scale=WAVELENGTH_SCALE) -> GaussianProcessModel:
    """Pick the time length scale on the grid by marginal likelihood.

    At each grid point the amplitude is profiled out by a bounded 1-D search,
    so the reported likelihood is the best over amplitudes for that scale.
    """
    if len(lc) < 2:
        raise ValidationError("fit_gp needs at least 2 observations")
    grid = [float(s) for s in length_scale_grid]
    if not grid or min(grid) <= 0:
        raise ValidationError("length-scale grid must be non-empty and positive")
    best = None
    for scale in grid:
        a = profile_amplitude(lc, scale, wave_scale)
        low, alpha, ll, jit = _factorize(lc.times, lc.wavelengths, lc.flux, lc.flux_err, a, scale, wave_scale)
        if best is None or ll > best[2]:
            best = (low, alpha, ll, jit, scale, a)
    low, alpha, ll, jit, scale, amp = best
    return GaussianProcessModel(
        times=lc.times,
        wavelengths=lc.wavelengths,
        flux=lc.flux,
        flux_err=lc.flux_err,
        amplitude=amp,
        time_scale=scale,
        wave_scale=wave_scale,
        chol=low,
        alpha=alpha,
        log_likelihood=ll,
        jitter=jit,
    )


# -- cosmology --------------------------------------------------------------


@dataclass(frozen=True)
class Cosmology:
    hubble_constant: float = 70.0
    omega_matter: float = 0.3

    def __post_init__(self):
        if not (self.hubble_constant > 0 and 0 < self.omega_matter <= 1):
            raise ValidationError("cosmology parameters must be positive with omega_matter <= 1")

    @property
    def omega_lambda(self) -> float:
        return 1.0 - self.omega_matter

    @property
    def hubble_distance_mpc(self) -> float:
        return SPEED_OF_LIGHT_KMS / self.hubble_constant

    def inv_e(self, z):
        z = np.asarray(z, dtype=np.float64)
        return 1.0 / np.sqrt(self.omega_matter * (1.0 + z) ** 3 + self.omega_lambda)


def trapezoid_adaptive(f, a: float, b: float, rtol: float = 1e-8, max_level: int = 24):
    """Trapezoid rule with interval halving until successive estimates agree to ``rtol``."""
    n = 1
    h = b - a
    total = 0.5 * h * (f(a) + f(b))
    for _ in range(max_level):
        mids = a + h * (np.arange(n) + 0.5)
        refined = 0.5 * total + 0.5 * h * float(np.sum(f(mids)))
        n *= 2
        h *= 0.5
        if abs(refined - total) <= rtol * abs(refined):
            return refined
        total = refined
    raise NumericalError(f"trapezoid integration did not reach rtol={rtol}")


def comoving_distance_mpc(c: Cosmology, z: float, rtol: float = 1e-8) -> float:
    return c.hubble_distance_mpc * trapezoid_adaptive(c.inv_e, 0.0, float(z), rtol)


def luminosity_distance_mpc(c: Cosmology, z: float, rtol: float = 1e-8) -> float:
    if not z > 0:
        raise ValidationError(f"redshift must be > 0, got {z}")
    return (1.0 + z) * comoving_distance_mpc(c, z, rtol)


def distance_modulus(c: Cosmology, z: float, rtol: float = 1e-8) -> float:
    """5 log10(d_L / 10 pc)."""
    return 5.0 * math.log10(luminosity_distance_mpc(c, z, rtol) * 1e5)


def flux_scale(c: Cosmology, z: float, z_new: float) -> float:
    """Multiplicative flux factor for moving an object from z to z_new (dimmer when farther)."""
    if z == z_new:
        if not z > 0:
            raise ValidationError(f"redshift must be > 0, got {z}")
        return 1.0
    return 10.0 ** (-0.4 * (distance_modulus(c, z_new) - distance_modulus(c, z)))


# -- augmentation pieces ----------------------------------------------------


def redshift_bounds(z: float) -> tuple[float, float]:
    if not z > 0:
        raise ValidationError(f"redshift must be > 0, got {z}")
    return 0.95 * z, min(1.5 * (1.0 + z) - 1.0, 5.0 * z)


def sample_new_redshift(z: float, rng: Rng) -> float:
    lo, hi = redshift_bounds(z)
    return loguniform(rng, lo, hi)


def rescale_grid(times, wavelengths, z: float, z_new: float):
    if not (z > 0 and z_new > 0):
        raise ValidationError("redshifts must be > 0")
    factor = (1.0 + z_new) / (1.0 + z)
    return np.asarray(times, dtype=np.float64) * factor, np.asarray(wavelengths, dtype=np.float64) * factor


def season_dropout(times, rng: Rng, frac: float = DROPOUT_FRAC, gap_days: float = SEASON_GAP_DAYS) -> np.ndarray:
    """Boolean keep-mask: drop each point with probability ``frac``, then one window of ``gap_days``.

    The window start is uniform on [min(t) - gap_days, max(t)], so every
    point is equally exposed to the gap.
    """
    if gap_days < 0:
        raise ValidationError(f"gap_days must be >= 0, got {gap_days}")
    if not 0.0 <= frac <= 1.0:
        raise ValidationError(f"frac must be in [0, 1], got {frac}")
    t = np.asarray(times, dtype=np.float64)
    keep = rng.random(len(t)) >= frac
    if gap_days > 0 and len(t):
        start = rng.uniform(t.min() - gap_days, t.max())
        keep &= ~((t >= start) & (t < start + gap_days))
    return keep


def snr(x, x_err):
    x_err = np.asarray(x_err, dtype=np.float64)
    if np.any(x_err <= 0):
        raise ValidationError("flux error must be > 0")
    out = np.abs(np.asarray(x, dtype=np.float64)) / x_err
    return float(out) if out.ndim == 0 else out


def accept(lc: LightCurve, threshold: float = SNR_THRESHOLD, strict: bool = False, min_count: int = 2) -> bool:
    """At least ``min_count`` observations with SNR >= threshold (> with ``strict``)."""
    if len(lc) == 0:
        return False
    s = snr(lc.flux, lc.flux_err)
    hits = s > threshold if strict else s >= threshold
    return int(np.count_nonzero(hits)) >= min_count


@dataclass(frozen=True)
class NoiseModel:
    """Piecewise-constant noise level over wavelength.

    ``edges`` are the upper wavelength edges of each band bin (ascending);
    wavelengths beyond the last edge use the last level.
    """

    edges: tuple
    levels: tuple

    def __post_init__(self):
        if len(self.edges) != len(self.levels) or not self.levels:
            raise ValidationError("noise model needs one level per edge")
        if any(l < 0 for l in self.levels):
            raise ValidationError("noise levels must be nonnegative")
        if list(self.edges) != sorted(self.edges):
            raise ValidationError("noise model edges must be ascending")

    def level(self, wavelengths) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.edges), np.asarray(wavelengths), side="left")
        return np.asarray(self.levels)[np.minimum(idx, len(self.levels) - 1)]

    @classmethod
    def zero(cls, bands=LSST_BANDS) -> "NoiseModel":
        return cls.from_levels(bands, [0.0] * len(bands))

    @classmethod
    def from_levels(cls, bands, levels) -> "NoiseModel":
        bands = sorted(float(b) for b in bands)
        edges = [0.5 * (a + b) for a, b in zip(bands[:-1], bands[1:])] + [math.inf]
        return cls(tuple(edges), tuple(float(l) for l in levels))

    @classmethod
    def from_population(cls, curves, bands=LSST_BANDS) -> "NoiseModel":
        """Median flux error per band over a (target) population."""
        bands = sorted(float(b) for b in bands)
        errs = {b: [] for b in bands}
        for lc in curves:
            nearest = np.asarray(bands)[np.argmin(np.abs(lc.wavelengths[:, None] - np.asarray(bands)[None, :]), axis=1)]
            for b, e in zip(nearest, lc.flux_err):
                errs[float(b)].append(e)
        return cls.from_levels(bands, [float(np.median(errs[b])) if errs[b] else 0.0 for b in bands])

    def to_dict(self) -> dict:
        return {"edges": [None if math.isinf(e) else e for e in self.edges], "levels": list(self.levels)}


def redshift_augment(
    lc: LightCurve,
    noise: NoiseModel,
    cosmo: Cosmology = Cosmology(),
    rng: Rng | None = None,
    max_retries: int = 10,
    *,
    gp: GaussianProcessModel | None = None,
    z_new: float | None = None,
    dropout_frac: float = DROPOUT_FRAC,
    gap_days: float = SEASON_GAP_DAYS,
    strict_snr: bool = False,
    length_scale_grid=TIME_SCALE_GRID,
) -> LightCurve:
    """Place ``lc`` at a new redshift and resample it through a GP fit.

    ``z_new`` pins the new redshift instead of drawing it (used for
    self-consistency checks). Raises ``AugmentationError`` when no draw is
    accepted within ``max_retries`` attempts.
    """
    if rng is None:
        raise ValidationError("redshift_augment needs an Rng")
    if len(lc) < 5:
        raise ValidationError("redshift_augment needs at least 5 observations")
    if gp is None:
        gp = fit_gp(lc, length_scale_grid)
    z = lc.redshift
    for attempt in range(1, max_retries + 1):
        z2 = sample_new_redshift(z, rng) if z_new is None else float(z_new)
        t_new, w_new = rescale_grid(lc.times, lc.wavelengths, z, z2)
        keep = season_dropout(t_new, rng, dropout_frac, gap_days)
        if not keep.any():
            continue
        t_new, w_new = t_new[keep], w_new[keep]
        mean, std = gp.predict(t_new, w_new)
        scale = flux_scale(cosmo, z, z2)
        mean, std = scale * mean, scale * std
        eps = noise.level(w_new)
        flux = mean + rng.normal(0.0, 1.0, size=len(t_new)) * eps
        err = np.sqrt(std**2 + eps**2)
        # noiseless GP at a training point can report ~0 std
        err = np.maximum(err, 1e-12 * max(1.0, gp.amplitude))
        out = LightCurve(
            times=t_new,
            wavelengths=w_new,
            flux=flux,
            flux_err=err,
            redshift=z2,
            label=lc.label,
            id=f"{lc.id}~aug" if lc.id else "",
            meta={"parent_id": lc.id, "z_prime": z2, "retries": attempt - 1},
        )
        if accept(out, strict=strict_snr):
            return out
    raise AugmentationError(f"light curve {lc.id!r}: no accepted redshifting in {max_retries} attempts")
