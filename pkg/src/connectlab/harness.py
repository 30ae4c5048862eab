"""Scenario runners. Each returns a ScenarioReport that round-trips through JSON/CSV."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .connectivity import (
    empirical_connectivity,
    exact_connectivity,
    gaussian_bayes_error,
    gaussian_sampler,
)
from .errors import AugmentationError, ValidationError
from .graph import GraphParams, build_connect_later_graph, interpolate_graphs, positive_pair_matrix
from .heads import (
    DEFAULT_ETA,
    FtAugmentation,
    erm_minimizers,
    fit_linear_probe,
    predict_all,
    target_error,
)
from .lightcurve import (
    Cosmology,
    NoiseModel,
    SynthParams,
    accept,
    distance_modulus,
    redshift_augment,
    synth_lightcurve,
)
from .numerics import Rng, loguniform
from .spectral import pretrain_closed_form
from .targeted import GRAPH_AUG_MODES, graph_targeted_aug


@dataclass
class ScenarioReport:
    scenario: str
    config: dict
    seed: int
    metrics: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def __post_init__(self):
        for k, v in self.metrics.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ValidationError(f"metric {k} is not finite: {v}")

    def to_json(self) -> str:
        # wall-clock stays out of the file so reruns are byte-identical
        body = {
            "scenario": self.scenario,
            "seed": self.seed,
            "config": self.config,
            "metrics": self.metrics,
            "tables": self.tables,
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    def table_csv(self, name: str) -> str:
        rows = self.tables[name]
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        return buf.getvalue()

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "report.json"]
        paths[0].write_text(self.to_json())
        for name in self.tables:
            p = out / f"{name}.csv"
            p.write_text(self.table_csv(name))
            paths.append(p)
        return paths


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return v


def config_from_dict(cls, d: dict | None):
    """Build a config dataclass from a (possibly partial) dict; unknown keys are an error."""
    d = dict(d or {})
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ValidationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    for f in fields(cls):
        if f.name in d and isinstance(getattr(cls, f.name, None), tuple):
            d[f.name] = tuple(d[f.name])
    return cls(**d)


# -- 8-node graph reproduction ---------------------------------------------


@dataclass(frozen=True)
class AppendixConfig:
    rho: float = 0.4
    alpha: float = 0.2
    beta: float = 0.1
    gamma: float = 0.05
    eta: float = DEFAULT_ETA
    k_min: int = 1
    k_max: int = 8
    aug_mode: str = "class_consistent"

    def params(self, swapped: bool) -> GraphParams:
        return GraphParams(self.rho, self.alpha, self.beta, self.gamma, swapped=swapped).validate()


def evaluate_graph_pipelines(g, k: int, eta: float, modes=GRAPH_AUG_MODES) -> dict:
    """Target errors of standard fine-tuning and Connect Later (per aug mode) at feature dimension k."""
    enc = pretrain_closed_form(positive_pair_matrix(g), k)
    out = {"standard_ft": target_error(predict_all(fit_linear_probe(enc, g, FtAugmentation.identity(g.n), eta), enc), g)}
    for mode in modes:
        probe = fit_linear_probe(enc, g, graph_targeted_aug(g, mode), eta)
        out[f"connect_later_{mode}"] = target_error(predict_all(probe, enc), g)
    return out


def run_appendix_repro(cfg: AppendixConfig = AppendixConfig(), seed: int = 0) -> ScenarioReport:
    start = time.perf_counter()
    if cfg.aug_mode not in GRAPH_AUG_MODES:
        raise ValidationError(f"aug_mode must be one of {GRAPH_AUG_MODES}")
    if not 1 <= cfg.k_min <= cfg.k_max <= 8:
        raise ValidationError("k range must satisfy 1 <= k_min <= k_max <= 8")
    swapped = build_connect_later_graph(cfg.params(True))
    aligned = build_connect_later_graph(cfg.params(False))
    ks = list(range(cfg.k_min, cfg.k_max + 1))

    rows = []
    for k in ks:
        sw = evaluate_graph_pipelines(swapped, k, cfg.eta)
        al = evaluate_graph_pipelines(aligned, k, cfg.eta, modes=())
        rows.append(
            {
                "k": k,
                "swapped_standard_ft": sw["standard_ft"],
                "swapped_connect_later": sw[f"connect_later_{cfg.aug_mode}"],
                "swapped_connect_later_class_consistent": sw["connect_later_class_consistent"],
                "swapped_connect_later_literal": sw["connect_later_literal"],
                "aligned_probe": al["standard_ft"],
            }
        )

    # cluster-separating k: smallest k where the aligned probe reaches its best error
    best_aligned = min(r["aligned_probe"] for r in rows)
    ref = next(r for r in rows if r["aligned_probe"] == best_aligned)
    cl_best = min(r["swapped_connect_later"] for r in rows)
    cl_best_k = next(r["k"] for r in rows if r["swapped_connect_later"] == cl_best)

    erm_t = erm_minimizers(swapped, graph_targeted_aug(swapped, cfg.aug_mode))
    erm_g = erm_minimizers(aligned, FtAugmentation.from_graph(aligned))
    metrics = {
        "reference_k": ref["k"],
        "standard_ft_error_at_reference_k": ref["swapped_standard_ft"],
        "connect_later_error_at_reference_k": ref["swapped_connect_later"],
        "connect_later_literal_error_at_reference_k": ref["swapped_connect_later_literal"],
        "connect_later_class_consistent_error_at_reference_k": ref["swapped_connect_later_class_consistent"],
        "connect_later_min_error": cl_best,
        "connect_later_best_k": cl_best_k,
        "standard_ft_error_at_connect_later_best_k": rows[cl_best_k - cfg.k_min]["swapped_standard_ft"],
        "standard_ft_max_error": max(r["swapped_standard_ft"] for r in rows),
        "aligned_probe_min_error": best_aligned,
        "erm_targeted_min_error": erm_t.min_target_error,
        "erm_targeted_max_error": erm_t.max_target_error,
        "aligned_generic_erm_min_error": erm_g.min_target_error,
        "aligned_generic_erm_max_error": erm_g.max_target_error,
    }
    tables = {
        "per_k": rows,
        "erm": [
            {"setting": "swapped_targeted", **_erm_row(erm_t, swapped)},
            {"setting": "aligned_generic", **_erm_row(erm_g, aligned)},
        ],
    }
    return ScenarioReport("repro_appendix", asdict(cfg), seed, metrics, tables, time.perf_counter() - start)


def _erm_row(m, g) -> dict:
    tgt = {x + 1 for x in g.target_nodes}
    return {
        "free_target_nodes": " ".join(str(x) for x in m.nodes_with("free") if x in tgt),
        "tied_target_nodes": " ".join(str(x) for x in m.nodes_with("tied") if x in tgt),
        "forced_correct_target_nodes": " ".join(str(x) for x in m.forced_correct(g) if x in tgt),
        "min_target_error": m.min_target_error,
        "max_target_error": m.max_target_error,
    }


# -- misalignment sweep -----------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    steps: int = 21
    k: int = 2
    rho: float = 0.4
    alpha: float = 0.2
    beta: float = 0.1
    gamma: float = 0.05
    eta: float = DEFAULT_ETA


def run_misalignment_sweep(cfg: SweepConfig = SweepConfig(), seed: int = 0) -> ScenarioReport:
    start = time.perf_counter()
    if cfg.steps < 2:
        raise ValidationError("sweep needs at least 2 steps")
    base = dict(rho=cfg.rho, alpha=cfg.alpha, beta=cfg.beta, gamma=cfg.gamma)
    g0 = build_connect_later_graph(GraphParams(**base, swapped=False))
    g1 = build_connect_later_graph(GraphParams(**base, swapped=True))
    rows = []
    for i in range(cfg.steps):
        s = i / (cfg.steps - 1)
        g = interpolate_graphs(g0, g1, s)
        conn = exact_connectivity(positive_pair_matrix(g), g)
        errs = evaluate_graph_pipelines(g, cfg.k, cfg.eta, modes=("class_consistent",))
        rows.append(
            {
                "s": s,
                "ratio_alpha_gamma": conn.ratio_alpha_gamma,
                "ratio_beta_gamma": conn.ratio_beta_gamma,
                "condition_satisfied": conn.condition_satisfied,
                "standard_ft_error": errs["standard_ft"],
                "connect_later_error": errs["connect_later_class_consistent"],
            }
        )
    crossing = None
    for a, b in zip(rows, rows[1:]):
        if (a["ratio_alpha_gamma"] - 1.0) * (b["ratio_alpha_gamma"] - 1.0) <= 0:
            # linear interpolation of the grid crossing
            fa, fb = a["ratio_alpha_gamma"] - 1.0, b["ratio_alpha_gamma"] - 1.0
            crossing = a["s"] + (b["s"] - a["s"]) * (fa / (fa - fb) if fa != fb else 0.0)
            break
    metrics = {
        "standard_ft_error_s0": rows[0]["standard_ft_error"],
        "standard_ft_error_s1": rows[-1]["standard_ft_error"],
        "connect_later_error_s0": rows[0]["connect_later_error"],
        "connect_later_error_s1": rows[-1]["connect_later_error"],
        "ratio_alpha_gamma_s0": rows[0]["ratio_alpha_gamma"],
        "ratio_alpha_gamma_s1": rows[-1]["ratio_alpha_gamma"],
        "alpha_gamma_crossing_s": crossing if crossing is not None else -1.0,
    }
    return ScenarioReport("sweep_misalignment", asdict(cfg), seed, metrics, {"sweep": rows}, time.perf_counter() - start)


# -- connectivity validation ------------------------------------------------


@dataclass(frozen=True)
class ValidationConfig:
    separations: tuple = (0.0, 1.0, 2.0, 4.0, 10.0)
    n_train: int = 2000
    n_test: int = 10000
    n_seeds: int = 5
    tolerance: float = 0.05
    steps: int = 300


def run_connectivity_validation(cfg: ValidationConfig = ValidationConfig(), seed: int = 0) -> ScenarioReport:
    start = time.perf_counter()
    root = Rng(seed).split("connectivity-validate")
    rows = []
    for sep in cfg.separations:
        bayes = gaussian_bayes_error(sep)
        for trial in range(cfg.n_seeds):
            est = empirical_connectivity(
                gaussian_sampler([0.0]),
                gaussian_sampler([float(sep)]),
                cfg.n_train,
                cfg.n_test,
                root.split(f"{sep}/{trial}"),
                steps=cfg.steps,
            )
            rows.append(
                {
                    "separation": float(sep),
                    "trial": trial,
                    "bayes_error": bayes,
                    "estimate": est,
                    "abs_delta": abs(est - bayes),
                    "flagged": abs(est - bayes) > cfg.tolerance,
                }
            )
    metrics = {
        "max_abs_delta": max(r["abs_delta"] for r in rows),
        "n_flagged": sum(r["flagged"] for r in rows),
    }
    return ScenarioReport("connectivity_validate", asdict(cfg), seed, metrics, {"validation": rows}, time.perf_counter() - start)


# -- redshift demo ----------------------------------------------------------


@dataclass(frozen=True)
class PopulationConfig:
    n: int = 500
    z_min: float = 0.05
    z_max: float = 0.4
    # peak flux of an object at reference_z; farther objects dim by the distance modulus
    reference_flux: float = 3000.0
    reference_z: float = 0.1
    luminosity_scatter_mag: float = 0.3
    noise: float = 2.0
    cadence: float = 8.0
    duration: float = 150.0


@dataclass(frozen=True)
class DemoConfig:
    n_source: int = 500
    source_z_min: float = 0.05
    source_z_max: float = 0.4
    n_target: int = 500
    target_z_min: float = 0.1
    target_z_max: float = 1.2
    max_retries: int = 10
    hist_bins: int = 50
    hist_max: float = 3.0


def synth_population(cfg: PopulationConfig, rng: Rng, prefix: str = "obj", cosmo: Cosmology = Cosmology()):
    """Synthetic transients with redshifts loguniform on [z_min, z_max], dimmed by distance.

    Each object's stream is split from ``rng`` by index, so object i does not
    depend on how many draws objects before it consumed.
    """
    mu_ref = distance_modulus(cosmo, cfg.reference_z)
    curves = []
    for i in range(cfg.n):
        r = rng.split(f"{prefix}/{i}")
        z = loguniform(r, cfg.z_min, cfg.z_max)
        mag = distance_modulus(cosmo, z) - mu_ref + r.normal(0.0, cfg.luminosity_scatter_mag)
        stretch = 1.0 + z
        p = SynthParams(
            amplitude=cfg.reference_flux * 10.0 ** (-0.4 * mag),
            t0=float(r.uniform(30.0, 70.0)),
            rise=float(r.uniform(3.0, 6.0)) * stretch,
            fall=float(r.uniform(15.0, 30.0)) * stretch,
            cadence=cfg.cadence,
            duration=cfg.duration,
            noise=cfg.noise,
            redshift=z,
            label=int(r.integers(1, 3)),
        )
        curves.append(synth_lightcurve(p, r, id=f"{prefix}{i:05d}"))
    return curves


def histogram_w1(a, b, bins: int = 50, hi: float = 3.0) -> float:
    """1-D Wasserstein distance between the normalized histograms of a and b on [0, hi]."""
    edges = np.linspace(0.0, hi, bins + 1)
    ha, _ = np.histogram(np.clip(a, 0.0, hi), bins=edges)
    hb, _ = np.histogram(np.clip(b, 0.0, hi), bins=edges)
    ca = np.cumsum(ha) / max(ha.sum(), 1)
    cb = np.cumsum(hb) / max(hb.sum(), 1)
    return float(np.sum(np.abs(ca - cb)) * (hi / bins))


def run_redshift_demo(cfg: DemoConfig = DemoConfig(), seed: int = 0, log=None) -> ScenarioReport:
    start = time.perf_counter()
    if cfg.n_source < 100:
        raise ValidationError("n_source must be >= 100")
    root = Rng(seed).split("redshift-demo")
    cosmo = Cosmology()
    source = synth_population(
        PopulationConfig(n=cfg.n_source, z_min=cfg.source_z_min, z_max=cfg.source_z_max), root.split("source"), "src", cosmo
    )
    target = synth_population(
        PopulationConfig(n=cfg.n_target, z_min=cfg.target_z_min, z_max=cfg.target_z_max), root.split("target"), "tgt", cosmo
    )
    target = [lc for lc in target if accept(lc)]
    noise = NoiseModel.from_population(target)

    aug_rng = root.split("augment")
    augmented, failures, rows = [], 0, []
    for lc in source:
        try:
            out = redshift_augment(lc, noise, cosmo, aug_rng.split(lc.id), max_retries=cfg.max_retries)
        except AugmentationError as exc:
            failures += 1
            if log:
                log(str(exc))
            continue
        augmented.append(out)
        rows.append(
            {
                "id": lc.id,
                "z": lc.redshift,
                "z_prime": out.redshift,
                "retries": out.meta["retries"],
                "n_obs": len(out),
                "accepted": accept(out),
            }
        )

    z_src = np.array([lc.redshift for lc in source])
    z_tgt = np.array([lc.redshift for lc in target])
    z_aug = np.array([lc.redshift for lc in augmented])
    w1 = lambda a, b: histogram_w1(a, b, cfg.hist_bins, cfg.hist_max)  # noqa: E731
    metrics = {
        "w1_source_target": w1(z_src, z_tgt),
        "w1_augmented_target": w1(z_aug, z_tgt),
        "n_source": len(source),
        "n_target_detected": len(target),
        "n_augmented": len(augmented),
        "n_failed": failures,
        "mean_retries": float(np.mean([r["retries"] for r in rows])) if rows else 0.0,
        "mean_z_source": float(z_src.mean()),
        "mean_z_augmented": float(z_aug.mean()) if len(z_aug) else 0.0,
        "mean_z_target": float(z_tgt.mean()),
        "all_accepted": all(r["accepted"] for r in rows),
    }
    cfg_echo = asdict(cfg)
    cfg_echo["noise_model"] = noise.to_dict()
    return ScenarioReport("demo_redshift_dist", cfg_echo, seed, metrics, {"augmented": rows}, time.perf_counter() - start)
