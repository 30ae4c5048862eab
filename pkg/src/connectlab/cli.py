"""Command-line entry point: ``connectlab <group> <action> [--config F] [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 usage, 2 validation, 3 numerical failure,
4 augmentation exhaustion.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import harness
from .connectivity import (
    empirical_connectivity,
    exact_connectivity,
    gaussian_bayes_error,
    gaussian_sampler,
    reports_to_csv,
)
from .errors import ConnectLabError, ValidationError
from .graph import graph_from_config, positive_pair_matrix
from .lightcurve import LSST_BANDS, Cosmology, LightCurve, NoiseModel, redshift_augment
from .numerics import Rng
from .targeted import read_ppm, stain_color_jitter, write_ppm

log = logging.getLogger("connectlab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    return cfg


# -- handlers ---------------------------------------------------------------


def cmd_repro_appendix(args, cfg):
    return harness.run_appendix_repro(harness.config_from_dict(harness.AppendixConfig, cfg), args.seed)


def cmd_sweep_misalignment(args, cfg):
    return harness.run_misalignment_sweep(harness.config_from_dict(harness.SweepConfig, cfg), args.seed)


def cmd_connectivity_exact(args, cfg):
    nonzero = bool(cfg.pop("nonzero_only", False))
    graphs = cfg.pop("graphs", None)
    if graphs is None:
        if cfg:
            graphs = {cfg.get("id", "graph"): cfg}
        else:
            graphs = {
                "aligned": {"swapped": False},
                "swapped": {"swapped": True},
            }
    rows, metrics = [], {}
    for gid, gcfg in graphs.items():
        gcfg = {k: v for k, v in gcfg.items() if k != "id"}
        g = graph_from_config(gcfg)
        rep = exact_connectivity(positive_pair_matrix(g), g, nonzero_only=nonzero)
        rows.append((gid, rep))
        metrics[gid] = rep.to_dict()
    report = harness.ScenarioReport(
        "connectivity_exact", {"graphs": graphs, "nonzero_only": nonzero}, args.seed, {}, {}
    )
    report.metrics = metrics
    return report, {"connectivity.csv": reports_to_csv(rows)}


def cmd_connectivity_estimate(args, cfg):
    mean_a = cfg.get("mean_a", [0.0])
    mean_b = cfg.get("mean_b", [2.0])
    scale = float(cfg.get("scale", 1.0))
    n_train = int(cfg.get("n_train", 2000))
    n_test = int(cfg.get("n_test", 10000))
    steps = int(cfg.get("steps", 300))
    est = empirical_connectivity(
        gaussian_sampler(mean_a, scale),
        gaussian_sampler(mean_b, scale),
        n_train,
        n_test,
        Rng(args.seed).split("connectivity-estimate"),
        steps=steps,
    )
    sep = sum((float(a) - float(b)) ** 2 for a, b in zip(mean_a, mean_b)) ** 0.5 / scale
    echo = dict(mean_a=mean_a, mean_b=mean_b, scale=scale, n_train=n_train, n_test=n_test, steps=steps)
    return harness.ScenarioReport(
        "connectivity_estimate", echo, args.seed, {"estimate": est, "bayes_error": gaussian_bayes_error(sep)}
    )


def cmd_connectivity_validate(args, cfg):
    return harness.run_connectivity_validation(harness.config_from_dict(harness.ValidationConfig, cfg), args.seed)


def cmd_augment_redshift(args, cfg):
    src = args.input or cfg.pop("input", None)
    if src is None:
        raise ValidationError("augment redshift needs --input <lightcurve.csv> (or 'input' in the config)")
    lc = LightCurve.load(src)
    n_aug = int(cfg.get("n_augment", 1))
    levels = cfg.get("noise_levels")
    bands = cfg.get("bands", list(LSST_BANDS))
    noise = NoiseModel.from_levels(bands, levels) if levels is not None else NoiseModel.zero(bands)
    kwargs = {
        k: cfg[k] for k in ("z_new", "dropout_frac", "gap_days", "strict_snr") if k in cfg
    }
    max_retries = int(cfg.get("max_retries", 10))
    root = Rng(args.seed).split("augment-redshift")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(n_aug):
        aug = redshift_augment(lc, noise, Cosmology(), root.split(i), max_retries=max_retries, **kwargs)
        name = f"{lc.id or 'lightcurve'}_aug{i:03d}"
        aug = LightCurve(
            aug.times, aug.wavelengths, aug.flux, aug.flux_err, aug.redshift, aug.label, name, aug.meta
        )
        aug.save(out / f"{name}.csv")
        rows.append({"id": name, "z": lc.redshift, "z_prime": aug.redshift, "retries": aug.meta["retries"], "n_obs": len(aug)})
    echo = {"input": str(src), "n_augment": n_aug, "max_retries": max_retries, "noise": noise.to_dict(), **kwargs}
    return harness.ScenarioReport("augment_redshift", echo, args.seed, {"n_augmented": len(rows)}, {"augmented": rows})


def cmd_augment_stain(args, cfg):
    src = args.input or cfg.pop("input", None)
    if src is None:
        raise ValidationError("augment stain needs --input <image.ppm> (or 'input' in the config)")
    sigma = float(args.sigma if args.sigma is not None else cfg.get("sigma", 0.05))
    img = read_ppm(src)
    out_img = stain_color_jitter(img, sigma, Rng(args.seed).split("stain"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ppm(out_img, out / "jittered.ppm")
    diff = abs(out_img.pixels.astype(int) - img.pixels.astype(int))
    return harness.ScenarioReport(
        "augment_stain",
        {"input": str(src), "sigma": sigma},
        args.seed,
        {"max_abs_channel_change": int(diff.max()), "mean_abs_channel_change": float(diff.mean())},
    )


def cmd_synth_lightcurves(args, cfg):
    pcfg = harness.config_from_dict(harness.PopulationConfig, cfg)
    curves = harness.synth_population(pcfg, Rng(args.seed).split("synth"), prefix="lc")
    out = Path(args.out) / "curves"
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for lc in curves:
        lc.save(out / f"{lc.id}.csv")
        rows.append({"id": lc.id, "redshift": lc.redshift, "class": lc.label, "n_obs": len(lc)})
    return harness.ScenarioReport("synth_lightcurves", asdict(pcfg), args.seed, {"n": len(curves)}, {"index": rows})


def cmd_demo_redshift(args, cfg):
    return harness.run_redshift_demo(harness.config_from_dict(harness.DemoConfig, cfg), args.seed, log=log.warning)


COMMANDS = {
    ("repro", "appendix"): cmd_repro_appendix,
    ("sweep", "misalignment"): cmd_sweep_misalignment,
    ("connectivity", "exact"): cmd_connectivity_exact,
    ("connectivity", "estimate"): cmd_connectivity_estimate,
    ("connectivity", "validate"): cmd_connectivity_validate,
    ("augment", "redshift"): cmd_augment_redshift,
    ("augment", "stain"): cmd_augment_stain,
    ("synth", "lightcurves"): cmd_synth_lightcurves,
    ("demo", "redshift-dist"): cmd_demo_redshift,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="connectlab", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)
    subs = {}
    for group, action in COMMANDS:
        if group not in subs:
            subs[group] = groups.add_parser(group).add_subparsers(dest="action", required=True, parser_class=_Parser)
        p = subs[group].add_parser(action)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed (default 0)")
        p.add_argument("--out", default="out", help="output directory (default ./out)")
        if group == "augment":
            p.add_argument("--input", help="input light curve CSV or PPM image")
        if (group, action) == ("augment", "stain"):
            p.add_argument("--sigma", type=float, help="jitter strength in [0, 1]")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    handler = COMMANDS[(args.group, args.action)]
    try:
        if not 0 <= args.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {args.seed}")
        cfg = _load_config(args.config)
        result = handler(args, cfg)
        extra = {}
        if isinstance(result, tuple):
            result, extra = result
        out = Path(args.out)
        paths = result.write(out)
        for name, text in extra.items():
            (out / name).write_text(text)
            paths.append(out / name)
    except ConnectLabError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    log.info("%s %s done in %.2fs -> %s", args.group, args.action, result.wall_clock, ", ".join(str(p) for p in paths))
    return 0


if __name__ == "__main__":
    sys.exit(main())
