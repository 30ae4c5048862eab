import json
from pathlib import Path

import numpy as np
import pytest

from connectlab.cli import main
from connectlab.lightcurve import LightCurve, SynthParams, synth_lightcurve
from connectlab.numerics import Rng
from connectlab.targeted import RgbImage, write_ppm


@pytest.fixture(scope="module")
def inputs(tmp_path_factory):
    d = tmp_path_factory.mktemp("inputs")
    lc = synth_lightcurve(SynthParams(amplitude=200.0, rise=10.0, fall=40.0), Rng(0), id="obj")
    lc.save(d / "obj.csv")
    img = RgbImage(np.random.default_rng(0).integers(0, 256, (24, 24, 3), dtype=np.uint8))
    write_ppm(img, d / "img.ppm")
    cfgs = {
        "sweep": {"steps": 5},
        "validate": {"separations": [0.0, 2.0], "n_train": 300, "n_test": 1000, "n_seeds": 2},
        "estimate": {"mean_a": [0.0], "mean_b": [2.0], "n_train": 500, "n_test": 2000},
        "redshift": {"n_augment": 3, "noise_levels": [1, 1, 1, 1, 1, 1]},
        "synth": {"n": 5},
        "demo": {"n_source": 100, "n_target": 100},
    }
    for name, c in cfgs.items():
        (d / f"{name}.json").write_text(json.dumps(c))
    return d


COMMANDS = [
    ("repro", "appendix", None, []),
    ("sweep", "misalignment", "sweep", []),
    ("connectivity", "exact", None, []),
    ("connectivity", "estimate", "estimate", []),
    ("connectivity", "validate", "validate", []),
    ("augment", "redshift", "redshift", ["--input", "{d}/obj.csv"]),
    ("augment", "stain", None, ["--input", "{d}/img.ppm", "--sigma", "0.1"]),
    ("synth", "lightcurves", "synth", []),
    ("demo", "redshift-dist", "demo", []),
]


def _snapshot(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.parametrize("group,action,cfg,extra", COMMANDS, ids=[f"{g}-{a}" for g, a, _, _ in COMMANDS])
def test_subcommand_is_deterministic(tmp_path, inputs, group, action, cfg, extra):
    snaps = []
    for run in ("a", "b"):
        argv = [group, action, "--seed", "7", "--out", str(tmp_path / run)]
        if cfg:
            argv += ["--config", str(inputs / f"{cfg}.json")]
        argv += [x.format(d=inputs) for x in extra]
        assert main(argv) == 0
        snaps.append(_snapshot(tmp_path / run))
    assert "report.json" in snaps[0]
    assert snaps[0] == snaps[1]


def test_connectivity_exact_csv(tmp_path):
    assert main(["connectivity", "exact", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "connectivity.csv").read_text().splitlines()
    assert lines[0] == "graph_id,rho,alpha,beta,gamma,ratio_ag,ratio_bg,satisfied"
    assert lines[1].startswith("aligned,") and lines[1].endswith(",true")
    assert lines[2].startswith("swapped,") and lines[2].endswith(",false")


def test_augment_redshift_outputs_mirror_schema(tmp_path, inputs):
    assert main(["augment", "redshift", "--input", str(inputs / "obj.csv"), "--out", str(tmp_path)]) == 0
    lc = LightCurve.load(tmp_path / "obj_aug000.csv")
    assert set(lc.meta) == {"parent_id", "z_prime", "retries"}
    assert lc.meta["parent_id"] == "obj" and lc.redshift == lc.meta["z_prime"]


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["repro", "nonsense"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_validation_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"steps": 1}))
    assert main(["sweep", "misalignment", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    bad.write_text(json.dumps({"unknown_key": 1}))
    assert main(["repro", "appendix", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["repro", "appendix", "--seed", "-1", "--out", str(tmp_path / "o")]) == 2
    assert main(["augment", "stain", "--out", str(tmp_path / "o")]) == 2


def test_augmentation_exit_code(tmp_path):
    n = 10
    faint = LightCurve(np.arange(n, dtype=float), np.full(n, 5000.0), np.full(n, 0.1), np.ones(n), 0.1, id="faint")
    faint.save(tmp_path / "faint.csv")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"max_retries": 2}))
    code = main(["augment", "redshift", "--input", str(tmp_path / "faint.csv"), "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 4


def test_numerical_exit_code(tmp_path, monkeypatch):
    from connectlab import harness
    from connectlab.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("forced")

    monkeypatch.setattr(harness, "run_appendix_repro", boom)
    assert main(["repro", "appendix", "--out", str(tmp_path)]) == 3
