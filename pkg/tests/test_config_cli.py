import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from slowfast_burgers import cli
from slowfast_burgers.config import (
    THREADS_ENV_VAR,
    default_threads,
    experiment_from_dict,
    load_experiment,
)
from slowfast_burgers.harness import ConfigurationError

BASE = {
    "model": {
        "n_modes": 8,
        "burgers": True,
        "f": {"kind": "linear_in_y", "kappa_f": 1.0},
        "g": {"kind": "linear_coupled", "kappa_g": 1.0, "c_g": 0.0},
        "x0": {"kind": "modes", "coeffs": [1.0, 0.0, 0.5]},
        "y0": {"kind": "zero"},
    },
    "noise": {
        "q1": {"law": "power", "exponent": 4.0, "amplitude": 0.5},
        "q2": {"law": "power", "exponent": 2.0, "amplitude": 0.5},
    },
    "stepper": {"h": 0.03125, "T": 0.25},
    "experiment": {
        "eps_grid": [0.1, 0.05],
        "replicas": 4,
        "q1_mode": "off",
        "phi": {"kind": "gaussian_of_norm", "level": 4},
        "seed": 7,
    },
}


def write_cfg(tmp_path, doc=None, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc if doc is not None else BASE))
    return path


def test_experiment_from_dict_roundtrip():
    cfg = experiment_from_dict(BASE)
    assert cfg.n_modes == 8
    assert cfg.pair.f_kind == "linear_in_y" and cfg.pair.kappa_g == 1.0
    assert cfg.x0[0] == 1.0 and cfg.x0[2] == 0.5 and cfg.x0.size == 8
    assert np.all(cfg.y0 == 0.0)
    assert not cfg.q1_on
    assert cfg.q1.decay == ("power", 4.0, 0.5)
    assert cfg.stepper.h == 0.03125
    assert cfg.eps_grid == (0.1, 0.05)
    assert cfg.seed == 7
    assert cfg.phi.level == 4


def test_initial_field_kinds():
    doc = {**BASE, "model": {**BASE["model"], "x0": {"kind": "power_law", "theta": 1.0, "amplitude": 2.0}}}
    cfg = experiment_from_dict(doc)
    k = np.arange(1, 9)
    assert np.allclose(cfg.x0, 2.0 * k ** -(1.51))
    assert "H^1.0" in cfg.theta_label
    with pytest.raises(ConfigurationError):
        experiment_from_dict(
            {**BASE, "model": {**BASE["model"], "x0": {"kind": "spiky"}}}
        )
    with pytest.raises(ConfigurationError):
        experiment_from_dict(
            {**BASE, "model": {**BASE["model"], "x0": {"kind": "modes", "coeffs": [0.0] * 99}}}
        )


def test_noise_laws():
    doc = {**BASE, "noise": {"q1": {"law": "zero"}, "q2": {"law": "explicit", "alphas": [1, 0.5, 0.2, 0.1, 0, 0, 0, 0]}}}
    cfg = experiment_from_dict(doc)
    assert cfg.q1.is_zero
    assert cfg.q2.alphas[1] == 0.5
    with pytest.raises(ConfigurationError):
        experiment_from_dict(
            {**BASE, "noise": {"q2": {"law": "explicit", "alphas": [1.0]}}}
        )
    with pytest.raises(ConfigurationError):
        experiment_from_dict({**BASE, "noise": {"q2": {"law": "fractal"}}})


def test_overrides_and_env(tmp_path, monkeypatch):
    path = write_cfg(tmp_path)
    cfg = load_experiment(path, seed_override=99, threads_override=3)
    assert cfg.seed == 99 and cfg.threads == 3
    monkeypatch.setenv(THREADS_ENV_VAR, "5")
    assert default_threads() == 5
    assert load_experiment(path).threads == 5
    monkeypatch.setenv(THREADS_ENV_VAR, "oops")
    assert default_threads() == 1


def test_cli_check_conditions(tmp_path, capsys):
    path = write_cfg(tmp_path)
    rc = cli.main(["check-conditions", "--config", str(path), "--out", str(tmp_path / "o")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "[PASS] A2" in out
    bad = {**BASE, "model": {**BASE["model"], "g": {"kind": "linear_coupled", "kappa_g": 10.0}}}
    rc = cli.main(["check-conditions", "--config", str(write_cfg(tmp_path, bad, "bad.yaml")), "--out", str(tmp_path / "o")])
    assert rc == 1


def test_cli_simulate(tmp_path):
    path = write_cfg(tmp_path)
    out = tmp_path / "sim"
    rc = cli.main(["simulate", "--config", str(path), "--out", str(out), "--eps", "0.05"])
    assert rc == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,x_1")
    assert len(lines) == 2 + round(0.25 / 0.03125)


def test_cli_weak_rate_and_unsupported(tmp_path):
    path = write_cfg(tmp_path)
    out = tmp_path / "w"
    rc = cli.main(["weak-rate", "--config", str(path), "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "weak-rate.json").read_text())
    assert report["metadata"]["seed"] == 7
    assert (out / "weak-rate.csv").exists()

    q1_on = {**BASE, "experiment": {**BASE["experiment"], "q1_mode": "on"}}
    p2 = write_cfg(tmp_path, q1_on, "on.yaml")
    with pytest.raises(ConfigurationError):
        cli.main(["weak-rate", "--config", str(p2), "--out", str(out)])
    rc = cli.main(["weak-rate", "--config", str(p2), "--out", str(out), "--unsupported"])
    assert rc == 0


def test_cli_fbar(tmp_path, capsys):
    path = write_cfg(tmp_path)
    rc = cli.main(["fbar", "--config", str(path), "--out", str(tmp_path / "o"), "--mode", "analytic"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "fbar(analytic)" in out and "stderr=0" in out


def test_cli_khasminskii(tmp_path):
    doc = {
        **BASE,
        "stepper": {"h": 0.025, "T": 0.25},
        "experiment": {
            **BASE["experiment"],
            "eps_grid": [0.01],
            "delta_grid": [0.1, 0.05],
            "q1_mode": "on",
            "replicas": 4,
        },
    }
    out = tmp_path / "k"
    rc = cli.main(["khasminskii", "--config", str(write_cfg(tmp_path, doc, "k.yaml")), "--out", str(out)])
    assert rc == 0
    lines = (out / "khasminskii.csv").read_text().splitlines()
    assert len(lines) == 3


def test_console_script_version():
    res = subprocess.run(
        [sys.executable, "-m", "slowfast_burgers.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    assert "slowfast-burgers" in res.stdout
