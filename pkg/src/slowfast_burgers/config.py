"""YAML experiment configuration: sections model, noise, stepper, experiment.

Example:

    model:
      n_modes: 16
      burgers: true
      f: {kind: linear_in_y, kappa_f: 1.0}
      g: {kind: linear_coupled, kappa_g: 1.0, c_g: 0.0}
      x0: {kind: modes, coeffs: [1.0, 0.0, 0.5]}
      y0: {kind: zero}
    noise:
      q1: {law: power, exponent: 4.0, amplitude: 0.5}
      q2: {law: power, exponent: 2.0, amplitude: 0.5}
      a3_alpha: 1.25
      a3_beta: 0.125
    stepper:
      h: 0.03125
      T: 0.5
      fast_substep_ratio: 0.5
      blowup_threshold: 1.0e6
    experiment:
      eps_grid: [0.0625, 0.03125, 0.015625]
      replicas: 1000
      p: 1.0
      phi: {kind: gaussian_of_norm, level: 4}
      q1_mode: "off"
      delta_rule: sqrt_eps
      delta_grid: []
      seed: 12345

All defaults are documented here and echoed into report metadata.
"""

from __future__ import annotations

import os

import numpy as np
import yaml

from .coefficients import CoefficientPair
from .dynamics import StepperConfig
from .harness import ConfigurationError, ExperimentConfig, TestFunctional
from .noise import NoiseSpec

THREADS_ENV_VAR = "SLOWFAST_BURGERS_THREADS"


def _coeff_pair_from(model: dict) -> CoefficientPair:
    f = dict(model.get("f", {"kind": "linear_in_y", "kappa_f": 1.0}))
    g = dict(model.get("g", {"kind": "linear_coupled", "kappa_g": 1.0, "c_g": 0.0}))
    return CoefficientPair(
        f_kind=f.get("kind", "linear_in_y"),
        kappa_f=float(f.get("kappa_f", 1.0 if f.get("kind") != "zero" else 0.0)),
        a=float(f.get("a", 0.0)),
        g_kind=g.get("kind", "linear_coupled"),
        kappa_g=float(g.get("kappa_g", 1.0 if g.get("kind") != "zero" else 0.0)),
        c_g=float(g.get("c_g", 0.0)),
    )


def _noise_from(section: dict | None, n_modes: int, label: str) -> NoiseSpec:
    if section is None:
        return NoiseSpec.zero(n_modes, label=label)
    law = section.get("law", "power")
    if law == "zero":
        return NoiseSpec.zero(n_modes, label=label)
    if law == "power":
        return NoiseSpec.from_power_law(
            n_modes,
            exponent=float(section.get("exponent", 2.0)),
            amplitude=float(section.get("amplitude", 1.0)),
            label=label,
        )
    if law == "explicit":
        alphas = np.asarray(section.get("alphas", []), dtype=float)
        if alphas.size != n_modes:
            raise ConfigurationError(
                f"explicit alphas for {label} must have length n_modes={n_modes}"
            )
        return NoiseSpec(alphas, label=label)
    raise ConfigurationError(f"unknown noise law {law!r}")


def _initial_field_from(section: dict | None, n_modes: int) -> tuple[np.ndarray, str]:
    """Returns (coefficients, regularity label)."""
    if section is None or section.get("kind", "zero") == "zero":
        return np.zeros(n_modes), "zero"
    kind = section["kind"]
    if kind == "modes":
        coeffs = np.zeros(n_modes)
        given = np.asarray(section.get("coeffs", []), dtype=float)
        if given.size > n_modes:
            raise ConfigurationError("more x0 coefficients than modes")
        coeffs[: given.size] = given
        return coeffs, "smooth (finitely many modes)"
    if kind == "power_law":
        theta = float(section.get("theta", 1.0))
        amp = float(section.get("amplitude", 1.0))
        k = np.arange(1, n_modes + 1, dtype=float)
        # decay exponent just inside H^theta: sum a_k^2 lambda_k^theta < inf
        return amp * k ** -(theta + 0.51), f"H^{theta} power law"
    raise ConfigurationError(f"unknown initial field kind {kind!r}")


def _phi_from(section: dict | None) -> TestFunctional:
    if section is None:
        return TestFunctional()
    return TestFunctional(
        kind=section.get("kind", "gaussian_of_norm"),
        level=int(section.get("level", 4)),
        mode=int(section.get("mode", 1)),
        value=float(section.get("value", 0.0)),
    )


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def experiment_from_dict(
    doc: dict,
    seed_override: int | None = None,
    threads_override: int | None = None,
) -> ExperimentConfig:
    model = doc.get("model", {})
    noise = doc.get("noise", {})
    stepper = doc.get("stepper", {})
    exp = doc.get("experiment", {})

    n_modes = int(model.get("n_modes", 16))
    pair = _coeff_pair_from(model)
    q1 = _noise_from(noise.get("q1"), n_modes, "q1")
    q2 = _noise_from(noise.get("q2"), n_modes, "q2")
    x0, theta_label = _initial_field_from(model.get("x0"), n_modes)
    y0, _ = _initial_field_from(model.get("y0"), n_modes)
    step_cfg = StepperConfig(
        h=float(stepper.get("h", 0.01)),
        T=float(stepper.get("T", 1.0)),
        fast_substep_ratio=float(stepper.get("fast_substep_ratio", 0.5)),
        blowup_threshold=float(stepper.get("blowup_threshold", 1.0e6)),
    )

    q1_mode = str(exp.get("q1_mode", "on")).lower()
    if q1_mode not in ("on", "off", "true", "false"):
        raise ConfigurationError("q1_mode must be on/off")
    delta_rule = exp.get("delta_rule", "sqrt_eps")
    if not isinstance(delta_rule, str):
        delta_rule = float(delta_rule)

    seed = int(exp.get("seed", 0)) if seed_override is None else int(seed_override)
    threads = default_threads() if threads_override is None else max(1, int(threads_override))

    return ExperimentConfig(
        pair=pair,
        q1=q1,
        q2=q2,
        stepper=step_cfg,
        x0=x0,
        y0=y0,
        eps_grid=tuple(float(e) for e in exp.get("eps_grid", (0.1, 0.01))),
        replicas=int(exp.get("replicas", 100)),
        p=float(exp.get("p", 1.0)),
        phi=_phi_from(exp.get("phi")),
        q1_on=q1_mode in ("on", "true"),
        burgers=bool(model.get("burgers", True)),
        delta_rule=delta_rule,
        delta_grid=tuple(float(d) for d in exp.get("delta_grid", ())),
        theta_label=str(model.get("theta_label", theta_label)),
        seed=seed,
        threads=threads,
        a3_alpha=float(noise.get("a3_alpha", 1.25)),
        a3_beta=float(noise.get("a3_beta", 0.125)),
    )


def load_experiment(
    path,
    seed_override: int | None = None,
    threads_override: int | None = None,
) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a mapping")
    return experiment_from_dict(doc, seed_override, threads_override)
