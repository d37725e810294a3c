"""Spectral Galerkin laboratory for the two-time-scale stochastic Burgers system."""

__version__ = "0.1.0"

from .averaging import (
    FbarCache,
    FbarEstimator,
    FbarResult,
    estimate_fbar,
    estimate_fbar_cached,
    mixing_diagnostic,
    sample_invariant_measure,
)
from .coefficients import (
    CoefficientPair,
    check_dissipativity,
    evaluate_f,
    evaluate_g,
)
from .dynamics import (
    AuxiliaryState,
    BlowUpError,
    SlowFastState,
    StepperConfig,
    Trajectory,
    floor_to_block,
    simulate_frozen,
    simulate_slow_fast,
    simulate_with_auxiliary,
    solve_averaged,
    step_auxiliary,
    step_slow_fast,
    write_trajectory_csv,
)
from .harness import (
    ConditionError,
    ConfigurationError,
    ExperimentConfig,
    RateReport,
    TestFunctional,
    check_all_conditions,
    fit_rate,
    run_khasminskii_diagnostic,
    run_strong_error,
    run_weak_error,
)
from .noise import (
    NoiseSpec,
    RngStream,
    check_condition_a3,
    sample_increment,
    sample_ou_convolution,
)
from .spectral import (
    SpectralField,
    SpectralOperator,
    apply_semigroup,
    burgers_nonlinearity,
    eigenvalue,
    project,
    sobolev_norm,
    trilinear_b,
)

__all__ = [
    "AuxiliaryState",
    "BlowUpError",
    "CoefficientPair",
    "ConditionError",
    "ConfigurationError",
    "ExperimentConfig",
    "FbarCache",
    "FbarEstimator",
    "FbarResult",
    "NoiseSpec",
    "RateReport",
    "RngStream",
    "SlowFastState",
    "SpectralField",
    "SpectralOperator",
    "StepperConfig",
    "TestFunctional",
    "Trajectory",
    "apply_semigroup",
    "burgers_nonlinearity",
    "check_all_conditions",
    "check_condition_a3",
    "check_dissipativity",
    "eigenvalue",
    "estimate_fbar",
    "estimate_fbar_cached",
    "evaluate_f",
    "evaluate_g",
    "fit_rate",
    "floor_to_block",
    "mixing_diagnostic",
    "project",
    "run_khasminskii_diagnostic",
    "run_strong_error",
    "run_weak_error",
    "sample_increment",
    "sample_invariant_measure",
    "sample_ou_convolution",
    "simulate_frozen",
    "simulate_slow_fast",
    "simulate_with_auxiliary",
    "sobolev_norm",
    "solve_averaged",
    "step_auxiliary",
    "step_slow_fast",
    "trilinear_b",
    "write_trajectory_csv",
]
