"""Exponential-Euler integration of the coupled slow-fast system.

The schemes discretize the mild (variation-of-constants) form: the linear
part is propagated exactly through mode-wise exponentials, the stochastic
convolution is sampled with its exact Gaussian law, and only the reaction
terms are frozen within a step.  The fast equation is sub-cycled with micro
step ``h_f = h / ceil(h / (c eps))`` so the O(eps) transient stays resolved
without forcing the slow macro step down.

The slow equation couples to the fast one through the mild-form composite
rule: the contribution of f over a macro step is
``sum_j [int over micro window j of e^{(h-s)A} ds] f(X_n, Y_{n,j})``,
which collapses (f is affine in y) to the macro update
``X <- e^{hA} X + w_h [B(X) + f(X, Y*)] + conv`` with Y* an exponentially
weighted average of the sub-cycle values.  With a single micro step this is
the plain frozen-drift exponential Euler step; with sub-cycling it removes
the O(h) sampling noise a point evaluation of the fast state would inject
into the slow component, which would otherwise mask the O(eps) averaging
error the experiments measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientPair
from .noise import (
    NoiseSpec,
    RngStream,
    ou_convolution_path,
    ou_convolution_sigma,
)
from .spectral import SpectralField, SpectralOperator, burgers_nonlinearity_raw


class BlowUpError(RuntimeError):
    """Trajectory escaped the norm guard; carries the failure time."""

    def __init__(self, time: float, norm: float) -> None:
        super().__init__(f"trajectory blew up at t={time:.6g} (norm {norm:.3g})")
        self.time = time
        self.norm = norm


@dataclass(frozen=True)
class StepperConfig:
    """Macro step, horizon, fast sub-cycling ratio, and the blow-up guard."""

    h: float
    T: float
    fast_substep_ratio: float = 0.5
    blowup_threshold: float = 1.0e6

    def __post_init__(self) -> None:
        if self.h <= 0 or self.T <= 0:
            raise ValueError("h and T must be positive")
        if self.fast_substep_ratio <= 0:
            raise ValueError("fast_substep_ratio must be positive")
        if self.blowup_threshold <= 0:
            raise ValueError("blowup_threshold must be positive")
        n = round(self.T / self.h)
        if n < 1 or abs(n * self.h - self.T) > 1e-9 * max(1.0, self.T):
            raise ValueError("horizon T must be an integer multiple of h")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.h)

    def substeps(self, eps: float) -> int:
        """Micro steps per macro step; h_f = h / substeps <= min(h, c eps)."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        return max(1, math.ceil(self.h / (self.fast_substep_ratio * eps) - 1e-12))


@dataclass
class SlowFastState:
    X: SpectralField
    Y: SpectralField
    t: float
    eps: float

    def __post_init__(self) -> None:
        if self.X.n_modes != self.Y.n_modes:
            raise ValueError("X and Y must share the truncation level")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.t < 0:
            raise ValueError("time must be nonnegative")


@dataclass
class Trajectory:
    """Snapshots on the macro grid: times plus modal coefficient rows."""

    times: np.ndarray
    X: np.ndarray | None = None
    Y: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        arr = self.X if self.X is not None else self.Y
        return arr.shape[1]


class _MacroOps:
    """Precomputed mode-wise factors for one (lambda, h, eps, m) combination."""

    __slots__ = ("m", "decay_h", "wh", "decay_f", "wf", "qs", "ws")

    def __init__(self, lam: np.ndarray, h: float, eps: float, m: int) -> None:
        hf = h / m
        self.m = m
        self.decay_h = np.exp(-lam * h)
        self.wh = -np.expm1(-lam * h) / lam
        self.decay_f = np.exp(-lam * hf / eps)
        self.wf = -np.expm1(-lam * hf / eps) / lam
        # slow-time weights chaining the fast sub-cycle into the macro update
        self.qs = np.exp(-lam * hf)
        self.ws = -np.expm1(-lam * hf) / lam


def _macro_step(
    X: np.ndarray,
    Y: np.ndarray,
    ops: _MacroOps,
    pair: CoefficientPair,
    q1_row: np.ndarray,
    q2_rows: np.ndarray,
    burgers: bool,
    x_react: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One macro step; ``x_react`` overrides the state fed to B, f and g
    (used by the auxiliary process, which freezes the driving slow state
    at block boundaries)."""
    xr = X if x_react is None else x_react
    coupling = np.zeros_like(Y)
    for j in range(ops.m):
        coupling = ops.qs * coupling + Y
        Y = ops.decay_f * Y + ops.wf * pair.g_raw(xr, Y) + q2_rows[j]
    y_star = ops.ws * coupling / ops.wh
    drift = pair.f_raw(xr, y_star)
    if burgers:
        drift = drift + burgers_nonlinearity_raw(xr)
    X = ops.decay_h * X + ops.wh * drift + q1_row
    return X, Y


def _guard(X: np.ndarray, Y: np.ndarray | None, threshold: float, t: float) -> None:
    sq = float(X @ X)
    if Y is not None:
        sq = max(sq, float(Y @ Y))
    if not np.isfinite(sq) or sq > threshold * threshold:
        raise BlowUpError(t, math.sqrt(sq) if np.isfinite(sq) else math.inf)


def step_slow_fast(
    state: SlowFastState,
    pair: CoefficientPair,
    q1: NoiseSpec,
    q2: NoiseSpec,
    cfg: StepperConfig,
    rng_q1: RngStream,
    rng_q2: RngStream,
    burgers: bool = True,
) -> SlowFastState:
    """Advance (X, Y) one macro step h, drawing noise from the streams."""
    n_modes = state.X.n_modes
    op = SpectralOperator(n_modes)
    m = cfg.substeps(state.eps)
    ops = _MacroOps(op.eigenvalues, cfg.h, state.eps, m)
    q1_row = _draw_path(q1, op, cfg.h, 1, 1.0, rng_q1)[0]
    q2_rows = _draw_path(q2, op, cfg.h / m, m, state.eps, rng_q2)
    X, Y = _macro_step(state.X.coeffs, state.Y.coeffs, ops, pair, q1_row, q2_rows, burgers)
    t = state.t + cfg.h
    _guard(X, Y, cfg.blowup_threshold, t)
    return SlowFastState(SpectralField(X), SpectralField(Y), t, state.eps)


def _draw_path(
    spec: NoiseSpec,
    op: SpectralOperator,
    h: float,
    n: int,
    scale: float,
    rng: RngStream | None,
) -> np.ndarray:
    if spec.is_zero:
        return np.zeros((n, spec.n_modes))
    if rng is None:
        raise ValueError(f"noise {spec.label!r} is active but no stream was provided")
    return ou_convolution_path(spec, op, h, n, scale, rng)


def simulate_slow_fast(
    x0: SpectralField,
    y0: SpectralField,
    eps: float,
    pair: CoefficientPair,
    q1: NoiseSpec,
    q2: NoiseSpec,
    cfg: StepperConfig,
    rng_q1: RngStream | None = None,
    rng_q2: RngStream | None = None,
    *,
    burgers: bool = True,
    q1_path: np.ndarray | None = None,
    q2_path: np.ndarray | None = None,
) -> Trajectory:
    """Full (X, Y) trajectory on the macro grid t in {0, h, ..., T}.

    Pre-generated convolution paths can be supplied to couple runs on the
    same probability space (common random numbers); otherwise paths are
    drawn from the streams, bit-identically to step-by-step composition.
    """
    if x0.n_modes != y0.n_modes:
        raise ValueError("x0 and y0 must share the truncation level")
    n_modes = x0.n_modes
    op = SpectralOperator(n_modes)
    n = cfg.n_steps
    m = cfg.substeps(eps)
    ops = _MacroOps(op.eigenvalues, cfg.h, eps, m)
    if q1_path is None:
        q1_path = _draw_path(q1, op, cfg.h, n, 1.0, rng_q1)
    if q2_path is None:
        q2_path = _draw_path(q2, op, cfg.h / m, n * m, eps, rng_q2)
    if q1_path.shape != (n, n_modes) or q2_path.shape != (n * m, n_modes):
        raise ValueError("noise path shape does not match the step layout")

    times = cfg.h * np.arange(n + 1)
    Xs = np.empty((n + 1, n_modes))
    Ys = np.empty((n + 1, n_modes))
    X, Y = x0.coeffs.copy(), y0.coeffs.copy()
    Xs[0], Ys[0] = X, Y
    thr = cfg.blowup_threshold
    for i in range(n):
        X, Y = _macro_step(X, Y, ops, pair, q1_path[i], q2_path[i * m : (i + 1) * m], burgers)
        _guard(X, Y, thr, times[i + 1])
        Xs[i + 1], Ys[i + 1] = X, Y
    return Trajectory(times=times, X=Xs, Y=Ys)


def simulate_frozen(
    x: SpectralField,
    y0: SpectralField,
    pair: CoefficientPair,
    q2: NoiseSpec,
    cfg: StepperConfig,
    rng: RngStream | None = None,
    q2_path: np.ndarray | None = None,
) -> Trajectory:
    """Fast equation with the slow input frozen at x, run in its own time.

    Drift ``A Y + g(x, Y)`` and noise q2 without any 1/eps speedup; this is
    the equation whose invariant measure defines the averaged drift.
    """
    if x.n_modes != y0.n_modes:
        raise ValueError("x and y0 must share the truncation level")
    n_modes = x.n_modes
    op = SpectralOperator(n_modes)
    n = cfg.n_steps
    lam = op.eigenvalues
    decay = np.exp(-lam * cfg.h)
    w = -np.expm1(-lam * cfg.h) / lam
    if q2_path is None:
        q2_path = _draw_path(q2, op, cfg.h, n, 1.0, rng)
    xr = x.coeffs
    times = cfg.h * np.arange(n + 1)
    Ys = np.empty((n + 1, n_modes))
    Y = y0.coeffs.copy()
    Ys[0] = Y
    thr = cfg.blowup_threshold
    for i in range(n):
        Y = decay * Y + w * pair.g_raw(xr, Y) + q2_path[i]
        _guard(Y, None, thr, times[i + 1])
        Ys[i + 1] = Y
    return Trajectory(times=times, Y=Ys)


def solve_averaged(
    x0: SpectralField,
    fbar,
    q1: NoiseSpec,
    cfg: StepperConfig,
    rng: RngStream | None = None,
    *,
    burgers: bool = True,
    q1_path: np.ndarray | None = None,
) -> Trajectory:
    """Exponential-Euler trajectory of the averaged equation.

    ``fbar`` is a raw drift provider: a callable mapping a coefficient
    vector to the averaged reaction P_N fbar(x).  Deterministic when q1 is
    zero.
    """
    n_modes = x0.n_modes
    op = SpectralOperator(n_modes)
    n = cfg.n_steps
    lam = op.eigenvalues
    decay = np.exp(-lam * cfg.h)
    w = -np.expm1(-lam * cfg.h) / lam
    if q1_path is None:
        q1_path = _draw_path(q1, op, cfg.h, n, 1.0, rng)
    times = cfg.h * np.arange(n + 1)
    Xs = np.empty((n + 1, n_modes))
    X = x0.coeffs.copy()
    Xs[0] = X
    thr = cfg.blowup_threshold
    for i in range(n):
        drift = fbar(X)
        if burgers:
            drift = drift + burgers_nonlinearity_raw(X)
        X = decay * X + w * drift + q1_path[i]
        _guard(X, None, thr, times[i + 1])
        Xs[i + 1] = X
    return Trajectory(times=times, X=Xs)


def floor_to_block(s: float, delta: float) -> float:
    """Nearest block breakpoint preceding s: ``floor(s / delta) delta``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return math.floor(s / delta) * delta


@dataclass
class AuxiliaryState:
    """The block-frozen auxiliary pair (Xhat, Yhat).

    ``frozen_X`` holds the driving slow state captured at the current block
    boundary k delta; ``block_index`` tracks which block it belongs to so a
    stale freeze is detected instead of silently reused.
    """

    Xhat: SpectralField
    Yhat: SpectralField
    delta: float
    frozen_X: SpectralField
    t: float
    eps: float
    block_index: int = 0

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def refresh_block(self, driving_X: SpectralField, driving_Y: SpectralField) -> None:
        """Install driving data at a block boundary: re-freeze X, restart Yhat."""
        self.frozen_X = SpectralField(driving_X.coeffs.copy())
        self.Yhat = SpectralField(driving_Y.coeffs.copy())
        self.block_index = round(self.t / self.delta)


def step_auxiliary(
    aux: AuxiliaryState,
    pair: CoefficientPair,
    q1: NoiseSpec,
    q2: NoiseSpec,
    cfg: StepperConfig,
    rng_q1: RngStream,
    rng_q2: RngStream,
    burgers: bool = True,
) -> AuxiliaryState:
    """Advance (Xhat, Yhat) one macro step using the current block's freeze.

    The caller must supply driving data via ``refresh_block`` whenever a
    block boundary is crossed; to couple the auxiliary pair with the true
    trajectory, pass the same noise streams (or use simulate_with_auxiliary,
    which shares the paths exactly).
    """
    expected_block = math.floor((aux.t + 1e-12) / aux.delta)
    if expected_block != aux.block_index:
        raise ValueError(
            f"auxiliary freeze is stale: at t={aux.t:.6g} block {expected_block} "
            f"needs driving data (have block {aux.block_index})"
        )
    n_modes = aux.Xhat.n_modes
    op = SpectralOperator(n_modes)
    m = cfg.substeps(aux.eps)
    ops = _MacroOps(op.eigenvalues, cfg.h, aux.eps, m)
    q1_row = _draw_path(q1, op, cfg.h, 1, 1.0, rng_q1)[0]
    q2_rows = _draw_path(q2, op, cfg.h / m, m, aux.eps, rng_q2)
    X, Y = _macro_step(
        aux.Xhat.coeffs,
        aux.Yhat.coeffs,
        ops,
        pair,
        q1_row,
        q2_rows,
        burgers,
        x_react=aux.frozen_X.coeffs,
    )
    t = aux.t + cfg.h
    _guard(X, Y, cfg.blowup_threshold, t)
    return AuxiliaryState(
        Xhat=SpectralField(X),
        Yhat=SpectralField(Y),
        delta=aux.delta,
        frozen_X=aux.frozen_X,
        t=t,
        eps=aux.eps,
        block_index=aux.block_index,
    )


def simulate_with_auxiliary(
    x0: SpectralField,
    y0: SpectralField,
    eps: float,
    delta: float,
    pair: CoefficientPair,
    q1: NoiseSpec,
    q2: NoiseSpec,
    cfg: StepperConfig,
    rng_q1: RngStream | None = None,
    rng_q2: RngStream | None = None,
    *,
    burgers: bool = True,
    q1_path: np.ndarray | None = None,
    q2_path: np.ndarray | None = None,
) -> tuple[Trajectory, Trajectory]:
    """Advance the true pair (X, Y) and the auxiliary pair (Xhat, Yhat)
    together on shared noise paths.

    Within each block [k delta, (k+1) delta) the auxiliary slow state sees
    B and f at the driving X frozen at the block start, Yhat restarts from
    the driving Y there, and g is evaluated at the frozen X.  delta must be
    a multiple of the macro step so blocks align with the grid.
    """
    nb = round(delta / cfg.h)
    if nb < 1 or abs(nb * cfg.h - delta) > 1e-9 * max(1.0, delta):
        raise ValueError("delta must be a positive multiple of the macro step h")
    if x0.n_modes != y0.n_modes:
        raise ValueError("x0 and y0 must share the truncation level")
    n_modes = x0.n_modes
    op = SpectralOperator(n_modes)
    n = cfg.n_steps
    m = cfg.substeps(eps)
    ops = _MacroOps(op.eigenvalues, cfg.h, eps, m)
    if q1_path is None:
        q1_path = _draw_path(q1, op, cfg.h, n, 1.0, rng_q1)
    if q2_path is None:
        q2_path = _draw_path(q2, op, cfg.h / m, n * m, eps, rng_q2)

    times = cfg.h * np.arange(n + 1)
    Xs = np.empty((n + 1, n_modes))
    Ys = np.empty((n + 1, n_modes))
    Xh = np.empty((n + 1, n_modes))
    Yh = np.empty((n + 1, n_modes))
    X, Y = x0.coeffs.copy(), y0.coeffs.copy()
    Xhat, Yhat = x0.coeffs.copy(), y0.coeffs.copy()
    frozen = x0.coeffs.copy()
    Xs[0], Ys[0], Xh[0], Yh[0] = X, Y, Xhat, Yhat
    thr = cfg.blowup_threshold
    for i in range(n):
        if i % nb == 0:
            frozen = X.copy()
            Yhat = Y.copy()
        rows = q2_path[i * m : (i + 1) * m]
        Xnew, Ynew = _macro_step(X, Y, ops, pair, q1_path[i], rows, burgers)
        Xhat, Yhat = _macro_step(Xhat, Yhat, ops, pair, q1_path[i], rows, burgers, x_react=frozen)
        X, Y = Xnew, Ynew
        _guard(X, Y, thr, times[i + 1])
        _guard(Xhat, Yhat, thr, times[i + 1])
        Xs[i + 1], Ys[i + 1], Xh[i + 1], Yh[i + 1] = X, Y, Xhat, Yhat
    return Trajectory(times, Xs, Ys), Trajectory(times, Xh, Yh)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Columns: t, then X modal coefficients, then Y modal coefficients."""
    cols = [np.asarray(traj.times)]
    header = ["t"]
    if traj.X is not None:
        cols.extend(traj.X.T)
        header.extend(f"x_{k}" for k in range(1, traj.X.shape[1] + 1))
    if traj.Y is not None:
        cols.extend(traj.Y.T)
        header.extend(f"y_{k}" for k in range(1, traj.Y.shape[1] + 1))
    data = np.column_stack(cols)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
