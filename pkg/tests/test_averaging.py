import numpy as np
import pytest

from slowfast_burgers.averaging import (
    ErgodicityError,
    FbarCache,
    FbarEstimator,
    estimate_fbar,
    estimate_fbar_cached,
    mixing_diagnostic,
    sample_invariant_measure,
    stationary_mean_raw,
)
from slowfast_burgers.coefficients import CoefficientPair
from slowfast_burgers.dynamics import StepperConfig
from slowfast_burgers.noise import NoiseSpec, RngStream
from slowfast_burgers.spectral import SpectralField, SpectralOperator

PI = np.pi
N = 8


def pair_linear(kf=1.0, kg=1.0, cg=0.0):
    return CoefficientPair(f_kind="linear_in_y", kappa_f=kf, g_kind="linear_coupled", kappa_g=kg, c_g=cg)


def q2_default(amp=0.5):
    return NoiseSpec.from_power_law(N, 2.0, amp, "q2")


def cfg_default(h=0.01, T=1.0):
    return StepperConfig(h=h, T=T)


def test_estimator_validation():
    with pytest.raises(ValueError):
        FbarEstimator(pair_linear(), q2_default(), cfg_default(), mode="nope")
    with pytest.raises(ErgodicityError):
        FbarEstimator(pair_linear(kg=10.0), q2_default(), cfg_default(), mode="time_average")
    eta = PI**2 - 1.0
    with pytest.raises(ValueError, match="burn_in"):
        FbarEstimator(
            pair_linear(), q2_default(), cfg_default(), mode="time_average", burn_in=1.0 / eta
        )
    est = FbarEstimator(pair_linear(), q2_default(), cfg_default(), mode="time_average")
    assert est.burn_in == pytest.approx(5.0 / eta)
    assert est.horizon == pytest.approx(50.0 / eta)
    assert est.thinning >= 1


def test_analytic_stationary_mean():
    x = np.zeros(N)
    x[0] = 2.0
    lam = SpectralOperator(N).eigenvalues
    m = stationary_mean_raw(pair_linear(kg=1.5, cg=2.0), x)
    assert m[0] == pytest.approx(1.5 * 2.0 / (lam[0] + 2.0), rel=1e-14)
    assert np.all(m[1:] == 0.0)
    assert np.all(stationary_mean_raw(CoefficientPair(g_kind="zero"), x) == 0.0)


def test_fbar_y_independent_is_exact():
    # f does not depend on y: fbar(x) = f(x, anything), stderr 0
    pair = CoefficientPair(f_kind="bounded_nonlin", a=1.0, kappa_f=0.0)
    est = FbarEstimator(pair, q2_default(), cfg_default(), mode="analytic")
    x = SpectralField.basis(1, N)
    res = estimate_fbar(est, x)
    assert res.stderr == 0.0
    direct = pair.f_raw(x.coeffs, np.full(N, 7.7))
    assert np.array_equal(res.value.coeffs, direct)


def test_fbar_linear_case_analytic_and_time_average():
    # f = y, g = x: fbar(e_1) = (1/pi^2) e_1; the ergodic estimate agrees
    # within 3 stderr and its stderr is small
    pair = pair_linear(kf=1.0, kg=1.0, cg=0.0)
    x = SpectralField.basis(1, N)
    ana = estimate_fbar(FbarEstimator(pair, q2_default(), cfg_default(), mode="analytic"), x)
    assert ana.value.coeffs[0] == pytest.approx(1.0 / PI**2, rel=1e-13)
    assert ana.value.coeffs[0] == pytest.approx(0.101321, abs=1e-6)

    est = FbarEstimator(
        pair, q2_default(), cfg_default(), mode="time_average", burn_in=1.0, horizon=150.0
    )
    ta = estimate_fbar(est, x, RngStream(31, 0, "aux"))
    assert ta.stderr > 0.0
    assert np.linalg.norm(ta.value.coeffs - ana.value.coeffs) < 3 * ta.stderr


def test_fbar_centered_ou_mean_zero():
    # g = 0, f = y: fbar(x) = 0 (stationary mean of the centered OU)
    pair = CoefficientPair(f_kind="linear_in_y", kappa_f=1.0, g_kind="zero")
    x = SpectralField.basis(1, N)
    ana = estimate_fbar(FbarEstimator(pair, q2_default(), cfg_default(), mode="analytic"), x)
    assert np.all(ana.value.coeffs == 0.0)
    est = FbarEstimator(
        pair, q2_default(), cfg_default(), mode="time_average", burn_in=1.0, horizon=120.0
    )
    ta = estimate_fbar(est, x, RngStream(32, 0, "aux"))
    assert np.linalg.norm(ta.value.coeffs) < 3 * ta.stderr


@pytest.mark.parametrize("kg", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("cg", [0.0, 1.0])
def test_fbar_mode_agreement_grid(kg, cg):
    pair = pair_linear(kf=1.0, kg=kg, cg=cg)
    q2 = q2_default()
    cfg = cfg_default()
    ana_est = FbarEstimator(pair, q2, cfg, mode="analytic")
    ta_est = FbarEstimator(pair, q2, cfg, mode="time_average", burn_in=1.0, horizon=100.0)
    e1 = SpectralField.basis(1, N)
    for x in (SpectralField.zero(N), e1, e1 + SpectralField.basis(3, N)):
        ana = estimate_fbar(ana_est, x)
        ta = estimate_fbar(ta_est, x, RngStream(33, hash((kg, cg)) % 1000, "aux"))
        assert np.linalg.norm(ta.value.coeffs - ana.value.coeffs) < 3 * max(ta.stderr, 1e-12)


def test_fbar_inherits_lipschitz_bound():
    # |fbar(x1) - fbar(x2)| <= L_f (1 + L_g/eta) |x1 - x2| for the analytic route
    pair = pair_linear(kf=1.2, kg=1.0, cg=0.5)
    est = FbarEstimator(pair, q2_default(), cfg_default(), mode="analytic")
    eta = PI**2 - pair.L_g
    bound = pair.L_f * (1.0 + pair.L_g / eta)
    rng = np.random.default_rng(44)
    for _ in range(200):
        x1, x2 = rng.standard_normal((2, N))
        d = np.linalg.norm(
            estimate_fbar(est, SpectralField(x1)).value.coeffs
            - estimate_fbar(est, SpectralField(x2)).value.coeffs
        )
        assert d <= bound * np.linalg.norm(x1 - x2) + 1e-12


def test_invariant_measure_ou_variance():
    pair = CoefficientPair(f_kind="zero", g_kind="zero")
    q2 = q2_default(amp=1.0)
    samples = sample_invariant_measure(
        pair, q2, SpectralField.zero(N), 4000, cfg_default(), RngStream(35, 0, "q2")
    )
    assert samples.shape == (4000, N)
    lam = SpectralOperator(N).eigenvalues
    for k in (0, 1):
        target = q2.alphas[k] / (2 * lam[k])
        blocks = samples[:, k].reshape(40, -1).var(axis=1, ddof=1)
        se = blocks.std(ddof=1) / np.sqrt(40)
        assert abs(samples[:, k].var(ddof=1) - target) < 3 * se


def test_invariant_measure_deterministic_fixed_point():
    # q2 = 0 with linear-coupled g: every post-burn-in sample sits at the
    # fixed point m_k = kappa_g x_k / (lambda_k + c_g)
    pair = pair_linear(kg=1.0, cg=1.0)
    q0 = NoiseSpec.zero(N)
    x = SpectralField.basis(1, N)
    samples = sample_invariant_measure(
        pair, q0, x, 50, cfg_default(), RngStream(36, 0, "q2"), burn_in=2.0
    )
    target = stationary_mean_raw(pair, x.coeffs)
    assert np.max(np.abs(samples - target)) < 1e-8


def test_invariant_measure_refuses_without_gap():
    with pytest.raises(ErgodicityError):
        sample_invariant_measure(
            pair_linear(kg=10.0), q2_default(), SpectralField.zero(N), 10,
            cfg_default(), RngStream(37, 0, "q2"),
        )


def test_invariant_measure_start_insensitive():
    pair = pair_linear()
    q2 = q2_default()
    x = SpectralField.basis(1, N)
    a = sample_invariant_measure(pair, q2, x, 3000, cfg_default(), RngStream(38, 0, "q2"))
    b = sample_invariant_measure(
        pair, q2, x, 3000, cfg_default(), RngStream(38, 1, "q2"),
        y0=SpectralField(10.0 * np.eye(N)[0]),
    )
    for samp in (a, b):
        assert samp.shape[0] == 3000
    se_a = a[:, 0].reshape(30, -1).mean(axis=1).std(ddof=1) / np.sqrt(30)
    se_b = b[:, 0].reshape(30, -1).mean(axis=1).std(ddof=1) / np.sqrt(30)
    assert abs(a[:, 0].mean() - b[:, 0].mean()) < 3 * np.hypot(se_a, se_b)


def test_stationarity_restart():
    # restarting the chain from one of its own samples moves the mode means
    # by less than 3 combined SE
    pair = pair_linear()
    q2 = q2_default()
    x = SpectralField.basis(1, N)
    a = sample_invariant_measure(pair, q2, x, 3000, cfg_default(), RngStream(39, 0, "q2"))
    b = sample_invariant_measure(
        pair, q2, x, 3000, cfg_default(), RngStream(39, 1, "q2"), y0=SpectralField(a[-1])
    )
    se_a = a[:, 0].reshape(30, -1).mean(axis=1).std(ddof=1) / np.sqrt(30)
    se_b = b[:, 0].reshape(30, -1).mean(axis=1).std(ddof=1) / np.sqrt(30)
    assert abs(a[:, 0].mean() - b[:, 0].mean()) < 3 * np.hypot(se_a, se_b)


def test_mixing_diagnostic_rates():
    q2 = q2_default()
    x = SpectralField.zero(N)
    cfg = StepperConfig(h=5e-4, T=1.0)
    # g = 0: coupled gap on mode 1 decays exactly at -lambda_1 = -pi^2
    rep = mixing_diagnostic(
        CoefficientPair(f_kind="zero", g_kind="zero"), q2, x,
        SpectralField.basis(1, N), SpectralField.zero(N), 0.4, cfg, RngStream(40, 0, "q2"),
    )
    assert rep.ok
    assert rep.fitted_rate == pytest.approx(-PI**2, abs=1e-6)

    # linear-coupled with c_g = 1: rate -(lambda_1 + 1) up to O(h) freeze bias
    pair = pair_linear(kg=0.5, cg=1.0)
    rep2 = mixing_diagnostic(
        pair, q2, x, SpectralField.basis(1, N), SpectralField.zero(N), 0.4, cfg,
        RngStream(40, 1, "q2"),
    )
    lam1 = PI**2
    mu = np.exp(-lam1 * cfg.h) - 1.0 * -np.expm1(-lam1 * cfg.h) / lam1
    discrete_rate = np.log(mu) / cfg.h
    assert rep2.fitted_rate == pytest.approx(discrete_rate, abs=1e-6)
    assert rep2.fitted_rate == pytest.approx(-(lam1 + 1.0), abs=0.05)
    assert rep2.ok  # contraction at least as fast as eta

    # identical starts: identically zero gap, flagged
    rep3 = mixing_diagnostic(
        pair, q2, x, SpectralField.basis(1, N), SpectralField.basis(1, N), 0.2, cfg,
        RngStream(40, 2, "q2"),
    )
    assert rep3.identical and np.all(rep3.gaps == 0.0)


def test_fbar_cache_roundtrip(tmp_path):
    pair = pair_linear()
    est = FbarEstimator(
        pair, q2_default(), cfg_default(), mode="time_average", burn_in=1.0, horizon=30.0
    )
    cache_path = tmp_path / "fbar_cache.csv"
    cache = FbarCache(cache_path)
    x = SpectralField.basis(1, N)
    first = estimate_fbar_cached(est, x, RngStream(41, 0, "aux"), cache)
    # a second lookup never re-runs the chain: a fresh cache reads the file
    reloaded = FbarCache(cache_path)
    hit = reloaded.lookup(est, x)
    assert hit is not None
    assert np.array_equal(hit.value.coeffs, first.value.coeffs)
    assert hit.stderr == pytest.approx(first.stderr, rel=1e-12)
    # different x misses
    assert reloaded.lookup(est, SpectralField.basis(2, N)) is None
