import numpy as np
import pytest

from slowfast_burgers.coefficients import (
    CoefficientPair,
    check_dissipativity,
    evaluate_f,
    evaluate_g,
)
from slowfast_burgers.spectral import SpectralField

from oracles import sin_projection_quadrature

PI = np.pi


def rand_field(rng, n, scale=1.0):
    return SpectralField(scale * rng.standard_normal(n))


def test_kind_validation():
    with pytest.raises(ValueError):
        CoefficientPair(f_kind="cubic")
    with pytest.raises(ValueError):
        CoefficientPair(g_kind="linear_in_y")
    with pytest.raises(ValueError):
        CoefficientPair(kappa_f=np.nan)


def test_zero_kind():
    pair = CoefficientPair(f_kind="zero", g_kind="zero")
    rng = np.random.default_rng(0)
    x, y = rand_field(rng, 8), rand_field(rng, 8)
    assert np.all(evaluate_f(pair, x, y).coeffs == 0.0)
    assert np.all(evaluate_g(pair, x, y).coeffs == 0.0)
    assert pair.L_f == 0.0 and pair.L_g == 0.0


def test_linear_in_y():
    pair = CoefficientPair(f_kind="linear_in_y", kappa_f=1.0)
    e1 = SpectralField.basis(1, 8)
    e2 = SpectralField.basis(2, 8)
    assert np.array_equal(evaluate_f(pair, e1, e2).coeffs, e2.coeffs)
    # exact superposition: f(x, y1+y2) = f(x,y1) + f(x,y2) - f(x,0)
    rng = np.random.default_rng(1)
    for kind, kwargs in (
        ("linear_in_y", dict(kappa_f=0.7)),
        ("bounded_nonlin", dict(kappa_f=0.7, a=1.3)),
    ):
        p = CoefficientPair(f_kind=kind, **kwargs)
        x, y1, y2 = (rand_field(rng, 12) for _ in range(3))
        lhs = evaluate_f(p, x, y1 + y2).coeffs
        rhs = (
            evaluate_f(p, x, y1).coeffs
            + evaluate_f(p, x, y2).coeffs
            - evaluate_f(p, x, SpectralField.zero(12)).coeffs
        )
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_linear_coupled_g():
    pair = CoefficientPair(g_kind="linear_coupled", kappa_g=1.0, c_g=0.0)
    e1 = SpectralField.basis(1, 8)
    rng = np.random.default_rng(2)
    y = rand_field(rng, 8)
    assert np.array_equal(evaluate_g(pair, e1, y).coeffs, e1.coeffs)
    zero = CoefficientPair(g_kind="linear_coupled", kappa_g=0.0, c_g=0.0)
    assert np.all(evaluate_g(zero, e1, y).coeffs == 0.0)
    assert pair.L_g == 1.0
    assert CoefficientPair(kappa_g=0.5, c_g=2.0).L_g == 2.0


def test_bounded_nonlin_matches_quadrature_oracle():
    pair = CoefficientPair(f_kind="bounded_nonlin", a=1.0, kappa_f=0.0)
    rng = np.random.default_rng(3)
    for n in (8, 24):
        x = rand_field(rng, n)
        y = rand_field(rng, n)
        got = evaluate_f(pair, x, y).coeffs
        want = sin_projection_quadrature(x.coeffs, 1.0)
        assert np.linalg.norm(got - want) < 1e-9 * max(1.0, np.linalg.norm(want))


def test_bounded_nonlin_lipschitz_probes():
    # a = 1, kappa_f = 0: invariant under y, 1-Lipschitz in x (|sin'| <= 1)
    pair = CoefficientPair(f_kind="bounded_nonlin", a=1.0, kappa_f=0.0)
    rng = np.random.default_rng(4)
    for _ in range(50):
        x1, x2, y1, y2 = (rand_field(rng, 16, 2.0) for _ in range(4))
        fy1 = evaluate_f(pair, x1, y1).coeffs
        fy2 = evaluate_f(pair, x1, y2).coeffs
        assert np.max(np.abs(fy1 - fy2)) == 0.0
        d = np.linalg.norm(evaluate_f(pair, x1, y1).coeffs - evaluate_f(pair, x2, y1).coeffs)
        assert d <= np.linalg.norm(x1.coeffs - x2.coeffs) + 1e-9


@pytest.mark.parametrize(
    "pair",
    [
        CoefficientPair(f_kind="linear_in_y", kappa_f=1.5, g_kind="linear_coupled", kappa_g=2.0, c_g=0.5),
        CoefficientPair(f_kind="bounded_nonlin", a=0.8, kappa_f=0.3, g_kind="linear_coupled", kappa_g=1.0, c_g=1.0),
        CoefficientPair(f_kind="zero", g_kind="zero"),
    ],
)
def test_declared_constants_dominate_probes(pair):
    # 10^4 random probe pairs: |Delta out| <= L (|Delta x| + |Delta y|) + 1e-9
    rng = np.random.default_rng(5)
    n = 16
    for _ in range(10_000):
        x1, x2, y1, y2 = rng.standard_normal((4, n))
        denom = np.linalg.norm(x1 - x2) + np.linalg.norm(y1 - y2)
        df = np.linalg.norm(pair.f_raw(x1, y1) - pair.f_raw(x2, y2))
        dg = np.linalg.norm(pair.g_raw(x1, y1) - pair.g_raw(x2, y2))
        assert df <= pair.L_f * denom + 1e-9
        assert dg <= pair.L_g * denom + 1e-9


def test_dissipativity():
    rep = check_dissipativity(CoefficientPair(kappa_g=1.0, c_g=0.0))
    assert rep.ok and rep.eta == pytest.approx(PI**2 - 1.0, abs=1e-12)
    assert rep.eta == pytest.approx(8.8696, abs=1e-4)
    rep0 = check_dissipativity(CoefficientPair(g_kind="zero"))
    assert rep0.ok and rep0.eta == pytest.approx(PI**2, abs=1e-12)
    bad = check_dissipativity(CoefficientPair(kappa_g=10.0))
    assert not bad.ok
    assert bad.eta == pytest.approx(-0.1304, abs=1e-4)


def test_mismatched_n_errors():
    pair = CoefficientPair()
    with pytest.raises(ValueError):
        evaluate_f(pair, SpectralField.basis(1, 4), SpectralField.basis(1, 8))
    with pytest.raises(ValueError):
        evaluate_g(pair, SpectralField.basis(1, 4), SpectralField.basis(1, 8))
