import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lzcross.errors import BadInterval, DegenerateModel
from lzcross.model import (CutoffSpec, Regime, ScaleParams, SmoothFunction,
                           build_system, classify_regime, scale_params,
                           vanishing_order)
from lzcross.presets import PRESETS, get_preset


def poly(*coeffs, domain=(-1.0, 1.0)):
    return SmoothFunction(tuple(coeffs), domain)


# --- vanishing order --------------------------------------------------------

def test_vanishing_order_monomial():
    assert vanishing_order(poly(0, 0, 0, 1)) == 3


def test_vanishing_order_nonzero_constant():
    assert vanishing_order(poly(1, 1)) == 0


def test_vanishing_order_lowest_nonzero_coefficient():
    assert vanishing_order(poly(0, 0, 1, 0, 0, -1), tol=0.0) == 2


def test_vanishing_order_zero_polynomial_is_infinite():
    assert vanishing_order(poly(0.0)) is math.inf


def test_vanishing_order_tolerance_skips_noise():
    f = poly(0, 1e-14, 1.0)
    assert vanishing_order(f, tol=1e-10) == 2
    assert vanishing_order(f, tol=0.0) == 1


# --- SmoothFunction calculus -------------------------------------------------

def test_derivatives_and_antiderivative_are_exact():
    f = poly(1, 2, 3)            # 1 + 2x + 3x^2
    assert f.deriv_at(0) == 1
    assert f.deriv_at(1) == 2
    assert f.deriv_at(2) == 6
    assert f.deriv_at(3) == 0
    F = f.antiderivative()
    assert F(0.0) == 0.0
    x = 0.37
    assert F(x) == pytest.approx(x + x**2 + x**3, rel=1e-15)


def test_domain_must_contain_zero():
    with pytest.raises(BadInterval):
        SmoothFunction((1.0,), (0.0, 1.0))


def test_real_roots_in_is_exact():
    f = poly(0, -1, 0, 1)        # x(x^2 - 1)
    roots = f.shifted_down(1).real_roots_in(-2, 2)
    assert roots == pytest.approx([-1.0, 1.0])


# --- build_system -------------------------------------------------------------

def test_build_system_tangential_example():
    spec = build_system(poly(0, 0, 0.5), poly(0, 0, -0.5))
    assert spec.m == 2
    assert spec.n1 == spec.n2 == 0
    assert spec.geometry.leading_gap == pytest.approx(2.0)
    assert spec.geometry.V0 == 0.0
    assert spec.geometry.rho0 == (0.0, 0.0)


def test_build_system_transversal_example():
    spec = build_system(poly(0, 1), poly(0, -1))
    assert spec.m == 1


def test_build_system_rejects_identical_potentials():
    with pytest.raises(DegenerateModel):
        build_system(poly(0, 1), poly(0, 1))


def test_build_system_rejects_extra_gap_zero():
    # V1 - V2 = x^2 (1 - 4 x^2) vanishes again at +-1/2
    with pytest.raises(DegenerateModel):
        build_system(poly(0, 0, 1, 0, -4), poly(0.0))


def test_build_system_rejects_zero_coupling():
    with pytest.raises(DegenerateModel):
        build_system(poly(0, 1), poly(0, -1), U1=poly(0.0))


def test_build_system_rejects_cutoff_outside_interval():
    with pytest.raises(BadInterval):
        build_system(poly(0, 1), poly(0, -1), cutoff=CutoffSpec(0.5, 1.5))


def test_geometry_idempotent_on_presets():
    for name, preset in PRESETS.items():
        spec = preset.make()
        assert vanishing_order(spec.gap) == spec.m, name
        assert vanishing_order(spec.U1) == spec.n1, name
        assert vanishing_order(spec.U2) == spec.n2, name
        assert spec.geometry.leading_gap == pytest.approx(
            spec.gap.coeffs[spec.m] * math.factorial(spec.m))


# --- scale parameters ----------------------------------------------------------

def test_mu_k_direct_value():
    sc = ScaleParams(eps_tilde=1e-2, h=1e-2, m=1, n1=0, n2=0)
    assert sc.mu_k(1) == pytest.approx(0.1, rel=1e-12)


def test_mu_ml_plain_branch():
    sc = ScaleParams(eps_tilde=5e-4, h=1e-3, m=2, n1=0, n2=0)
    # 2l+1 = 1 < m = 2: plain power branch
    assert sc.mu_ml(2, 0) == pytest.approx(5e-4 * 1e-3 ** (-2 / 3), rel=1e-12)
    assert sc.mu_ml(2, 0) == pytest.approx(0.05, rel=1e-12)


def test_mu_ml_log_branch():
    h = 1e-3
    sc = ScaleParams(eps_tilde=math.sqrt(h), h=h, m=1, n1=0, n2=0)
    # 2l+1 = 1 >= m = 1 with equality: log factor present
    assert sc.mu_ml(1, 0) == pytest.approx(math.log(1 / h) ** 0.5, rel=1e-12)
    # strict inequality: no log factor
    sc3 = ScaleParams(eps_tilde=math.sqrt(h), h=h, m=1, n1=2, n2=2)
    assert sc3.mu_ml(1, 2) == pytest.approx(1.0, rel=1e-12)


def test_zeta_consistency():
    for (et, h, m, n1, n2) in ((5e-4, 1e-3, 2, 0, 0), (1e-3, 1e-2, 3, 1, 2),
                               (2e-4, 1e-4, 2, 1, 1), (1e-3, 1e-3, 3, 1, 1)):
        sc = ScaleParams(eps_tilde=et, h=h, m=m, n1=n1, n2=n2)
        assert sc.zeta * et**2 == pytest.approx(sc.mu_mn**2, rel=1e-12)
        assert sc.zeta == pytest.approx(sc._zeta_raw(), rel=1e-12)


def test_nu_and_zeta_j():
    sc = ScaleParams(eps_tilde=1e-3, h=1e-2, m=2, n1=0, n2=1)
    assert sc.nu1 == pytest.approx(2 / 3)          # iota(2*0) = 0
    assert sc.nu2 == pytest.approx(1 / 3)          # (2 - 1 - iota(2))/3, iota(2) = 0
    assert sc.zeta1 == pytest.approx(1e-2 ** (-1 - 2 / 3), rel=1e-12)
    # odd product: iota(1) = 1
    sc_odd = ScaleParams(eps_tilde=1e-3, h=1e-2, m=1, n1=1, n2=1)
    assert sc_odd.nu1 == pytest.approx(-0.5)


@given(st.floats(min_value=1e-6, max_value=0.99), st.floats(min_value=1e-8, max_value=1.0),
       st.integers(min_value=0, max_value=8))
@settings(max_examples=50, deadline=None)
def test_mu_k_monotone_in_k(h, eps, k):
    sc = ScaleParams(eps_tilde=eps, h=h, m=2, n1=0, n2=0)
    assert sc.mu_k(k + 1) > sc.mu_k(k) * (1 - 1e-12)


# --- regimes ---------------------------------------------------------------------

def test_regime_noncoupled_powerlaw_point():
    # eps_tilde^(m+1) = h^(2m) at m = 2, h = 1e-3  =>  mu_2 = h^(2/3) = 1e-2
    h, m = 1e-3, 2
    et = h ** (2 * m / (m + 1))
    spec = get_preset("tangent-m2").make(h=h, eps1=et, eps2=et)
    assert scale_params(spec).mu_m == pytest.approx(1e-2, rel=1e-10)
    assert classify_regime(spec) is Regime.NONCOUPLED


def test_regime_marginal_at_unit_mu():
    h, m = 1e-3, 2
    et = h ** (m / (m + 1))       # mu_m = 1 exactly
    spec = get_preset("tangent-m2").make(h=h, eps1=et, eps2=et)
    assert classify_regime(spec) is Regime.MARGINAL


def test_regime_coupled_example():
    h = 1e-4
    et = math.sqrt(h)             # mu_2 = h^(-1/6) ~ 4.64
    spec = get_preset("tangent-m2").make(h=h, eps1=et, eps2=et)
    assert scale_params(spec).mu_m == pytest.approx(h ** (-1 / 6), rel=1e-10)
    assert classify_regime(spec) is Regime.COUPLED


# --- cutoff ------------------------------------------------------------------------

def test_cutoff_plateau_support_and_range():
    cut = CutoffSpec(0.3, 0.7)
    x = np.linspace(-1, 1, 4001)
    v = cut.chi(x)
    assert np.all(v >= 0.0) and np.all(v <= 1.0)
    assert np.all(v[np.abs(x) <= 0.3] == 1.0)
    assert np.all(v[np.abs(x) >= 0.7] == 0.0)


def test_cutoff_flat_at_support_edge():
    cut = CutoffSpec(0.3, 0.7)
    d = 1e-4
    # one-sided differences of several orders vanish to machine precision
    vals = cut.chi(np.array([0.7 - 3 * d, 0.7 - 2 * d, 0.7 - d, 0.7]))
    first = (vals[3] - vals[2]) / d
    second = (vals[3] - 2 * vals[2] + vals[1]) / d**2
    assert abs(first) < 1e-10
    assert abs(second) < 1e-8


def test_cutoff_requires_order():
    with pytest.raises(BadInterval):
        CutoffSpec(0.7, 0.3)
