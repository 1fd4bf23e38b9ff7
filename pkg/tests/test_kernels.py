import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from rieszdecay.errors import NonpositiveTime, ZeroFrequency
from rieszdecay.kernels import (BesselOrder, bessel_j, bessel_leading_term, bessel_remainder,
                                frac_laplacian_symbol, heat_kernel, heat_symbol, kernel_derivative_mass,
                                remainder_constant, riesz_symbol)

X = np.linspace(0.1, 100.0, 2000)


def _closed_half(m, x):
    s, c = np.sin(x), np.cos(x)
    pre = np.sqrt(2.0 / (math.pi * x))
    if m == 1:
        return pre * s
    if m == 3:
        return pre * (s / x - c)
    if m == 5:
        return pre * ((3.0 / x ** 2 - 1.0) * s - 3.0 * c / x)
    raise ValueError(m)


@pytest.mark.parametrize("twice_nu", [1, 3, 5])
def test_half_odd_orders_match_elementary_forms(twice_nu):
    np.testing.assert_allclose(bessel_j(twice_nu / 2, X), _closed_half(twice_nu, X), rtol=0, atol=1e-12)


@pytest.mark.parametrize("nu", [0, 1, 2])
def test_integer_orders_match_mpmath(nu):
    x = np.concatenate([np.linspace(0.1, 49.9, 150), np.linspace(50.1, 400.0, 150)])
    ref = np.array([float(mpmath.besselj(nu, v)) for v in x])
    np.testing.assert_allclose(bessel_j(nu, x), ref, rtol=0, atol=1e-12)


def test_bessel_agrees_with_scipy_over_crossover():
    x = np.linspace(45.0, 55.0, 1001)
    np.testing.assert_allclose(bessel_j(1, x), special.jv(1, x), atol=1e-12)


def test_bessel_scalar_and_small_argument():
    assert bessel_j(0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert isinstance(bessel_j(0, 1.0), float)
    assert bessel_j(1, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_bessel_rejects_bad_input():
    with pytest.raises(ValueError):
        bessel_j(0.3, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0, -1.0)
    with pytest.raises(ValueError):
        BesselOrder(-1)
    with pytest.raises(ValueError):
        bessel_remainder(0, 0.5)


def test_order_for_sphere():
    assert BesselOrder.for_sphere(1).nu == 0.0
    assert BesselOrder.for_sphere(2).nu == 0.5


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5])
def test_remainder_decays_like_x_to_minus_three_halves(nu):
    x = np.geomspace(1.0, 1e4, 40000)
    scaled = np.abs(bessel_remainder(nu, x)) * x ** 1.5
    # the next Hankel term has amplitude |4 nu^2 - 1| / 8 * sqrt(2 / pi)
    asym = abs(4 * nu * nu - 1) / 8.0 * math.sqrt(2.0 / math.pi)
    tail = scaled[x > 1e3]
    assert np.all(np.isfinite(scaled))
    assert scaled.max() < 1.0
    if asym == 0:
        assert scaled.max() < 1e-7  # rounding in cos(x) at x ~ 1e4
    else:
        assert tail.max() == pytest.approx(asym, rel=0.01)
    assert remainder_constant(nu) == pytest.approx(scaled.max(), rel=0.05, abs=1e-12)


def test_leading_term_is_the_cosine_asymptote():
    x = np.array([1e4, 2e4])
    np.testing.assert_allclose(bessel_leading_term(0, x), special.j0(x), atol=1e-6)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_heat_kernel_unit_mass(d):
    t = 0.37
    r = lambda s: heat_kernel(np.array([s] + [0.0] * (d - 1)), t)
    mass, _ = integrate.quad(lambda s: r(s) * (2 if d == 1 else 2 * math.pi * s if d == 2 else 4 * math.pi * s * s),
                             0, np.inf, epsabs=1e-13)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_heat_semigroup_identity():
    t, s, x0 = 0.2, 0.45, 0.3
    val, _ = integrate.quad(lambda y: heat_kernel(x0 - y, t) * heat_kernel(y, s), -np.inf, np.inf, epsabs=1e-13)
    assert val == pytest.approx(float(heat_kernel(x0, t + s)), abs=1e-8)


def test_heat_symbol_is_transform_of_kernel():
    t, xi = 0.15, 0.8
    val, _ = integrate.quad(lambda x: heat_kernel(x, t) * math.cos(2 * math.pi * x * xi), -np.inf, np.inf,
                            epsabs=1e-13)
    assert val == pytest.approx(float(heat_symbol(xi, t)), abs=1e-8)


def test_heat_rejects_nonpositive_time():
    with pytest.raises(NonpositiveTime):
        heat_kernel(0.0, 0.0)
    with pytest.raises(NonpositiveTime):
        heat_symbol(1.0, -1.0)


def test_riesz_symbol_values_and_singularity():
    assert riesz_symbol(np.array([1.0, 0.0]), 1.0) == pytest.approx(1.0 / (2 * math.pi))
    with pytest.raises(ZeroFrequency):
        riesz_symbol(np.zeros((3, 2)), 0.5)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.05, 2.5), c=st.floats(0.01, 100.0),
       xi=st.lists(st.floats(-10, 10), min_size=2, max_size=2).filter(lambda v: math.hypot(*v) > 1e-3))
def test_riesz_symbol_homogeneity(alpha, c, xi):
    xi = np.array(xi)
    assert riesz_symbol(c * xi, alpha) == pytest.approx(c ** (-alpha) * riesz_symbol(xi, alpha), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(eta=st.floats(0.05, 2.0), xi=st.floats(0.01, 50.0))
def test_fractional_laplacian_inverts_riesz(eta, xi):
    assert frac_laplacian_symbol(xi, eta) * riesz_symbol(xi, eta) == pytest.approx(1.0, rel=1e-12)


def test_kernel_mass_orders_zero_and_one():
    t = 0.3
    assert kernel_derivative_mass(t, 0, 2) == pytest.approx(1.0, abs=1e-8)
    # int |p_t'| over R is 2 p_t(0)
    assert kernel_derivative_mass(t, 1, 1) == pytest.approx(2.0 / math.sqrt(4 * math.pi * t), rel=1e-8)


@settings(max_examples=8, deadline=None)
@given(t=st.floats(0.05, 5.0), k=st.integers(1, 2), d=st.integers(1, 3))
def test_kernel_mass_scales_like_t_to_minus_half_order(t, k, d):
    ref = kernel_derivative_mass(1.0, k, d)
    assert kernel_derivative_mass(t, k, d) * t ** (k / 2) == pytest.approx(ref, rel=1e-6)


def test_fractional_kernel_mass_scaling():
    a = kernel_derivative_mass(1.0, 0.5, 1)
    b = kernel_derivative_mass(4.0, 0.5, 1)
    assert b * 4.0 ** 0.25 == pytest.approx(a, rel=1e-5)
    assert a > 0
