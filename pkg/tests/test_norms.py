import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import optimize, special

from rieszdecay.constructions import IndicatorSet, cantor_ft, cantor_measure, sphere_ft, sphere_measure
from rieszdecay.errors import EmptyField, EtaPOutOfRange, QNotFinite, QuadratureNotConverged, UnsupportedShape
from rieszdecay.measures import AtomicMeasure, FrequencyWindow, SampledField, ball_volume
from rieszdecay.norms import (LowFrequencyCorrection, TimeGrid, annular_l2_average, besov_norm, besov_profile,
                              default_inner_radius, gagliardo_seminorm, heat_lq_norm, lorentz_norm,
                              lq_interpolated_bound, morrey_norm, morrey_radius_range, strong_lp_norm,
                              weak_lp_norm)

fields = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=60).filter(
    lambda v: any(abs(x) > 1e-6 for x in v))


# ---------------------------------------------------------------------------
# rearrangement quasinorms
# ---------------------------------------------------------------------------

def test_constant_field_closed_forms():
    c, V, p, q = 2.5, 3.0, 4.0 / 3.0, 1.0
    F = SampledField(np.full(300, c), V / 300)
    assert weak_lp_norm(F, p) == pytest.approx(c * V ** (1 / p), rel=1e-12)
    assert lorentz_norm(F, p, q) == pytest.approx(c * V ** (1 / p) * q ** (-1 / q), rel=1e-10)
    assert lorentz_norm(F, p, 2.5) == pytest.approx(c * V ** (1 / p) * 2.5 ** (-1 / 2.5), rel=1e-10)
    assert strong_lp_norm(F, p) == pytest.approx(c * V ** (1 / p), rel=1e-12)


def test_power_field_with_low_frequency_bound():
    # |xi|^{-1} in d=2 is (2 pi |xi|)^{-1} times 2 pi; its weak L^2 norm is sqrt(pi)
    h = 1 / 16
    xi_min = default_inner_radius(h)
    W = FrequencyWindow(xi_min, 8.0, h, 2)
    pts = W.points()
    F = SampledField(1 / np.linalg.norm(pts, axis=1), W.cell_volume)
    corr = LowFrequencyCorrection(2 * math.pi, 1.0, xi_min, 2)
    assert weak_lp_norm(F, 2.0, corr) == pytest.approx(math.sqrt(math.pi), rel=0.01)
    assert weak_lp_norm(F, 2.0) < weak_lp_norm(F, 2.0, corr)


def test_low_frequency_bound_can_make_norm_infinite():
    F = SampledField([1.0], 1.0)
    assert weak_lp_norm(F, 2.0, LowFrequencyCorrection(1.0, 1.0, 0.5, 1)) == math.inf


def test_quasinorm_errors():
    F = SampledField([1.0], 1.0)
    with pytest.raises(QNotFinite):
        lorentz_norm(F, 2.0, math.inf)
    with pytest.raises(ValueError):
        lorentz_norm(F, 2.0, 0.0)
    with pytest.raises(EmptyField):
        weak_lp_norm(SampledField([], 1.0), 2.0)


@settings(max_examples=60, deadline=None)
@given(vals=fields, c=st.floats(0.01, 100), p=st.floats(0.5, 4))
def test_weak_norm_homogeneity(vals, c, p):
    F = SampledField(vals, 0.3)
    assert weak_lp_norm(F.scaled(c), p) == pytest.approx(c * weak_lp_norm(F, p), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(vals=fields, p=st.floats(0.5, 4), q=st.floats(0.2, 8))
def test_weak_norm_dominated_by_lorentz(vals, p, q):
    F = SampledField(vals, 0.3)
    assert weak_lp_norm(F, p) <= q ** (1 / q) * lorentz_norm(F, p, q) * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(vals=fields, p=st.floats(0.5, 4))
def test_lorentz_diagonal_is_strong_norm(vals, p):
    F = SampledField(vals, 0.3)
    assert lorentz_norm(F, p, p) == pytest.approx(p ** (-1 / p) * strong_lp_norm(F, p), rel=1e-9)
    assert weak_lp_norm(F, p) <= strong_lp_norm(F, p) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(vals=fields, lam=st.floats(0.0, 60), p=st.floats(0.5, 4))
def test_weak_norm_bounds_every_level(vals, lam, p):
    F = SampledField(vals, 0.3)
    assert lam * F.distribution(lam) ** (1 / p) <= weak_lp_norm(F, p) * (1 + 1e-12)


# ---------------------------------------------------------------------------
# Besov and Morrey norms
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2])
def test_point_mass_besov_at_beta_zero(d):
    mu = AtomicMeasure(np.zeros((1, d)), [1.0])
    prof = besov_profile(mu, 0.0, TimeGrid(1e-3, 1e3, 2.0))
    assert prof.norm == pytest.approx((4 * math.pi) ** (-d / 2), rel=1e-12)
    np.testing.assert_allclose(prof.values, prof.norm, rtol=1e-12)


def _circle_besov_oracle():
    # sup over radius rho of the heat average over the unit circle, then over t
    def neg(v):
        rho, lt = v
        t = math.exp(lt)
        z = rho / (2 * t)
        val = math.exp(-(rho - 1) ** 2 / (4 * t)) * special.i0e(z) / (2 * t)
        return -math.sqrt(t) * val
    best = min(optimize.minimize(neg, [r0, lt0], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14}).fun
               for r0 in (0.0, 0.5, 1.0) for lt0 in (-2.0, -0.5, 1.0))
    return -best


def test_circle_besov_matches_bessel_oracle():
    mu = sphere_measure(1, 2, 1024)
    prof = besov_profile(mu, 1.0)
    oracle = _circle_besov_oracle()
    assert prof.norm == pytest.approx(oracle, rel=2e-3)
    assert prof.norm <= oracle * (1 + 1e-9)
    assert 0 <= prof.stability < 1e-2


def test_zero_measure_besov_is_zero():
    assert besov_norm(AtomicMeasure([[0.0]], [0.0]), 0.5) == 0.0


def test_morrey_closed_forms():
    assert morrey_norm(AtomicMeasure([[0.0]], [1.0]), 0.0) == pytest.approx(1.0)
    assert morrey_norm(sphere_measure(1, 2, 1024), 1.0) == pytest.approx(math.pi, rel=1e-9)
    vals = [morrey_norm(cantor_measure(L), math.log(2) / math.log(3)) for L in (6, 8)]
    assert vals[0] == pytest.approx(vals[1], rel=0.02)
    lo, hi = morrey_radius_range(cantor_measure(8))
    assert lo < hi


def test_morrey_explicit_radii():
    mu = AtomicMeasure([[0.0], [1.0]], [1.0, 1.0])
    assert morrey_norm(mu, 1.0, centers=[[0.0]], radii=[0.5, 1.0, 2.0]) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# annular L2 averages and heat-semigroup norms
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2, 3])
def test_point_mass_l2_average_is_ball_volume(d):
    mu = AtomicMeasure(np.zeros((1, d)), [1.0])
    for R in (2.0, 5.0):
        assert annular_l2_average(mu, 0.0, R, spacing=0.25) == pytest.approx(ball_volume(d), rel=1e-12)


def test_circle_l2_average_samplers_agree():
    mu = sphere_measure(1, 2, 1024)
    ft = sphere_ft(1, 2)
    R = 12.0
    lat = annular_l2_average(mu, 1.0, R, transform=ft)
    rad = annular_l2_average(mu, 1.0, R, sampler="radial", transform=ft)
    mc = annular_l2_average(mu, 1.0, R, sampler="montecarlo", transform=ft, n_samples=400_000, tol=0.02)
    # independent radial oracle: int_0^R (2 pi J_0(2 pi r))^2 2 pi r dr / R
    oracle = float(mpmath.quad(lambda r: (2 * mpmath.pi * mpmath.besselj(0, 2 * mpmath.pi * r)) ** 2
                               * 2 * mpmath.pi * r, mpmath.linspace(0, R, 25))) / R
    assert rad == pytest.approx(oracle, rel=1e-6)
    assert lat == pytest.approx(oracle, rel=0.01)
    assert mc == pytest.approx(oracle, rel=0.05)


def test_cantor_l2_average_with_product_formula():
    mu = cantor_measure(8)
    beta = math.log(2) / math.log(3)
    v = annular_l2_average(mu, beta, 30.0, transform=cantor_ft(8), d=1)
    direct = annular_l2_average(mu, beta, 30.0, d=1)
    assert v == pytest.approx(direct, rel=1e-9)


def test_l2_average_errors():
    mu = AtomicMeasure([[0.0], [3.0]], [1.0, 1.0])
    with pytest.raises(QuadratureNotConverged):
        annular_l2_average(mu, 0.0, 4.0, spacing=0.3, tol=1e-4)
    with pytest.raises(ValueError):
        annular_l2_average(mu, 0.0, -1.0)
    with pytest.raises(ValueError):
        annular_l2_average(mu, 0.0, 1.0, sampler="nope")


@pytest.mark.parametrize("q", [1.0, 2.0, 3.5])
def test_heat_lq_of_point_mass(q):
    t = 0.4
    mu = AtomicMeasure([[0.0]], [1.0])
    exact = (4 * math.pi * t) ** (-(1 - 1 / q) / 2) * q ** (-1 / (2 * q))
    assert heat_lq_norm(mu, t, q) == pytest.approx(exact, rel=1e-6)
    assert heat_lq_norm(mu, t, math.inf) == pytest.approx((4 * math.pi * t) ** -0.5, rel=1e-12)


@pytest.mark.parametrize("q,t", [(2.0, 0.05), (3.0, 0.5), (1.5, 2.0)])
def test_interpolated_heat_bound_holds(q, t):
    mu = cantor_measure(6)
    beta = math.log(2) / math.log(3)
    lhs, rhs = lq_interpolated_bound(mu, beta, q, t, besov=besov_norm(mu, beta))
    assert lhs <= rhs


# ---------------------------------------------------------------------------
# Gagliardo seminorm of indicators
# ---------------------------------------------------------------------------

def test_interval_seminorm_closed_form():
    E = IndicatorSet.interval(0.0, 1.0)
    for s, tol in ((0.25, 1e-4), (0.5, 1e-3), (0.8, 1.5e-2)):
        assert gagliardo_seminorm(E, s, 1.0) == pytest.approx(4 / (s * (1 - s)), rel=tol)
    assert gagliardo_seminorm(IndicatorSet.ball((0.5,), 0.5), 0.5, 1.0) == pytest.approx(16.0, rel=1e-3)


def _fourier_seminorm_disk(s):
    # 2 K_s int |hat chi|^2 |xi|^s with K_s = int (1 - cos(2 pi h_1)) |h|^{-2-s} dh
    K = float(mpmath.quad(lambda r: 2 * mpmath.pi * (1 - mpmath.besselj(0, 2 * mpmath.pi * r)) * r ** (-1 - s),
                          [0, 1, 10, 100, mpmath.inf]))
    X = 4000.0
    g, w = np.polynomial.legendre.leggauss(24)
    edges = np.arange(0.0, X + 0.25, 0.25)
    half = 0.125
    r = ((edges[:-1] + edges[1:]) / 2)[:, None] + half * g
    r = r.ravel()
    wr = np.tile(w * half, edges.size - 1)
    chi2 = np.where(r > 0, special.j1(2 * math.pi * r) / r, math.pi) ** 2
    body = np.sum(wr * chi2 * r ** s * 2 * math.pi * r)
    tail = X ** (s - 1) / (math.pi * (1 - s))
    return 2 * K * (body + tail)


def test_disk_seminorm_against_fourier_route():
    s = 0.5
    assert gagliardo_seminorm(IndicatorSet.ball((0.0, 0.0), 1.0), s, 1.0) == pytest.approx(
        _fourier_seminorm_disk(s), rel=0.01)


@settings(max_examples=10, deadline=None)
@given(L=st.floats(0.2, 6.0), s=st.floats(0.1, 0.9), shape=st.sampled_from(["interval", "square", "disk"]))
def test_seminorm_dilation_scaling(L, s, shape):
    E = {"interval": IndicatorSet.interval(0.0, 1.0), "square": IndicatorSet.cube(1.0, 2),
         "disk": IndicatorSet.ball((0.0, 0.0), 1.0)}[shape]
    a = gagliardo_seminorm(E, s, 1.0, resolution=16)
    b = gagliardo_seminorm(E.dilated(L), s, 1.0, resolution=16)
    assert b == pytest.approx(L ** (E.d - s) * a, rel=1e-3)


def test_seminorm_errors():
    with pytest.raises(EtaPOutOfRange):
        gagliardo_seminorm(IndicatorSet.interval(0, 1), 1.0, 1.0)
    with pytest.raises(EtaPOutOfRange):
        gagliardo_seminorm(IndicatorSet.interval(0, 1), 0.0, 1.0)
    with pytest.raises(UnsupportedShape):
        gagliardo_seminorm(IndicatorSet.cube(1.0, 3), 0.5, 1.0)
