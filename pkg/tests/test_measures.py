import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rieszdecay.errors import AlphaOutOfRange, BetaOutOfRange, DimensionMismatch
from rieszdecay.measures import (AtomicMeasure, FrequencyWindow, Parameters, SampledField, VectorMeasure,
                                 ball_volume, sphere_area, total_variation, validate_parameters)


def test_p_weak_is_derived():
    P = Parameters(2, 1.0, 1.0)
    assert P.p_weak == pytest.approx(4.0 / 3.0)
    assert P.alpha_range == (0.5, 1.5)
    assert P.admissible


@pytest.mark.parametrize("args,err", [((1, 0.2, 0.5), AlphaOutOfRange), ((1, 0.8, 0.5), AlphaOutOfRange),
                                      ((2, 1.0, 0.0), BetaOutOfRange), ((2, 1.0, 2.5), BetaOutOfRange),
                                      ((0, 1.0, 1.0), DimensionMismatch)])
def test_validate_rejects(args, err):
    with pytest.raises(err):
        validate_parameters(Parameters(*args))


def test_zero_beta_only_when_allowed():
    P = validate_parameters(Parameters(1, 0.6, 0.0), allow_zero_beta=True)
    assert P.p_weak == pytest.approx(1.0 / 0.6)


@settings(max_examples=60, deadline=None)
@given(d=st.integers(1, 3), beta_frac=st.floats(0.01, 1.0), a_frac=st.floats(0.01, 0.99))
def test_admissible_interior_validates(d, beta_frac, a_frac):
    beta = beta_frac * d
    lo, hi = (d - beta) / 2, d - beta / 2
    P = validate_parameters(Parameters(d, lo + a_frac * (hi - lo), beta))
    assert P.p_weak == pytest.approx(2 * d / (2 * P.alpha + beta))
    assert 1.0 < P.p_weak < 2.0


def test_atomic_measure_is_immutable():
    mu = AtomicMeasure([[0.0], [1.0]], [1.0, -2.0])
    with pytest.raises(AttributeError):
        mu.weights = None
    with pytest.raises(ValueError):
        mu.weights[0] = 3.0
    with pytest.raises(DimensionMismatch):
        AtomicMeasure([[0.0], [1.0]], [1.0])


def test_atomic_operations():
    mu = AtomicMeasure([[0.0, 0.0], [1.0, 2.0]], [1.0, 1j], resolution=0.5)
    assert mu.dimension == 2 and len(mu) == 2
    assert total_variation(mu) == pytest.approx(2.0)
    assert total_variation(2 * mu) == pytest.approx(4.0)
    nu = mu.dilated(3.0, 0.5)
    np.testing.assert_allclose(nu.locations, 3 * mu.locations)
    assert nu.resolution == pytest.approx(1.5)
    assert total_variation(nu) == pytest.approx(1.0)
    assert mu.translated([1, 1]).diameter() == pytest.approx(mu.diameter())
    assert (mu + mu).n_atoms == 4
    with pytest.raises(DimensionMismatch):
        mu + AtomicMeasure([0.0], [1.0])


def test_vector_measure_total_variation():
    V = VectorMeasure([[0.0, 0.0], [1.0, 0.0]], [[3.0, 4.0], [0.0, 1.0]])
    assert total_variation(V) == pytest.approx(6.0)
    assert len(V.components) == 2
    with pytest.raises(DimensionMismatch):
        VectorMeasure([[0.0, 0.0]], [[1.0]])


def test_ball_and_sphere_constants():
    assert ball_volume(1) == pytest.approx(2.0)
    assert ball_volume(2, 2.0) == pytest.approx(4 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    for d in (1, 2, 3, 4):
        assert sphere_area(d) == pytest.approx(d * ball_volume(d))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_window_counts_approximate_annulus_volume(d):
    W = FrequencyWindow(1.0, 6.0, 1 / 16, d)
    vol = ball_volume(d, 6.0) - ball_volume(d, 1.0)
    assert W.count() * W.cell_volume == pytest.approx(vol, rel=0.02)
    r = np.linalg.norm(W.points(), axis=1)
    assert r.min() >= 1.0 and r.max() <= 6.0


def test_window_rejects_invalid_and_high_dimension():
    with pytest.raises(ValueError):
        FrequencyWindow(2.0, 1.0, 0.1, 2)
    with pytest.raises(DimensionMismatch):
        FrequencyWindow(0.0, 1.0, 0.1, 4)


def test_sampled_field_distribution():
    F = SampledField([3.0, -1.0, 2j, 0.5], 0.25)
    np.testing.assert_allclose(F.distribution([0.0, 1.0, 2.0, 3.0]), [1.0, 0.5, 0.25, 0.0])
    assert F.total_volume == pytest.approx(1.0)
    np.testing.assert_allclose(F.scaled(2).magnitudes, 2 * F.magnitudes)
    with pytest.raises(ValueError):
        SampledField([1.0], 0.0)


@settings(max_examples=40, deadline=None)
@given(vals=st.lists(st.floats(-10, 10), min_size=1, max_size=40), lam=st.floats(0, 12))
def test_distribution_is_monotone(vals, lam):
    F = SampledField(vals, 0.1)
    assert F.distribution(lam) >= F.distribution(lam + 0.5)
