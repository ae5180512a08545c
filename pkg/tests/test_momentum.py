import math

import numpy as np
import pytest

from app.errors import InvalidParameterError, InvalidTimeError, QuadratureError
from app.physics.momentum import (darboux_check, halfline_profile, halfline_wavefunction,
                                  momentum_naive, momentum_norm, momentum_true,
                                  position_expectation, sample_amplitude)


def test_true_amplitude_is_finite_at_p0():
    assert momentum_true(1.0) == pytest.approx(-0.5j, abs=1e-12)
    assert momentum_true(-1.0) == pytest.approx(0.5j, abs=1e-12)
    for offset in (1e-3, 1e-5, 1e-7):
        assert momentum_true(1.0 + offset) == pytest.approx(-0.5j, abs=2 * offset)


def test_true_amplitude_matches_closed_expression():
    u = np.array([0.0, 0.3, 2.5, -3.7])
    expected = (1 + np.exp(-1j * np.pi * u)) / (np.pi * (1 - u * u))
    np.testing.assert_allclose(momentum_true(u), expected, rtol=1e-12)


def test_physical_units_scale_amplitude():
    p0 = 2.0
    assert momentum_true(0.6, p0) == pytest.approx(momentum_true(0.3) / math.sqrt(p0), rel=1e-12)


def test_naive_amplitude_is_odd_and_imaginary():
    u = np.linspace(0.05, 4.0, 80)
    np.testing.assert_allclose(momentum_naive(-u), -momentum_naive(u), atol=1e-14)
    assert np.all(np.abs(momentum_naive(u).real) < 1e-15)


def test_momentum_norms():
    assert momentum_norm("true_initial") == pytest.approx(1.0, abs=1e-5)
    assert momentum_norm("naive_limit") == pytest.approx(2.0, abs=1e-5)


def test_position_expectation():
    assert position_expectation("true_initial") == pytest.approx(0.5, abs=1e-3)
    assert position_expectation("naive_limit") == pytest.approx(0.0, abs=1e-12)


def test_sample_amplitude():
    amplitude = sample_amplitude("true_initial", np.linspace(-40.0, 40.0, 16001))
    assert amplitude.kind == "true_initial"
    assert amplitude.norm() == pytest.approx(1.0, abs=1e-2)
    with pytest.raises(InvalidParameterError):
        sample_amplitude("classical", [0.0])


def test_halfline_initial_state():
    for x in (0.25, 0.5, 0.8):
        assert halfline_wavefunction(x, 0.0) == pytest.approx(
            math.sqrt(2.0) * math.sin(math.pi * x), abs=1e-3)
    assert abs(halfline_wavefunction(1.7, 0.0)) < 1e-3


def test_halfline_profile_matches_pointwise_integral():
    xs = [0.3, 0.9, 2.0]
    profile = halfline_profile(xs, 0.1)
    for x, value in zip(xs, profile):
        assert value == pytest.approx(halfline_wavefunction(x, 0.1), abs=1e-3)


def test_halfline_needs_a_large_enough_cutoff():
    with pytest.raises(QuadratureError):
        halfline_wavefunction(0.5, 0.0, cutoff=10.0)


@pytest.mark.parametrize("x,t,cutoff,error", [
    (0.5, -0.1, 400.0, InvalidTimeError),
    (0.5, math.inf, 400.0, InvalidTimeError),
    (-0.5, 0.1, 400.0, InvalidParameterError),
    (0.5, 0.1, 2.0, InvalidParameterError),
])
def test_halfline_rejects_invalid_input(x, t, cutoff, error):
    with pytest.raises(error):
        halfline_wavefunction(x, t, cutoff=cutoff)


@pytest.mark.slow
@pytest.mark.parametrize("x,t", [(0.5, 0.1), (1.5, 0.2)])
def test_halfline_limit_matches_wide_well(x, t):
    check = darboux_check(x, t)
    assert check.passed, check.deviation
