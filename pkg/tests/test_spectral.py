import math

import numpy as np
import pytest

from app.errors import InvalidParameterError, SingularParameterError
from app.physics.model import make_model
from app.physics.spectral import (build_spectral_set, coefficient, cutoff_for_epsilon,
                                  eigenenergy, energy_bracket, g_function, mean_energy,
                                  measurement_distribution, norm_and_energy_via_g,
                                  second_moment_partial, spectral_set_for_cutoff, tail_bound)


def generic_coefficient(lam, n):
    return 2.0 * lam ** 1.5 / math.pi * math.sin(n * math.pi / lam) / (lam * lam - n * n)


@pytest.mark.parametrize("lam,n", [(1.5, 1), (1.5, 2), (2.5, 7), (5.5, 3)])
def test_coefficient_matches_generic_formula(lam, n):
    assert coefficient(lam, n) == pytest.approx(generic_coefficient(lam, n), rel=1e-12)


def test_coefficient_at_integer_lambda():
    assert coefficient(2.0, 2) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)
    assert coefficient(2.0 + 1e-12, 2) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)
    # continuous through the switch radius
    assert coefficient(2.0 + 1e-7, 2) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-6)


def test_ground_coefficient_tends_to_one_for_small_expansion():
    for delta in (1e-2, 1e-4, 1e-6):
        assert coefficient(1.0 + delta, 1) == pytest.approx(1.0, abs=10 * delta)


def test_coefficient_rejects_level_zero():
    with pytest.raises(ValueError):
        coefficient(1.5, 0)


def test_tail_bound_and_cutoff():
    assert tail_bound(1.5, 1) == math.inf
    assert tail_bound(1.5, 1000) > tail_bound(1.5, 2000)
    n_max = cutoff_for_epsilon(1.5, 1e-6)
    assert tail_bound(1.5, n_max) <= 1e-6 < tail_bound(1.5, n_max - 1)


def test_build_spectral_set(spectral_3_2):
    assert spectral_3_2.tail_bound <= 1e-6
    assert spectral_3_2.coefficients.shape == (spectral_3_2.n_max,)
    assert spectral_3_2.epsilon == 1e-6


@pytest.mark.parametrize("epsilon", [0.0, -1e-3, math.inf])
def test_build_spectral_set_rejects_bad_epsilon(epsilon):
    with pytest.raises(InvalidParameterError):
        build_spectral_set(make_model(1.5), epsilon)


def test_spectral_set_for_cutoff_needs_levels_above_lambda():
    with pytest.raises(InvalidParameterError):
        spectral_set_for_cutoff(make_model(5.5), 5)


def test_partial_norm_converges():
    spectral_set = spectral_set_for_cutoff(make_model(1.5), 100_000)
    assert spectral_set.norm_partial() == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("level", [2, 3, 5])
def test_measurement_at_integer_lambda(level):
    distribution = measurement_distribution(make_model(level), 50)
    assert distribution.probabilities[level - 1] == pytest.approx(1.0 / level, abs=1e-10)


def test_measurement_sum_and_mode():
    distribution = measurement_distribution(make_model(1.5), 100_000)
    assert distribution.partial_sum == pytest.approx(1.0, abs=1e-4)
    assert measurement_distribution(make_model(20), 200).most_probable_level() in (19, 20, 21)


def test_mean_energy_is_ground_energy(spectral_3_2):
    assert mean_energy(spectral_3_2) == pytest.approx(1.0, abs=1e-6)


def test_energy_variance_diverges():
    spectral_set = spectral_set_for_cutoff(make_model(1.5), 20_000)
    sums = dict(second_moment_partial(spectral_set, [1_000, 2_000, 10_000, 20_000]))
    assert 1.8 <= sums[2_000] / sums[1_000] <= 2.2
    assert 1.8 <= sums[20_000] / sums[10_000] <= 2.2


def test_second_moment_rejects_large_cutoff(spectral_3_2):
    with pytest.raises(ValueError):
        second_moment_partial(spectral_3_2, [spectral_3_2.n_max + 1])


def test_sum_rules_for_random_lambdas():
    rng = np.random.default_rng(7)
    lambdas = [lam for lam in rng.uniform(1.0, 10.0, 200) if abs(lam - round(lam)) > 0.01][:20]
    assert len(lambdas) == 20
    for lam in lambdas:
        norm, energy = norm_and_energy_via_g(float(lam))
        assert norm == pytest.approx(1.0, abs=1e-10)
        assert energy == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("lam", [1.0001, 2.0 + 1e-6, 3.0 + 1e-7, 4.0 - 1e-8])
def test_sum_rules_near_integer_lambda(lam):
    norm, energy = norm_and_energy_via_g(lam)
    assert norm == pytest.approx(1.0, abs=1e-10)
    assert energy == pytest.approx(1.0, abs=1e-10)
    assert abs(energy_bracket(lam)) < 1e-12


def test_g_closed_form_matches_series():
    for lam, phi in [(2.5, 0.3), (1.5, 1.0), (3.7, 2.2)]:
        closed = g_function(lam, phi)
        series = g_function(lam, phi, mode="series", n_terms=20_000)
        assert series == pytest.approx(closed, abs=1e-4)


@pytest.mark.parametrize("lam,phi", [(2.5, 0.3), (1.5, 1.0)])
def test_g_series_converges_like_one_over_n(lam, phi):
    closed = g_function(lam, phi)
    for n_terms in (100, 1_000, 10_000):
        error = abs(g_function(lam, phi, mode="series", n_terms=n_terms) - closed)
        assert error <= 4.0 / n_terms


def test_energy_bracket_vanishes():
    assert energy_bracket(2.5) == pytest.approx(0.0, abs=1e-12)


def test_g_singular_at_integer_lambda():
    with pytest.raises(SingularParameterError):
        g_function(2.0, 0.0)
    with pytest.raises(SingularParameterError):
        norm_and_energy_via_g(3.0)


def test_eigenenergy():
    assert eigenenergy(make_model(2), 2) == 1.0
    assert eigenenergy(make_model(1.5), 3) == pytest.approx(4.0)
