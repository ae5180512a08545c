from fractions import Fraction

import numpy as np
import pytest

from app.analysis.structure_analysis import compare
from app.errors import GridError
from app.physics.closedform import initial_wavefunction, sample_density, sample_wave
from app.physics.evolution import (SeriesEvaluator, check_symmetries, current, density,
                                   evaluate_wavefunction)
from app.physics.model import RationalTime, SpatialGrid, as_time, make_grid, make_model
from app.physics.spectral import build_spectral_set, spectral_set_for_cutoff

from conftest import QUARTER


def test_initial_state_is_recovered(model_3_2, spectral_3_2):
    grid = make_grid(model_3_2, 1024)
    field = evaluate_wavefunction(spectral_3_2, grid, RationalTime(0, 1))
    exact = sample_wave(initial_wavefunction(model_3_2), grid, RationalTime(0, 1))
    assert compare(field, exact).passed
    assert field.error_bound == spectral_3_2.tail_bound
    assert field.n_max == spectral_3_2.n_max


def test_density_error_bound_and_norm(model_3_2, spectral_3_2, grid_3_2):
    profile = density(evaluate_wavefunction(spectral_3_2, grid_3_2, RationalTime(1, 7)))
    assert profile.error_bound > 0
    assert profile.wave_field is not None
    assert profile.integral() == pytest.approx(1.0, abs=1e-4)
    assert profile.wave_field.norm() == pytest.approx(1.0, abs=1e-4)


def test_density_at_time_zero_matches_closed_form(model_3_2, spectral_3_2, grid_3_2):
    tau = RationalTime(0, 1)
    series = density(evaluate_wavefunction(spectral_3_2, grid_3_2, tau))
    closed = sample_density(initial_wavefunction(model_3_2), grid_3_2, tau)
    assert compare(series, closed).passed


def test_lattice_and_direct_paths_agree(model_3_2):
    spectral_set = build_spectral_set(model_3_2, 1e-4)
    lattice = make_grid(model_3_2, 64)
    direct = SpatialGrid(lattice.points.copy(), lattice.lam, True)
    assert not direct.is_lattice
    evaluator = SeriesEvaluator(spectral_set)
    values, derivative = evaluator.evaluate(lattice, QUARTER, gradient=True)
    direct_values, direct_derivative = evaluator.evaluate(direct, QUARTER, gradient=True)
    np.testing.assert_allclose(values, direct_values, atol=1e-10)
    np.testing.assert_allclose(derivative, direct_derivative, atol=1e-6)


def test_rational_and_real_time_agree(model_3_2):
    spectral_set = build_spectral_set(model_3_2, 1e-5)
    grid = make_grid(model_3_2, 256)
    evaluator = SeriesEvaluator(spectral_set)
    exact, _ = evaluator.evaluate(grid, RationalTime(1, 8))
    real, _ = evaluator.evaluate(grid, 0.125)
    np.testing.assert_allclose(real, exact, atol=1e-9)


def test_whole_periods_give_identical_values(model_3_2):
    spectral_set = build_spectral_set(model_3_2, 1e-5)
    grid = make_grid(model_3_2, 512)
    base = evaluate_wavefunction(spectral_set, grid, as_time("3/8")).values
    for later in ("19/8", Fraction(35, 8), "83/8"):
        shifted = evaluate_wavefunction(spectral_set, grid, as_time(later)).values
        assert np.array_equal(shifted, base)


def test_grid_for_other_lambda_is_rejected(spectral_3_2):
    with pytest.raises(GridError):
        evaluate_wavefunction(spectral_3_2, make_grid(make_model(2.5), 64), QUARTER)


def test_quarter_period_current_lambda_3_2(model_3_2, spectral_3_2, grid_3_2):
    profile = current(spectral_3_2, grid_3_2, QUARTER)
    assert profile.piecewise_constant_expected
    assert profile.interval_median(0.55, 0.95) == pytest.approx(-1.0, abs=1e-3)
    assert profile.interval_median(0.0, 0.45) == pytest.approx(0.0, abs=1e-3)
    assert profile.interval_median(1.05, 1.5) == pytest.approx(0.0, abs=1e-3)


def test_quarter_period_current_lambda_5_2():
    model = make_model("5/2")
    profile = current(build_spectral_set(model, 1e-6), make_grid(model, 4096), QUARTER)
    for lo, hi in [(0.0, 0.95), (1.05, 1.45), (1.55, 2.5)]:
        assert profile.interval_median(lo, hi) == pytest.approx(0.0, abs=1e-3)


def test_current_with_sigma_smoothing(model_3_2, spectral_3_2, grid_3_2):
    profile = current(spectral_3_2, grid_3_2, QUARTER, smoothing="sigma")
    assert profile.smoothing == "sigma"
    assert profile.interval_median(0.55, 0.95) == pytest.approx(-1.0, abs=1e-3)
    with pytest.raises(ValueError):
        current(spectral_3_2, grid_3_2, QUARTER, smoothing="lanczos")


def test_interval_median_needs_points(model_3_2, spectral_3_2):
    profile = current(spectral_3_2, make_grid(model_3_2, 16), QUARTER)
    with pytest.raises(GridError):
        profile.interval_median(0.5001, 0.5002)


def test_symmetries_for_random_parameters():
    rng = np.random.default_rng(11)
    for lam, tau in zip(rng.uniform(1.1, 6.0, 10), rng.uniform(0.0, 1.0, 10)):
        model = make_model(float(lam))
        report = check_symmetries(build_spectral_set(model, 1e-4), make_grid(model, 512),
                                  float(tau))
        assert report.passed, report.deviations


def test_quarter_mirror_symmetry(model_3_2):
    report = check_symmetries(build_spectral_set(model_3_2, 1e-5), make_grid(model_3_2, 512),
                              QUARTER)
    assert "quarter_mirror" in report.deviations
    assert report.passed


def test_doubling_cutoff_tightens_oracle_error(model_3_2):
    grid = make_grid(model_3_2, 512)
    tau = RationalTime(0, 1)
    closed = sample_density(initial_wavefunction(model_3_2), grid, tau)
    errors = []
    for n_max in (200, 400, 800):
        series = density(evaluate_wavefunction(spectral_set_for_cutoff(model_3_2, n_max), grid, tau))
        report = compare(series, closed)
        assert report.passed
        errors.append(report.sup_norm)
    assert errors[0] > errors[1] > errors[2]
