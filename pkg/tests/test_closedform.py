import math

import numpy as np
import pytest

from app.errors import ThresholdError
from app.physics.closedform import (TrigTerm, closed_form_for_time, current_eighth,
                                    current_from_psi, current_quarter, cusp_abscissae_eighth,
                                    density_eighth, density_from_psi, density_quarter,
                                    fragmented_density, initial_wavefunction, psi_eighth,
                                    psi_half, psi_quarter, sample_current, sample_density)
from app.physics.model import make_grid, make_model

from conftest import EIGHTH, QUARTER


def interior_points(lam, count=97):
    return np.linspace(0.013, lam - 0.013, count)


def test_trig_term_calculus():
    term = TrigTerm(2.0 + 0j, 3, 0.5)
    xs = np.array([0.1, 0.7])
    np.testing.assert_allclose(term.evaluate(xs), 2.0 * np.sin(3 * np.pi * xs + 0.5))
    np.testing.assert_allclose(term.derivative().evaluate(xs),
                               6.0 * np.pi * np.cos(3 * np.pi * xs + 0.5))
    assert term.antiderivative(0.7) - term.antiderivative(0.1) == pytest.approx(
        2.0 * (math.cos(3 * math.pi * 0.1 + 0.5) - math.cos(3 * math.pi * 0.7 + 0.5)) / (3 * math.pi))


@pytest.mark.parametrize("lam", [1.5, 2.5, 3.0, 5.5])
@pytest.mark.parametrize("builder", [initial_wavefunction, psi_half, psi_quarter, psi_eighth])
def test_closed_forms_are_continuous_and_normalized(lam, builder):
    psi = builder(make_model(lam))
    assert np.all(psi.continuity_defects() < 1e-12)
    assert density_from_psi(psi).integral().real == pytest.approx(1.0, abs=1e-12)


def test_half_period_mirrors_initial_state():
    model = make_model(2.5)
    xs = interior_points(2.5)
    np.testing.assert_allclose(psi_half(model).wavefunction(xs),
                               -initial_wavefunction(model).wavefunction(2.5 - xs), atol=1e-14)


def test_quarter_period_plateau_lambda_3_2(model_3_2):
    rho = density_quarter(model_3_2)
    np.testing.assert_allclose(rho.evaluate([0.6, 0.75, 0.9]), 1.0, atol=1e-12)
    np.testing.assert_allclose(rho.evaluate([0.25]), math.sin(math.pi * 0.25) ** 2, atol=1e-12)


def test_eighth_period_plateau_lambda_3_2(model_3_2):
    rho = density_eighth(model_3_2)
    np.testing.assert_allclose(rho.evaluate([0.3, 0.4, 0.45]), 0.25, atol=1e-12)
    assert rho.integral().real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("lam", [1.2, 1.5, 2.5, 5.5])
def test_quarter_current_step_formula(lam):
    model = make_model(lam)
    xs = interior_points(lam)
    np.testing.assert_allclose(current_quarter(model).evaluate(xs),
                               current_from_psi(psi_quarter(model)).evaluate(xs), atol=1e-12)


def test_quarter_current_values(model_3_2):
    j = current_quarter(model_3_2)
    assert j.evaluate([0.75])[0] == pytest.approx(-1.0, abs=1e-15)
    assert j.evaluate([0.25])[0] == 0.0
    assert np.all(current_quarter(make_model(2.5)).evaluate(interior_points(2.5)) == 0.0)


@pytest.mark.parametrize("lam", [1.5, 2.5, 3.0, 5.5])
def test_eighth_current_step_formula(lam):
    model = make_model(lam)
    xs = interior_points(lam)
    np.testing.assert_allclose(current_eighth(model).evaluate(xs),
                               current_from_psi(psi_eighth(model)).evaluate(xs), atol=1e-12)


def test_cusps_lambda_3_2(model_3_2):
    cusps = cusp_abscissae_eighth(model_3_2)
    assert cusps.abscissae == (1.0, 0.25, 0.75, 1.25, 0.5)
    assert cusps.degenerate_pairs == ()
    # lambda/2 is a candidate but Psi is smooth there
    assert not cusps.psi_kink[2]
    assert not cusps.density_cusp[2]
    assert cusps.active() == [0.25, 0.5, 1.0, 1.25]


def test_cusps_lambda_8_are_zeros_of_psi():
    cusps = cusp_abscissae_eighth(make_model(8))
    assert cusps.abscissae == (1.0, 3.0, 4.0, 5.0, 7.0)
    assert cusps.psi_kink == (True, True, False, True, True)
    assert cusps.active() == []


def test_cusps_degenerate_at_lambda_4():
    cusps = cusp_abscissae_eighth(make_model(4))
    assert (0, 1) in cusps.degenerate_pairs
    assert (3, 4) in cusps.degenerate_pairs


def test_fragmented_density_matches_quarter_period():
    model = make_model(5.5)
    xs = interior_points(5.5)
    fragmented = fragmented_density(model, 1)
    np.testing.assert_allclose(fragmented.evaluate(xs), density_quarter(model).evaluate(xs),
                               atol=1e-12)
    assert fragmented.metadata["conjecture"] is False


def test_fragmented_density_matches_eighth_period():
    model = make_model(8)
    xs = interior_points(8.0)
    np.testing.assert_allclose(fragmented_density(model, 2).evaluate(xs),
                               density_eighth(model).evaluate(xs), atol=1e-12)


def test_higher_orders_are_tagged_as_conjecture():
    rho = fragmented_density(make_model(20), 4)
    assert rho.metadata == {"order": 4, "conjecture": True, "threshold": 16}
    assert rho.integral().real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("lam,order", [(2.0, 1), (1.5, 1), (4.0, 2), (16.0, 4)])
def test_fragmented_density_below_threshold(lam, order):
    with pytest.raises(ThresholdError):
        fragmented_density(make_model(lam), order)


def test_closed_form_for_time(model_3_2):
    assert closed_form_for_time(model_3_2, "1/4").kind == "wavefunction"
    assert closed_form_for_time(model_3_2, "5/4").kind == "wavefunction"
    with pytest.raises(ValueError):
        closed_form_for_time(model_3_2, "1/3")


def test_sampling_helpers(model_3_2):
    grid = make_grid(model_3_2, 256)
    profile = sample_density(psi_eighth(model_3_2), grid, EIGHTH)
    assert profile.source == "closed"
    assert profile.error_bound == 0.0
    assert profile.wave_field is not None
    np.testing.assert_allclose(profile.values, density_eighth(model_3_2).evaluate(grid.points),
                               atol=1e-13)
    j = sample_current(psi_quarter(model_3_2), grid, QUARTER)
    np.testing.assert_allclose(j.values, current_quarter(model_3_2).evaluate(grid.points),
                               atol=1e-12)
