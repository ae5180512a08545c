import numpy as np
import pytest

from app.analysis.structure_analysis import (compare, conjecture_scan, count_peaks,
                                             detect_cusps, detect_fragments, detect_plateaux,
                                             estimate_threshold, expected_peak_count,
                                             threshold_from_reports)
from app.errors import GridError, GridMismatchError, UnderResolvedGridError
from app.physics.closedform import (density_eighth, density_quarter, initial_wavefunction,
                                    psi_eighth, psi_half, sample_density)
from app.physics.evolution import density, evaluate_wavefunction
from app.physics.model import RationalTime, grid_from_points, make_grid, make_model
from app.physics.spectral import build_spectral_set

from conftest import EIGHTH, HALF, QUARTER

ENDPOINT_TOLERANCE = 2e-3


@pytest.fixture(scope="module")
def precise_3_2():
    return build_spectral_set(make_model("3/2"), 1e-7)


def series_density(spectral_set, grid, tau):
    return density(evaluate_wavefunction(spectral_set, grid, tau))


def test_quarter_period_series_matches_closed_form(model_3_2, grid_3_2, precise_3_2):
    series = series_density(precise_3_2, grid_3_2, QUARTER)
    closed = density_quarter(model_3_2).evaluate(grid_3_2.points)
    assert np.max(np.abs(series.values - closed)) <= 1e-6

    report = detect_plateaux(series)
    assert len(report.plateaux) == 1
    plateau = report.plateaux[0]
    assert plateau.lo == pytest.approx(0.5, abs=ENDPOINT_TOLERANCE)
    assert plateau.hi == pytest.approx(1.0, abs=ENDPOINT_TOLERANCE)
    assert plateau.value == pytest.approx(1.0, abs=1e-6)


def test_eighth_period_series_matches_closed_form(model_3_2, grid_3_2, precise_3_2):
    series = series_density(precise_3_2, grid_3_2, EIGHTH)
    closed = sample_density(psi_eighth(model_3_2), grid_3_2, EIGHTH)
    report = compare(series, closed)
    assert report.passed
    assert report.sup_norm <= 1e-6

    plateaux = [p for p in detect_plateaux(series).plateaux
                if abs(p.lo - 0.25) <= ENDPOINT_TOLERANCE]
    assert len(plateaux) == 1
    assert plateaux[0].hi == pytest.approx(0.5, abs=ENDPOINT_TOLERANCE)
    assert plateaux[0].value == pytest.approx(0.25, abs=1e-6)


def test_closed_form_plateau_is_exact(model_3_2, grid_3_2):
    closed = sample_density(psi_eighth(model_3_2), grid_3_2, EIGHTH)
    report = detect_plateaux(closed)
    assert report.tolerance == 1e-10
    assert any(p.value == pytest.approx(0.25, abs=1e-12) for p in report.plateaux)
    assert report.mask(grid_3_2.points)[np.searchsorted(grid_3_2.points, 0.375)]


def test_cusps_at_eighth_period(model_3_2, grid_3_2):
    closed = sample_density(psi_eighth(model_3_2), grid_3_2, EIGHTH)
    report = detect_cusps(closed)
    step = 2.0 * report.uncertainty
    found = report.abscissae
    assert len(found) == 4
    for x, expected in zip(found, [0.25, 0.5, 1.0, 1.25]):
        assert x == pytest.approx(expected, abs=1.5 * step)
    assert report.mask(grid_3_2.points).sum() >= 4


def test_smooth_initial_density_has_no_interior_cusps(model_3_2, grid_3_2):
    closed = sample_density(initial_wavefunction(model_3_2), grid_3_2, RationalTime(0, 1))
    report = detect_cusps(closed)
    assert report.density_cusps == ()
    assert len(report.psi_kinks) == 1
    assert report.psi_kinks[0] == pytest.approx(1.0, abs=2.0 * report.uncertainty)


def test_no_cusp_at_old_wall_after_half_period(model_3_2, grid_3_2):
    closed = sample_density(psi_half(model_3_2), grid_3_2, HALF)
    report = detect_cusps(closed)
    assert report.density_cusps == ()
    assert all(abs(x - 1.0) > 2.0 * report.uncertainty for x in report.abscissae)


def test_cusps_repeat_at_reversed_time():
    model = make_model(3.7)
    grid = make_grid(model, 4096)
    spectral_set = build_spectral_set(model, 1e-5)
    forward = detect_cusps(series_density(spectral_set, grid, RationalTime(3, 16)))
    backward = detect_cusps(series_density(spectral_set, grid, RationalTime(13, 16)))
    assert forward.abscissae
    assert forward.abscissae == backward.abscissae


def test_kinks_at_eighth_period_for_wide_well():
    model = make_model(8)
    grid = make_grid(model, 4096)
    report = detect_cusps(sample_density(psi_eighth(model), grid, EIGHTH))
    assert report.density_cusps == ()
    np.testing.assert_allclose(report.psi_kinks, [1.0, 3.0, 5.0, 7.0],
                               atol=2.0 * report.uncertainty)


def test_cusp_detection_needs_uniform_grid(model_3_2):
    grid = grid_from_points(model_3_2, [0.1, 0.2, 0.5, 0.6])
    profile = sample_density(initial_wavefunction(model_3_2), grid, RationalTime(0, 1))
    with pytest.raises(GridError):
        detect_cusps(profile)


def test_no_plateau_at_quarter_period_below_two():
    model = make_model(1.8)
    grid = make_grid(model, 4096)
    profile = series_density(build_spectral_set(model, 1e-6), grid, QUARTER)
    assert detect_plateaux(profile).plateaux == ()


def test_plateaux_need_resolution(model_3_2):
    grid = make_grid(model_3_2, 64)
    profile = sample_density(psi_eighth(model_3_2), grid, EIGHTH)
    with pytest.raises(UnderResolvedGridError):
        detect_plateaux(profile)


def test_compare_rejects_different_grids(model_3_2):
    closed = sample_density(initial_wavefunction(model_3_2), make_grid(model_3_2, 128),
                            RationalTime(0, 1))
    other = sample_density(initial_wavefunction(model_3_2), make_grid(model_3_2, 256),
                           RationalTime(0, 1))
    with pytest.raises(GridMismatchError):
        compare(closed, other)


def test_compare_with_explicit_bound(model_3_2):
    grid = make_grid(model_3_2, 256)
    closed = sample_density(psi_eighth(model_3_2), grid, EIGHTH)
    report = compare(closed, closed, bound=0.0)
    assert report.passed
    assert report.as_dict()["sup_norm"] == 0.0


def test_two_fragments_at_quarter_period():
    model = make_model(5.5)
    grid = make_grid(model, 4096)
    profile = series_density(build_spectral_set(model, 1e-6), grid, QUARTER)
    report = detect_fragments(profile)
    assert report.count == 2
    assert report.peak_count == 2
    for fragment in report.fragments:
        assert fragment.mass == pytest.approx(0.5, abs=1e-5)
        assert fragment.shape_distance <= 1e-5
    assert report.total_mass == pytest.approx(1.0, abs=1e-5)
    assert report.complete()


def test_four_fragments_at_eighth_period():
    model = make_model(8)
    grid = make_grid(model, 4096)
    profile = series_density(build_spectral_set(model, 1e-5), grid, EIGHTH)
    report = detect_fragments(profile)
    assert report.count == 4
    np.testing.assert_allclose([f.centroid for f in report.fragments], [0.5, 3.5, 4.5, 7.5],
                               atol=1e-3)
    assert report.complete()


def test_fragments_of_closed_form_density():
    model = make_model(8)
    grid = make_grid(model, 4096)
    closed = density_eighth(model).evaluate(grid.points)
    profile = sample_density(psi_eighth(model), grid, EIGHTH)
    np.testing.assert_allclose(profile.values, closed, atol=1e-13)
    report = detect_fragments(profile)
    assert report.weight == 0.25
    assert report.max_shape_distance <= 1e-8


@pytest.mark.slow
def test_sixteen_fragments_above_threshold():
    model = make_model(20)
    grid = make_grid(model, 4096)
    profile = series_density(build_spectral_set(model, 1e-5), grid, RationalTime(1, 32))
    report = detect_fragments(profile)
    assert report.count == 16
    assert report.total_mass == pytest.approx(1.0, abs=1e-4)


def test_count_peaks():
    xs = np.linspace(0.0, 3.0, 601)
    bumps = np.where(xs <= 1.0, np.sin(np.pi * xs) ** 2, 0.0)
    bumps += np.where(xs >= 2.0, np.sin(np.pi * (xs - 2.0)) ** 2, 0.0)
    assert count_peaks(bumps) == 2
    assert count_peaks(np.zeros(10)) == 0


@pytest.mark.parametrize("p,expected", [(1, 6), (2, 3), (3, 2), (4, 3), (5, 6), (6, 1)])
def test_expected_peak_count(p, expected):
    assert expected_peak_count(p, 12) == expected


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5, 6])
def test_conjecture_scan_divisor_twelve(p):
    report = conjecture_scan(make_model(6), 12, p)
    assert report.peak_count == expected_peak_count(p, 12)


def test_half_period_scan_has_single_peak_at_right_edge():
    report = conjecture_scan(make_model(6), 12, 6)
    assert report.count == 1
    assert report.fragments[0].centroid == pytest.approx(5.5, abs=1e-3)


def test_conjecture_scan_rejects_bad_numerator():
    with pytest.raises(ValueError):
        conjecture_scan(make_model(6), 12, 13)


def test_estimate_threshold_quarter_period():
    estimate = estimate_threshold([5.5, 1.5, 3.0, 2.5], 4, grid_points=1024)
    assert estimate.threshold == 2.5
    assert [lam for lam, _ in estimate.entries] == [1.5, 2.5, 3.0, 5.5]
    assert not estimate.entries[0][1].complete()


@pytest.mark.parametrize("p", [1, 2])
def test_conjecture_scan_odd_divisor(p):
    report = conjecture_scan(make_model(10), 5, p)
    assert report.peak_count == expected_peak_count(p, 5) == 5
    assert report.complete()


def test_threshold_from_existing_reports():
    entries = [(lam, conjecture_scan(make_model(lam), 4, 1, grid_points=1024))
               for lam in (5.5, 1.5)]
    estimate = threshold_from_reports(entries, 4)
    assert estimate.threshold == 5.5
    assert [lam for lam, _ in estimate.entries] == [1.5, 5.5]
