"""
Тесты подгонки диполя и оценки проводимостей по карте невязок.
"""
import numpy as np
import pytest

from exceptions import ConfigurationError, EstimationError
from models.basis import GreedyConfig
from models.grid import ConductivityGrid, GridAxis
from models.results import ErrorMap
from services.basis_service import BasisService
from services.estimation_service import EstimationService
from services.generator_service import GeneratorService


@pytest.fixture
def random_leadfield():
    return np.random.default_rng(21).standard_normal((7, 5))


def test_fit_single_recovers_exact_column(random_leadfield):
    fit = EstimationService.fit_single(3.0 * random_leadfield[:, 2], random_leadfield)
    assert fit.best_source == 2
    assert fit.r_value == pytest.approx(0.0, abs=1e-12)
    assert fit.best_amplitudes[0] == pytest.approx(3.0)


def test_fit_single_handles_sign_flip(random_leadfield):
    fit = EstimationService.fit_single(-2.0 * random_leadfield[:, 4], random_leadfield)
    assert fit.best_source == 4
    assert fit.best_amplitudes[0] == pytest.approx(-2.0)
    assert fit.r_value == pytest.approx(0.0, abs=1e-12)


def test_fit_single_orthogonal_topography():
    leadfield = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    fit = EstimationService.fit_single(np.array([0.0, 0.0, 2.0]), leadfield)
    assert fit.r_value == pytest.approx(2.0)
    assert fit.best_source == 0
    assert fit.best_amplitudes[0] == 0.0


def test_fit_single_matches_brute_force(random_leadfield):
    rng = np.random.default_rng(8)
    for _ in range(5):
        y = rng.standard_normal(7)
        brute = []
        for column in random_leadfield.T:
            a = column @ y / (column @ column)
            brute.append(np.linalg.norm(y - a * column))
        fit = EstimationService.fit_single(y, random_leadfield)
        assert fit.r_value == pytest.approx(min(brute), rel=1e-12)
        assert fit.best_source == int(np.argmin(brute))


def test_fit_ignores_zero_columns():
    leadfield = np.array([[0.0, 1.0], [0.0, 1.0]])
    fit = EstimationService.fit_single(np.array([1.0, -1.0]), leadfield)
    assert np.isfinite(fit.r_value)
    assert fit.r_value == pytest.approx(np.sqrt(2.0))


def test_fit_multi_with_single_sample_equals_fit_single(random_leadfield):
    y = np.random.default_rng(9).standard_normal(7)
    single = EstimationService.fit_single(y, random_leadfield)
    multi = EstimationService.fit_multi(y[:, None], random_leadfield)
    assert multi.r_value == pytest.approx(single.r_value, rel=1e-14)
    assert multi.best_source == single.best_source


def test_fit_multi_shares_source_across_time(random_leadfield):
    amplitudes = np.array([1.0, -0.5, 2.0, 0.0])
    data = np.outer(random_leadfield[:, 1], amplitudes)
    fit = EstimationService.fit_multi(data, random_leadfield)
    assert fit.best_source == 1
    np.testing.assert_allclose(fit.best_amplitudes, amplitudes, atol=1e-12)
    assert fit.r_value == pytest.approx(0.0, abs=1e-12)


def test_fit_rejects_wrong_topography_length(random_leadfield):
    with pytest.raises(ConfigurationError):
        EstimationService.fit_single(np.ones(3), random_leadfield)
    with pytest.raises(ConfigurationError):
        EstimationService.fit_single(np.ones((7, 2)), random_leadfield)


def test_noiseless_map_is_minimal_at_true_conductivity(head_system):
    grid = head_system.default_grid()
    truth = 13
    data = GeneratorService.simulate_measurement(head_system, grid[truth], 2)
    error_map = EstimationService.error_map(head_system, grid, data)
    assert error_map.n_valid == len(grid)
    assert error_map.argmin() == truth
    assert error_map.extras["best_source"][truth] == 2

    estimate = EstimationService.estimate_conductivity(error_map)
    assert estimate.sigma_hat == grid[truth]
    assert estimate.index == truth
    assert not estimate.flat
    assert estimate.spread is None


def test_min_normalized_map_has_unit_minimum(head_system):
    grid = head_system.default_grid()
    data = GeneratorService.simulate_series(head_system, grid[6], 0, [1.0, 0.5], noise_std=1e-3, seed=4)
    error_map = EstimationService.error_map(head_system, grid, data, normalize=True)
    assert error_map.normalization == "min-normalized"
    assert error_map.min_value() == 1.0
    assert np.all(error_map.values >= 1.0)
    estimate = EstimationService.estimate_conductivity(error_map)
    assert estimate.value == 1.0
    assert estimate.spread >= 0.0


def test_profile_follows_first_varying_axis(head_system):
    grid = head_system.default_grid()
    data = GeneratorService.simulate_measurement(head_system, grid[17], 1, noise_std=1e-4, seed=2)
    estimate = EstimationService.estimate_conductivity(EstimationService.error_map(head_system, grid, data))
    assert len(estimate.profile) == grid.shape[0]
    assert all(entry["r"] >= estimate.value for entry in estimate.profile)
    assert min(entry["r"] for entry in estimate.profile) == estimate.value


def test_approximate_map_is_computed_with_basis(head_system):
    grid = head_system.default_grid()
    basis = BasisService.greedy_select(head_system, grid, GreedyConfig(eps_abs=0.0, max_supports=6))
    data = GeneratorService.simulate_measurement(head_system, grid[12], 3)
    error_map = EstimationService.error_map(head_system, grid, data, mode="approx", basis=basis)
    assert error_map.n_valid == len(grid)
    assert np.all(np.isfinite(error_map.values))


def test_map_mode_validation(head_system):
    grid = head_system.default_grid()
    data = np.zeros(head_system.n_electrodes)
    with pytest.raises(ConfigurationError):
        EstimationService.error_map(head_system, grid, data, mode="approx")
    with pytest.raises(ConfigurationError):
        EstimationService.error_map(head_system, grid, data, mode="fast")


def _line_grid(count):
    return ConductivityGrid([GridAxis(0, 0.5, 2.0, count)])


def test_flat_map_picks_lowest_index():
    estimate = EstimationService.estimate_conductivity(ErrorMap(_line_grid(4), [2.0, 2.0, 2.0, 2.0]))
    assert estimate.flat
    assert estimate.index == 0


def test_map_without_valid_samples_raises():
    error_map = ErrorMap(_line_grid(3), [np.nan, np.nan, np.nan])
    with pytest.raises(EstimationError):
        EstimationService.estimate_conductivity(error_map)


def test_invalid_samples_are_skipped():
    error_map = ErrorMap(_line_grid(3), [0.1, 5.0, 0.2], valid=[False, True, True])
    estimate = EstimationService.estimate_conductivity(error_map)
    assert estimate.index == 2
    assert estimate.profile[0]["index"] is None


def test_error_map_rejects_malformed_columns():
    with pytest.raises(ConfigurationError) as error:
        ErrorMap(_line_grid(3), [0.1, 0.2])
    assert error.value.field == "error_map.values"
    with pytest.raises(ConfigurationError) as error:
        ErrorMap(_line_grid(3), [0.1, 0.2, 0.3], normalization="log")
    assert error.value.field == "error_map.normalization"
    with pytest.raises(ConfigurationError) as error:
        ErrorMap(_line_grid(3), [0.1, 0.2, 0.3], extras={"upper_bound": [1.0]})
    assert error.value.field == "error_map.extras.upper_bound"


def test_min_normalization_keeps_map_with_zero_minimum():
    error_map = ErrorMap(_line_grid(3), [0.0, 1.0, 2.0])
    normalized = error_map.min_normalized()
    assert normalized.normalization == "raw"
    np.testing.assert_array_equal(normalized.values, error_map.values)
