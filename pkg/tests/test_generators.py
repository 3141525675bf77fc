"""
Тесты генераторов моделей и моделирования измерений.
"""
import numpy as np
import pytest

from exceptions import ConfigurationError, GenerationError
from models.conductivity import ConductivityPoint
from models.specs import MiniHeadSpec, SynthSpec
from services.generator_service import GeneratorService
from services.numerics_service import NumericsService
from tests.conftest import small_head_spec


def test_region_laplacians_have_zero_row_sums():
    laplacians = GeneratorService.region_laplacians(small_head_spec())
    assert laplacians.shape == (3, 216, 216)
    for component in laplacians:
        np.testing.assert_array_equal(component.sum(axis=1), 0.0)
        np.testing.assert_array_equal(component, component.T)


def test_region_laplacians_partition_single_region_laplacian():
    nested = GeneratorService.region_laplacians(small_head_spec())
    single = GeneratorService.region_laplacians(small_head_spec(n_regions=1))
    np.testing.assert_array_equal(nested.sum(axis=0), single[0])


def test_nested_boxes_layout():
    spec = small_head_spec()
    labels = spec.compartment_map
    assert labels[0, 0, 0] == 3
    assert labels[1, 1, 1] == 2
    assert labels[2, 2, 2] == 1
    assert (labels == 1).sum() == 8
    assert len(spec.electrode_cells) == 8
    assert len(spec.source_pairs) == 6
    spec.validate()


def test_head_system_structure(head_system):
    assert head_system.n_h == 4
    assert head_system.n_d == 1
    assert head_system.n_unknowns == 216
    assert head_system.deflation is not None
    np.testing.assert_array_equal(head_system.selection.sum(axis=1), 1.0)

    sources = head_system.d_stack[0]
    h = small_head_spec().spacing
    np.testing.assert_allclose(sources.sum(axis=0), 0.0, atol=1e-12)
    assert np.all(np.count_nonzero(sources, axis=0) == 2)
    assert np.abs(sources).max() == pytest.approx(1.0 / h)


def test_head_matrix_is_positive_definite_over_domain(head_system):
    grid = head_system.default_grid()
    for index in grid.corner_indices() + [grid.center_index()]:
        eigenvalues = np.linalg.eigvalsh(head_system.assemble_h(grid[index]))
        assert eigenvalues[0] > 0


def test_undeflated_head_matrix_has_constant_null_space(head_system):
    sigma = head_system.default_grid().center()
    gamma = head_system.gamma(sigma)
    undeflated = sum(gamma[r] * head_system.h_stack[r] for r in range(head_system.n_compartments))
    eigenvalues = np.linalg.eigvalsh(undeflated)
    assert abs(eigenvalues[0]) <= 1e-10 * eigenvalues[-1]
    assert eigenvalues[1] > 1e-6 * eigenvalues[-1]
    np.testing.assert_allclose(undeflated @ np.ones(head_system.n_unknowns), 0.0, atol=1e-10 * eigenvalues[-1])
    assert np.linalg.eigvalsh(head_system.assemble_h(sigma))[0] > 0


def test_superficial_source_has_stronger_leadfield_than_deep_source():
    spec = small_head_spec(shape=(10, 10, 10))
    pairs = [((4, 4, 6), (4, 4, 7)), ((4, 4, 4), (4, 4, 5))]
    spec.source_pairs = [tuple(int(np.ravel_multi_index(c, spec.grid_shape)) for c in pair) for pair in pairs]
    system = GeneratorService.build_mini_head(spec)
    leadfield = NumericsService.exact_leadfield(system, system.default_grid().center())
    superficial, deep = np.linalg.norm(leadfield, axis=0)
    assert superficial > deep > 0


def test_head_leadfield_scales_inversely_with_uniform_conductivity(head_system):
    sigma = ConductivityPoint([1.0, 0.01, 1.0])
    doubled = ConductivityPoint([2.0, 0.02, 2.0])
    single = NumericsService.exact_leadfield(head_system, sigma)
    double = NumericsService.exact_leadfield(head_system, doubled)
    np.testing.assert_allclose(double, single / 2, rtol=1e-8, atol=1e-12 * np.abs(single).max())


def test_head_metadata_describes_sources(head_system):
    metadata = head_system.metadata
    assert metadata["generator"] == "mini_head"
    assert len(metadata["sources"]) == head_system.n_sources
    assert all(source["depth"] >= 2 for source in metadata["sources"])
    assert metadata["sigma_ref"][2] == 1.0


def test_missing_compartment_map_is_reported():
    with pytest.raises(ConfigurationError) as error:
        MiniHeadSpec.from_dict({"grid_shape": [4, 4, 4], "electrode_cells": [0], "source_pairs": [[21, 22]]})
    assert error.value.field == "mini_head.compartment_map"


def test_empty_region_is_rejected():
    labels = np.full((4, 4, 4), 3)
    labels[1:3, 1:3, 1:3] = 1
    spec = MiniHeadSpec((4, 4, 4), labels, [0], [(21, 22)])
    with pytest.raises(GenerationError) as error:
        spec.validate()
    assert "compartment_map" in error.value.field


def test_electrode_must_lie_on_outer_surface():
    spec = small_head_spec()
    inner = int(np.ravel_multi_index((2, 2, 2), spec.grid_shape))
    spec.electrode_cells = [inner]
    with pytest.raises(GenerationError):
        spec.validate()


def test_source_pair_must_be_adjacent_brain_cells():
    spec = small_head_spec()
    a = int(np.ravel_multi_index((2, 2, 2), spec.grid_shape))
    b = int(np.ravel_multi_index((3, 3, 2), spec.grid_shape))
    spec.source_pairs = [(a, b)]
    with pytest.raises(GenerationError):
        spec.validate()


def test_mini_head_spec_dict_form_rebuilds_same_layout():
    spec = small_head_spec()
    rebuilt = MiniHeadSpec.from_dict(spec.to_dict())
    np.testing.assert_array_equal(rebuilt.compartment_map, spec.compartment_map)
    assert rebuilt.electrode_cells == spec.electrode_cells
    assert rebuilt.source_pairs == spec.source_pairs


def test_synthetic_system_is_deterministic():
    spec = SynthSpec(n_unknowns=20, n_compartments=2, seed=4)
    first = GeneratorService.build_synthetic(spec)
    second = GeneratorService.build_synthetic(spec)
    np.testing.assert_array_equal(first.h_stack, second.h_stack)
    np.testing.assert_array_equal(first.d_stack, second.d_stack)
    np.testing.assert_array_equal(first.selection, second.selection)

    other = GeneratorService.build_synthetic(SynthSpec(n_unknowns=20, n_compartments=2, seed=5))
    assert not np.array_equal(first.h_stack, other.h_stack)


def test_synthetic_components_respect_conditioning_floor(synthetic_system):
    floor = 1.0 / synthetic_system.n_h
    for component in synthetic_system.h_stack:
        assert np.linalg.eigvalsh(component)[0] >= floor - 1e-10


def test_synthetic_full_multiplier_family():
    spec = SynthSpec(n_unknowns=16, n_compartments=3, n_electrodes=4, n_sources=3,
                     gamma_family=["sigma", "inverse", "pair_sum", "constant"], lambda_family=["one", "sigma"])
    system = GeneratorService.build_synthetic(spec)
    assert system.n_h == 10
    assert system.n_d == 4
    gamma = system.gamma(ConductivityPoint([1.0, 2.0, 4.0]))
    np.testing.assert_allclose(gamma, [1, 2, 4, 1, 0.5, 0.25, 3, 5, 6, 1])


@pytest.mark.parametrize("overrides", [
    {"gamma_family": ["bogus"]},
    {"lambda_family": []},
    {"n_electrodes": 100},
    {"n_compartments": 1, "gamma_family": ["pair_sum"]},
    {"conditioning_floor": 0.0},
])
def test_synthetic_spec_validation(overrides):
    spec = SynthSpec(**overrides)
    with pytest.raises(GenerationError):
        spec.validate()


def test_simulated_measurement_without_noise_is_leadfield_column(head_system):
    sigma = ConductivityPoint([1.2, 0.005, 1.0])
    column = NumericsService.exact_leadfield(head_system, sigma)[:, 3]
    measurement = GeneratorService.simulate_measurement(head_system, sigma, 3, amplitude=2.5)
    np.testing.assert_allclose(measurement, 2.5 * column, rtol=1e-12)


def test_simulated_noise_depends_on_seed(head_system):
    sigma = ConductivityPoint([1.2, 0.005, 1.0])
    first = GeneratorService.simulate_measurement(head_system, sigma, 0, noise_std=0.1, seed=1)
    again = GeneratorService.simulate_measurement(head_system, sigma, 0, noise_std=0.1, seed=1)
    other = GeneratorService.simulate_measurement(head_system, sigma, 0, noise_std=0.1, seed=2)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)


def test_simulated_series_scales_with_amplitudes(head_system):
    sigma = ConductivityPoint([1.2, 0.005, 1.0])
    series = GeneratorService.simulate_series(head_system, sigma, 1, [1.0, -2.0, 0.5])
    assert series.shape == (head_system.n_electrodes, 3)
    np.testing.assert_allclose(series[:, 1], -2.0 * series[:, 0], rtol=1e-12)


def test_simulation_rejects_unknown_source(head_system):
    with pytest.raises(ConfigurationError):
        GeneratorService.simulate_measurement(head_system, ConductivityPoint([1.0, 0.01, 1.0]), 99)
    with pytest.raises(ConfigurationError):
        GeneratorService.simulate_series(head_system, ConductivityPoint([1.0, 0.01, 1.0]), 0, [])
