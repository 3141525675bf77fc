"""
Тесты полиномиальной интерполяции и сравнения с методом опорных точек.
"""
import numpy as np
import pytest

from exceptions import ConfigurationError
from models.conductivity import ConductivityPoint
from models.results import COMPARISON_HEADER
from services.numerics_service import NumericsService
from services.poly_service import PolyService


def _line(values, base=(1.0, 0.01, 1.0), compartment=1):
    return [ConductivityPoint(base).with_value(compartment, v) for v in values]


def test_single_node_gives_constant_model(head_system):
    model = PolyService.poly_fit(head_system, _line([0.01]), 1)
    assert model.degree == 0
    expected = NumericsService.exact_leadfield(head_system, _line([0.01])[0])
    for sigma in _line([0.002, 0.05]):
        np.testing.assert_array_equal(PolyService.poly_eval(model, sigma).leadfield, expected)


def test_polynomial_reproduces_nodes(head_system):
    nodes = _line([0.002, 0.01, 0.05])
    model = PolyService.poly_fit(head_system, nodes, 1)
    assert model.degree == 2
    for sigma in nodes:
        exact = NumericsService.exact_leadfield(head_system, sigma)
        evaluation = PolyService.poly_eval(model, sigma)
        assert not evaluation.extrapolated
        np.testing.assert_allclose(evaluation.leadfield, exact, rtol=1e-10, atol=1e-12 * np.abs(exact).max())


def test_linear_data_is_reproduced_exactly():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 3, 4))
    nodes = np.array([0.5, 1.0, 2.0])
    model = PolyService.build_model(0, ConductivityPoint([1.0, 1.0]), nodes, [a + v * b for v in nodes])
    result = PolyService.poly_eval(model, ConductivityPoint([1.7, 1.0]))
    np.testing.assert_allclose(result.leadfield, a + 1.7 * b, rtol=1e-12, atol=1e-12)


def test_log_transform_reproduces_logarithmic_data():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal((2, 2, 2))
    nodes = np.array([1e-3, 1e-2, 1e-1])
    model = PolyService.build_model(1, ConductivityPoint([1.0, 1e-2]), nodes,
                                    [a + np.log(v) * b for v in nodes], transform="log")
    result = PolyService.poly_eval(model, ConductivityPoint([1.0, 3e-2]))
    np.testing.assert_allclose(result.leadfield, a + np.log(3e-2) * b, rtol=1e-10, atol=1e-12)


def test_extrapolation_is_flagged():
    model = PolyService.build_model(0, ConductivityPoint([1.0]), [1.0, 2.0], np.ones((2, 1, 1)))
    assert PolyService.poly_eval(model, ConductivityPoint([3.0])).extrapolated
    assert not PolyService.poly_eval(model, ConductivityPoint([1.5])).extrapolated


def test_coincident_nodes_are_rejected():
    with pytest.raises(ConfigurationError):
        PolyService.build_model(0, ConductivityPoint([1.0]), [1.0, 1.0], np.ones((2, 1, 1)))
    with pytest.raises(ConfigurationError):
        PolyService.build_model(0, ConductivityPoint([1.0]), [1.0], np.ones((1, 1, 1)), transform="cubic")


def test_nodes_must_share_fixed_compartments(head_system):
    nodes = [ConductivityPoint([1.0, 0.01, 1.0]), ConductivityPoint([1.5, 0.02, 1.0])]
    with pytest.raises(ConfigurationError):
        PolyService.poly_fit(head_system, nodes, 1)
    model = PolyService.poly_fit(head_system, nodes[:1], 1)
    with pytest.raises(ConfigurationError):
        PolyService.poly_eval(model, ConductivityPoint([1.2, 0.01, 1.0]))


def test_comparison_rows_cover_every_method_and_n(head_system):
    rows = PolyService.compare_methods(head_system, 1, 1e-3, 1e-1, [3, 1, 2],
                                       eval_count=6, rb_grid_count=5, sensitivity=True)
    assert [(row.method, row.n) for row in rows] == [
        (method, n) for n in (1, 2, 3) for method in ("rb", "poly", "poly-log")
    ]
    for row in rows:
        assert len(row.as_row()) == len(COMPARISON_HEADER)
        assert 0.0 <= row.mean_rel_error <= row.max_rel_error


def test_comparison_without_sensitivity_has_two_methods(head_system):
    rows = PolyService.compare_methods(head_system, 0, 0.5, 2.0, [2], eval_count=4, rb_grid_count=4)
    assert [row.method for row in rows] == ["rb", "poly"]


def test_comparison_validates_arguments(head_system):
    with pytest.raises(ConfigurationError):
        PolyService.compare_methods(head_system, 1, 1e-3, 1e-1, [10], rb_grid_count=5)
    with pytest.raises(ConfigurationError):
        PolyService.compare_methods(head_system, 5, 1e-3, 1e-1, [2])
    with pytest.raises(ConfigurationError):
        PolyService.compare_methods(head_system, 1, 1e-3, 1e-1, [0])
