"""
Тесты численного ядра: точные поля отведений, строки S·H⁻¹, данные Грама, решение для α.
"""
import numpy as np
import pytest

from exceptions import ConfigurationError, NumericalError
from models.basis import GramData
from models.conductivity import ConductivityPoint, MultiplierSpec
from models.system import ParametrizedSystem
from services.basis_service import BasisService
from services.numerics_service import HeadFactorization, NumericsService


def _mirrored_system():
    """S = I и D̄/λ повторяют H̄/γ, поэтому L(σ) = I"""
    rng = np.random.default_rng(7)
    components = []
    for k in range(2):
        b = rng.standard_normal((6, 6))
        components.append((b @ b.T + 6 * np.eye(6), MultiplierSpec.sigma(k)))
    return ParametrizedSystem(components, components, np.eye(6), 2)


def _materialized_k(system, basis):
    """Явная матрица K: столбцы vec(R_i H̄_j) в порядке i·N_H + j"""
    columns = []
    for rows in basis.reduced:
        for component in system.h_stack:
            columns.append((rows.matrix @ component).ravel())
    return np.stack(columns, axis=1)


@pytest.fixture(scope="module")
def bem_basis(bem_like_system):
    grid = bem_like_system.default_grid()
    basis = BasisService.empty_basis(bem_like_system, grid)
    for index in (0, 12, 24):
        basis = BasisService.add_support(basis, bem_like_system, grid[index])
    return basis


@pytest.fixture(scope="module")
def head_corner_basis(head_system):
    grid = head_system.default_grid()
    basis = BasisService.empty_basis(head_system, grid)
    for index in grid.corner_indices():
        basis = BasisService.add_support(basis, head_system, grid[index])
    return basis


def test_exact_leadfield_of_mirrored_system_is_identity():
    system = _mirrored_system()
    leadfield = NumericsService.exact_leadfield(system, ConductivityPoint([0.7, 1.9]))
    np.testing.assert_allclose(leadfield, np.eye(6), atol=1e-12)
    assert NumericsService.bound_constant(system, ConductivityPoint([0.7, 1.9])) == pytest.approx(1.0)


def test_exact_leadfield_scales_inversely_in_homogeneous_system(homogeneous_system):
    sigma = ConductivityPoint([0.8])
    single = NumericsService.exact_leadfield(homogeneous_system, sigma)
    double = NumericsService.exact_leadfield(homogeneous_system, ConductivityPoint([1.6]))
    np.testing.assert_allclose(double, single / 2, rtol=1e-10)


def test_exact_leadfield_matches_dense_inverse(head_system):
    grid = head_system.default_grid()
    for sigma in (grid[0], grid[7], grid[len(grid) - 1]):
        oracle = head_system.selection @ np.linalg.inv(head_system.assemble_h(sigma)) @ head_system.assemble_d(sigma)
        leadfield = NumericsService.exact_leadfield(head_system, sigma)
        assert np.linalg.norm(leadfield - oracle) <= 1e-8 * np.linalg.norm(oracle)


def test_singular_head_matrix_raises_numerical_error():
    laplacian = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    with pytest.raises(NumericalError) as error:
        HeadFactorization(laplacian, ConductivityPoint([1.0]))
    assert error.value.sigma == (1.0,)


def test_reduced_rows_reproduce_leadfield(head_system):
    sigma = head_system.default_grid()[6]
    rows = NumericsService.reduced_rows(head_system, sigma)
    assert rows.matrix.shape == (head_system.n_electrodes, head_system.n_unknowns)
    assert rows.residual <= 1e-9
    leadfield = NumericsService.exact_leadfield(head_system, sigma)
    combined = rows.matrix @ head_system.assemble_d(sigma)
    assert np.linalg.norm(combined - leadfield) <= 1e-9 * np.linalg.norm(leadfield)


def test_reduced_rows_with_identity_selection_are_inverse():
    system = _mirrored_system()
    sigma = ConductivityPoint([1.0, 2.0])
    rows = NumericsService.reduced_rows(system, sigma)
    np.testing.assert_allclose(rows.matrix @ system.assemble_h(sigma), np.eye(6), atol=1e-12)


def test_first_support_gives_square_gram(head_system):
    grid = head_system.default_grid()
    basis = BasisService.add_support(BasisService.empty_basis(head_system, grid), head_system, grid[0])
    assert basis.gram.gram.shape == (head_system.n_h, head_system.n_h)
    assert basis.gram.rhs.shape == (head_system.n_h,)


def test_extend_gram_keeps_existing_entries(bem_like_system, bem_basis):
    smaller = bem_basis.truncated(2)
    extended = NumericsService.extend_gram(
        smaller.gram, bem_like_system, bem_basis.reduced[2], smaller.reduced
    )
    size = smaller.gram.rhs.size
    assert np.array_equal(extended.gram[:size, :size], smaller.gram.gram)
    assert np.array_equal(extended.rhs[:size], smaller.gram.rhs)


def test_gram_matches_materialized_oracle(bem_like_system, bem_basis):
    k = _materialized_k(bem_like_system, bem_basis)
    oracle = k.T @ k
    gram = bem_basis.gram.gram
    assert np.linalg.norm(gram - oracle) <= 1e-10 * np.linalg.norm(oracle)
    rhs_oracle = k.T @ bem_like_system.selection.ravel()
    assert np.linalg.norm(bem_basis.gram.rhs - rhs_oracle) <= 1e-10 * np.linalg.norm(rhs_oracle)
    assert np.allclose(gram, gram.T)


def test_rhs_for_selection_sums_selected_entries(bem_like_system, bem_basis):
    rows = bem_basis.reduced[1]
    block = rows.matrix @ bem_like_system.h_stack[2]
    mask = bem_like_system.selection == 1.0
    column = GramData.column(1, 2, bem_like_system.n_h)
    assert bem_basis.gram.rhs[column] == pytest.approx(block[mask].sum(), rel=1e-10)


def test_extend_gram_rejects_duplicate_support(bem_like_system, bem_basis):
    rows = NumericsService.reduced_rows(bem_like_system, bem_basis.supports[0])
    with pytest.raises(ConfigurationError):
        NumericsService.extend_gram(bem_basis.gram, bem_like_system, rows, bem_basis.reduced)


def test_alpha_matches_least_squares_oracle(bem_like_system):
    grid = bem_like_system.default_grid()
    basis = BasisService.empty_basis(bem_like_system, grid)
    for index in (0, 24):
        basis = BasisService.add_support(basis, bem_like_system, grid[index])
    sigma = ConductivityPoint([1.1, 0.7])
    gamma = bem_like_system.gamma(sigma)
    k_gamma = _materialized_k(bem_like_system, basis) @ np.kron(np.eye(basis.n_supports), gamma[:, None])
    target = bem_like_system.selection.ravel()
    oracle, *_ = np.linalg.lstsq(k_gamma, target, rcond=None)
    s_norm = np.linalg.norm(target)

    solution = NumericsService.solve_alpha(basis.gram, bem_like_system, sigma)
    direct = np.linalg.norm(target - k_gamma @ solution.alpha)
    best = np.linalg.norm(target - k_gamma @ oracle)
    assert not solution.regularized
    assert abs(direct - best) <= 1e-10 * s_norm
    assert abs(solution.upper_bound - best) <= 1e-10 * s_norm
    assert np.linalg.norm(k_gamma @ (solution.alpha - oracle)) <= 1e-10 * s_norm
    tolerance = 1e-10 * np.linalg.cond(k_gamma) * np.linalg.norm(oracle)
    assert np.linalg.norm(solution.alpha - oracle) <= tolerance


def test_residual_is_orthogonal_to_reduced_columns(bem_like_system, bem_basis):
    target = bem_like_system.selection.ravel()
    s_norm = np.linalg.norm(target)
    k = _materialized_k(bem_like_system, bem_basis)
    for sigma in bem_like_system.default_grid().samples[::4]:
        k_gamma = k @ np.kron(np.eye(bem_basis.n_supports), bem_like_system.gamma(sigma)[:, None])
        alpha = NumericsService.solve_alpha(bem_basis.gram, bem_like_system, sigma).alpha
        residual = target - k_gamma @ alpha
        for column in k_gamma.T:
            assert abs(residual @ column) <= 1e-8 * s_norm * np.linalg.norm(column)


def test_factor_reproduces_materialized_columns(bem_like_system, bem_basis):
    factor = bem_basis.gram.factor
    k = _materialized_k(bem_like_system, bem_basis)
    target = bem_like_system.selection.ravel()
    np.testing.assert_allclose(factor.vectors @ factor.vectors.T, np.eye(factor.rank), atol=1e-12)
    assert np.linalg.norm(factor.vectors.T @ factor.r_factor - k) <= 1e-12 * np.linalg.norm(k)
    assert factor.residual ** 2 + factor.projection @ factor.projection == pytest.approx(target @ target, rel=1e-12)
    assert factor.ranks == sorted(factor.ranks) and len(factor.ranks) == bem_basis.n_supports


def test_truncated_factor_solves_like_rebuilt_basis(bem_like_system, bem_basis):
    grid = bem_like_system.default_grid()
    rebuilt = BasisService.empty_basis(bem_like_system, grid)
    for index in (0, 12):
        rebuilt = BasisService.add_support(rebuilt, bem_like_system, grid[index])
    truncated = bem_basis.truncated(2)
    sigma = ConductivityPoint([0.9, 1.3])
    expected = NumericsService.solve_alpha(rebuilt.gram, bem_like_system, sigma)
    solution = NumericsService.solve_alpha(truncated.gram, bem_like_system, sigma)
    np.testing.assert_allclose(solution.alpha, expected.alpha, rtol=1e-12)
    assert solution.upper_bound == pytest.approx(expected.upper_bound, rel=1e-12)


def test_extension_after_truncation_rebuilds_factor(bem_like_system, bem_basis):
    smaller = bem_basis.truncated(2)
    assert not smaller.gram.factor.extendable
    extended = NumericsService.extend_gram(smaller.gram, bem_like_system, bem_basis.reduced[2], smaller.reduced)
    assert extended.factor.extendable
    expected = bem_basis.gram.factor.r_factor
    np.testing.assert_allclose(extended.factor.r_factor, expected, rtol=0, atol=1e-12 * np.abs(expected).max())
    assert extended.factor.ranks == bem_basis.gram.factor.ranks


def test_upper_bound_vanishes_at_supports(head_system, head_corner_basis):
    s_norm = np.linalg.norm(head_system.selection)
    for support in head_corner_basis.supports:
        solution = NumericsService.solve_alpha(head_corner_basis.gram, head_system, support)
        assert solution.relative_upper_bound <= 1e-9
        direct = NumericsService.upper_bound_direct(head_system, head_corner_basis.reduced, solution.alpha, support)
        assert direct <= 1e-9 * s_norm


def test_alpha_in_homogeneous_system(homogeneous_system):
    support = ConductivityPoint([1.5])
    basis = BasisService.add_support(BasisService.empty_basis(homogeneous_system), homogeneous_system, support)
    for value in (0.5, 1.0, 2.0):
        solution = NumericsService.solve_alpha(basis.gram, homogeneous_system, ConductivityPoint([value]))
        assert solution.alpha[0] == pytest.approx(1.5 / value, rel=1e-10)
        assert solution.relative_upper_bound <= 1e-9
        assert not solution.regularized


def test_rank_deficient_gram_is_regularized(homogeneous_system):
    gram = GramData(np.ones((2, 2)), np.ones(2), 1.0, 1)
    sigma = ConductivityPoint([2.0])
    solution = NumericsService.solve_alpha(gram, homogeneous_system, sigma)
    assert solution.regularized
    np.testing.assert_allclose(solution.alpha, [0.25, 0.25], rtol=1e-12)
    assert solution.upper_bound == pytest.approx(0.0, abs=1e-7)


def test_upper_bound_decreases_with_more_supports(bem_like_system, bem_basis):
    grid = bem_like_system.default_grid()
    for sigma in grid.samples[::3]:
        bounds = [
            NumericsService.solve_alpha(bem_basis.truncated(n).gram, bem_like_system, sigma).relative_upper_bound
            for n in range(1, bem_basis.n_supports + 1)
        ]
        assert all(later <= earlier + 1e-12 for earlier, later in zip(bounds, bounds[1:]))


def test_upper_bound_direct_special_cases(head_system, head_corner_basis):
    s_norm = np.linalg.norm(head_system.selection)
    n = head_corner_basis.n_supports
    sigma = head_corner_basis.supports[1]
    assert NumericsService.upper_bound_direct(head_system, head_corner_basis.reduced, np.zeros(n), sigma) == \
        pytest.approx(s_norm)
    unit = np.eye(n)[1]
    assert NumericsService.upper_bound_direct(head_system, head_corner_basis.reduced, unit, sigma) <= 1e-8 * s_norm


def test_upper_bound_direct_matches_gram_form(head_system, head_corner_basis):
    rng = np.random.default_rng(2)
    sigma = head_system.default_grid()[12]
    g_sigma, b_sigma = NumericsService.reduce_gram(head_corner_basis.gram, head_system, sigma)
    for _ in range(5):
        alpha = rng.normal(size=head_corner_basis.n_supports)
        closed = np.sqrt(max(head_corner_basis.gram.s_norm_sq - 2 * alpha @ b_sigma + alpha @ g_sigma @ alpha, 0.0))
        direct = NumericsService.upper_bound_direct(head_system, head_corner_basis.reduced, alpha, sigma)
        assert closed == pytest.approx(direct, rel=1e-8)


def test_true_error_is_bounded_by_constant_times_upper_bound(head_system, head_corner_basis):
    rng = np.random.default_rng(3)
    grid = head_system.default_grid()
    for _ in range(20):
        sigma = grid[int(rng.integers(len(grid)))]
        leadfield, solution = NumericsService.solve_leadfield(head_system, sigma)
        constant = NumericsService.constant_from(leadfield, solution, sigma)
        assert np.isfinite(constant) and constant > 0

        optimal = NumericsService.solve_alpha(head_corner_basis.gram, head_system, sigma).alpha
        alpha = optimal + rng.normal(scale=0.1, size=optimal.size)
        d_sigma = head_system.assemble_d(sigma)
        approx = sum(a * rows.matrix @ d_sigma for a, rows in zip(alpha, head_corner_basis.reduced))
        bound = NumericsService.upper_bound_direct(head_system, head_corner_basis.reduced, alpha, sigma)
        assert NumericsService.relative_error(leadfield, approx) <= constant * bound + 1e-9
