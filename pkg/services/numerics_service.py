"""
Сервис численных операций: факторизация матрицы головы, точные поля отведений,
строки S·H⁻¹, данные Грама и решение задачи наименьших квадратов для α.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from exceptions import ConfigurationError, NumericalError
from models.basis import AlphaSolution, GramData, OrthoFactor, ReducedRows
from models.conductivity import ConductivityPoint
from models.system import ParametrizedSystem

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e14
RESIDUAL_TOLERANCE = 1e-9
SPECTRAL_CUTOFF = 1e-12
DEPENDENCE_TOLERANCE = 1e-13


class HeadFactorization:
    """
    Факторизация матрицы головы H_σ: Холецкий, при неудаче LU.

    Атрибуты:
        kind: "cholesky" или "lu"
        condition: Оценка числа обусловленности (1-норма)
    """

    def __init__(self, matrix: np.ndarray, sigma: Optional[ConductivityPoint] = None):
        coords = sigma.as_tuple() if sigma is not None else None
        if not np.all(np.isfinite(matrix)):
            raise NumericalError("матрица головы содержит нечисловые значения", coords)
        anorm = float(np.linalg.norm(matrix, 1))

        try:
            self._factor = linalg.cho_factor(matrix, lower=False, check_finite=False)
            self.kind = "cholesky"
            rcond, info = lapack.dpocon(self._factor[0], anorm, uplo="U")
        except linalg.LinAlgError:
            lu, piv = linalg.lu_factor(matrix, check_finite=False)
            if np.any(np.diag(lu) == 0.0):
                raise NumericalError("матрица головы вырождена", coords)
            self._factor = (lu, piv)
            self.kind = "lu"
            rcond, info = lapack.dgecon(lu, anorm, norm="1")

        if info != 0 or rcond <= 0.0:
            raise NumericalError("не удалось оценить обусловленность матрицы головы", coords)
        self.condition = 1.0 / float(rcond)
        if self.condition > CONDITION_LIMIT:
            raise NumericalError(f"матрица головы плохо обусловлена (cond≈{self.condition:.3g})", coords)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Решает H X = rhs"""
        if self.kind == "cholesky":
            return linalg.cho_solve(self._factor, rhs, check_finite=False)
        return linalg.lu_solve(self._factor, rhs, check_finite=False)


class NumericsService:
    """Сервис численных операций над параметризованной системой"""

    @staticmethod
    def factorize(system: ParametrizedSystem, sigma: ConductivityPoint) -> HeadFactorization:
        """Собирает и факторизует H_σ"""
        return HeadFactorization(system.assemble_h(sigma), sigma)

    @staticmethod
    def solve_leadfield(system: ParametrizedSystem, sigma: ConductivityPoint) -> Tuple[np.ndarray, np.ndarray]:
        """
        Решает H_σ X = D_σ и возвращает (L, X), где L = S X.

        Args:
            system: Параметризованная система
            sigma: Проводимости

        Returns:
            Поле отведений N_E×N_S и решение X (N_V×N_S)
        """
        h = system.assemble_h(sigma)
        d = system.assemble_d(sigma)
        solution = HeadFactorization(h, sigma).solve(d)

        d_norm = np.linalg.norm(d)
        if d_norm > 0:
            residual = np.linalg.norm(h @ solution - d) / d_norm
            if residual > RESIDUAL_TOLERANCE:
                logger.warning(f"Невязка решения {residual:.3g} выше допуска при sigma={list(sigma.as_tuple())}")
        return system.selection @ solution, solution

    @staticmethod
    def exact_leadfield(system: ParametrizedSystem, sigma: ConductivityPoint) -> np.ndarray:
        """
        Точное поле отведений L = S H_σ⁻¹ D_σ (факторизация и решение, без обращения).

        Args:
            system: Параметризованная система
            sigma: Проводимости

        Returns:
            Матрица N_E×N_S
        """
        leadfield, _ = NumericsService.solve_leadfield(system, sigma)
        return leadfield

    @staticmethod
    def reduced_rows(system: ParametrizedSystem, sigma: ConductivityPoint) -> ReducedRows:
        """
        Вычисляет R = S H_σ⁻¹ решением H_σᵀ Y = Sᵀ.

        Args:
            system: Параметризованная система
            sigma: Опорная точка

        Returns:
            Объект ReducedRows с невязкой ‖R H_σ − S‖_F / ‖S‖_F
        """
        h = system.assemble_h(sigma)
        factorization = HeadFactorization(h, sigma)
        rows = factorization.solve(system.selection.T).T

        s_norm = np.linalg.norm(system.selection)
        residual = float(np.linalg.norm(rows @ h - system.selection) / s_norm) if s_norm > 0 else 0.0
        if residual > RESIDUAL_TOLERANCE:
            logger.warning(f"Невязка строк S·H⁻¹ {residual:.3g} выше допуска при sigma={list(sigma.as_tuple())}")
        return ReducedRows(rows, sigma, residual)

    @staticmethod
    def support_blocks(system: ParametrizedSystem, rows: ReducedRows) -> np.ndarray:
        """Блоки A_(i,j) = R_i H̄_j для всех компонент (кэшируются в rows)"""
        if rows.blocks is None:
            blocks = np.matmul(rows.matrix[None, :, :], system.h_stack)
            blocks.setflags(write=False)
            rows.blocks = blocks
        return rows.blocks

    @staticmethod
    def extend_factor(factor: OrthoFactor, new_flat: np.ndarray) -> OrthoFactor:
        """
        Дополняет разложение K = Q·R столбцами новой опорной точки.
        Каждый столбец ортогонализуется дважды (классический Грам-Шмидт);
        столбец, почти лежащий в span(Q), новой строки Q не дает.

        Args:
            factor: Разложение с векторами Q в памяти
            new_flat: Новые столбцы K как строки (N_H×N_E·N_V)

        Returns:
            Новое разложение
        """
        old_rank = factor.rank
        n_new = new_flat.shape[0]
        buffer = np.empty((old_rank + n_new, new_flat.shape[1]))
        buffer[:old_rank] = factor.vectors
        coefficients = np.zeros((old_rank + n_new, n_new))

        rank = old_rank
        for j in range(n_new):
            column = np.array(new_flat[j], dtype=np.float64, copy=True)
            initial = np.linalg.norm(column)
            current = buffer[:rank]
            for sweep in range(3):
                before = np.linalg.norm(column)
                projection = current @ column
                column -= current.T @ projection
                coefficients[:rank, j] += projection
                if sweep >= 1 and np.linalg.norm(column) > 0.5 * before:
                    break
            norm = np.linalg.norm(column)
            if initial > 0 and norm > DEPENDENCE_TOLERANCE * initial:
                buffer[rank] = column / norm
                coefficients[rank, j] = norm
                rank += 1

        vectors = buffer[:rank]
        remainder = np.array(factor.remainder, copy=True)
        fresh = vectors[old_rank:]
        projection = np.zeros(rank - old_rank)
        for _ in range(2):
            step = fresh @ remainder
            remainder -= fresh.T @ step
            projection += step

        m_old = factor.r_factor.shape[1]
        r_factor = np.zeros((rank, m_old + n_new))
        r_factor[:old_rank, :m_old] = factor.r_factor
        r_factor[:, m_old:] = coefficients[:rank]
        return OrthoFactor(
            r_factor,
            np.concatenate([factor.projection, projection]),
            factor.residuals + [float(np.linalg.norm(remainder))],
            factor.ranks + [rank],
            vectors,
            remainder
        )

    @staticmethod
    def replay_factor(system: ParametrizedSystem, previous: Sequence[ReducedRows]) -> OrthoFactor:
        """Строит разложение заново по строкам уже выбранных опорных точек (в том же порядке)"""
        factor = OrthoFactor.empty(system.selection.ravel())
        for rows in previous:
            flat = NumericsService.support_blocks(system, rows).reshape(system.n_h, -1)
            factor = NumericsService.extend_factor(factor, flat)
        return factor

    @staticmethod
    def extend_gram(
        gram: GramData,
        system: ParametrizedSystem,
        new_rows: ReducedRows,
        previous: Sequence[ReducedRows]
    ) -> GramData:
        """
        Добавляет N_H строк и столбцов Грама для новой опорной точки.
        Существующие элементы копируются без изменений, разложение K = Q·R
        дополняется (или строится заново, если векторы Q не в памяти).

        Args:
            gram: Текущие данные Грама
            system: Параметризованная система
            new_rows: Строки новой опорной точки
            previous: Строки уже выбранных опорных точек (в порядке выбора)

        Returns:
            Новые данные Грама
        """
        if len(previous) != gram.n_supports:
            raise ConfigurationError(
                f"передано {len(previous)} опорных точек при {gram.n_supports} в данных Грама"
            )
        if any(rows.sigma == new_rows.sigma for rows in previous):
            raise ConfigurationError(f"опорная точка {list(new_rows.sigma.as_tuple())} уже выбрана")

        n_h = system.n_h
        new_flat = NumericsService.support_blocks(system, new_rows).reshape(n_h, -1)

        cross = np.zeros((n_h, gram.rhs.size))
        for k, rows in enumerate(previous):
            old_flat = NumericsService.support_blocks(system, rows).reshape(n_h, -1)
            cross[:, k * n_h:(k + 1) * n_h] = new_flat @ old_flat.T
        diagonal = new_flat @ new_flat.T
        diagonal = 0.5 * (diagonal + diagonal.T)

        size = gram.rhs.size + n_h
        extended = np.zeros((size, size))
        extended[:gram.rhs.size, :gram.rhs.size] = gram.gram
        extended[gram.rhs.size:, :gram.rhs.size] = cross
        extended[:gram.rhs.size, gram.rhs.size:] = cross.T
        extended[gram.rhs.size:, gram.rhs.size:] = diagonal

        rhs = np.concatenate([gram.rhs, new_flat @ system.selection.ravel()])

        factor = gram.factor
        if factor is None or not factor.extendable:
            factor = NumericsService.replay_factor(system, previous)
        factor = NumericsService.extend_factor(factor, new_flat)
        return GramData(extended, rhs, gram.s_norm_sq, n_h, factor)

    @staticmethod
    def reduce_gram(
        gram: GramData, system: ParametrizedSystem, sigma: ConductivityPoint
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Сворачивает данные Грама с Γ_σ = I_n ⊗ γ(σ).

        Returns:
            (G_σ, b_σ): матрица n×n и вектор длины n
        """
        if gram.n_h != system.n_h:
            raise ConfigurationError(f"данные Грама построены для N_H={gram.n_h}, у системы N_H={system.n_h}")
        gamma = system.gamma(sigma)
        big_gamma = np.kron(np.eye(gram.n_supports), gamma[:, None])
        g_sigma = big_gamma.T @ gram.gram @ big_gamma
        return 0.5 * (g_sigma + g_sigma.T), big_gamma.T @ gram.rhs

    @staticmethod
    def solve_alpha(gram: GramData, system: ParametrizedSystem, sigma: ConductivityPoint) -> AlphaSolution:
        """
        Оптимальные α* = argmin ‖vec(S) − K Γ_σ α‖ и оценка E_n.
        При наличии разложения K = Q·R задача решается как min ‖c − R Γ_σ α‖,
        E_n² = ρ² + ‖c − R Γ_σ α*‖²; иначе через G_σ α = b_σ и
        E_n² = ‖S‖² − 2αᵀb_σ + αᵀG_σα. Стоимость не зависит от N_V.

        Args:
            gram: Данные Грама (n ≥ 1 опорных точек)
            system: Параметризованная система (нужны только множители γ)
            sigma: Точка запроса

        Returns:
            Объект AlphaSolution
        """
        if gram.n_supports < 1:
            raise ConfigurationError("базис пуст: нужна хотя бы одна опорная точка")
        if gram.factor is None:
            return NumericsService.solve_alpha_normal(gram, system, sigma)
        reduced = NumericsService.reduce_factor(gram, system, sigma)

        scale = np.linalg.norm(reduced, axis=0)
        scale[scale == 0.0] = 1.0
        regularized = True
        alpha = np.zeros(gram.n_supports)
        if reduced.shape[0] > 0:
            solution, _, rank, _ = linalg.lstsq(reduced / scale, gram.factor.projection,
                                                cond=SPECTRAL_CUTOFF, check_finite=False)
            alpha = solution / scale
            regularized = rank < gram.n_supports

        misfit = np.linalg.norm(gram.factor.projection - reduced @ alpha)
        upper = float(np.hypot(gram.factor.residual, misfit))
        s_norm = np.sqrt(gram.s_norm_sq)
        if regularized:
            logger.debug(f"α решено со спектральной отсечкой при sigma={list(sigma.as_tuple())}")
        return AlphaSolution(alpha, upper, upper / s_norm if s_norm > 0 else 0.0, regularized)

    @staticmethod
    def reduce_factor(gram: GramData, system: ParametrizedSystem, sigma: ConductivityPoint) -> np.ndarray:
        """Матрица R·Γ_σ размера r×n"""
        if gram.n_h != system.n_h:
            raise ConfigurationError(f"данные Грама построены для N_H={gram.n_h}, у системы N_H={system.n_h}")
        gamma = system.gamma(sigma)
        r_factor = gram.factor.r_factor
        return r_factor.reshape(r_factor.shape[0], gram.n_supports, gram.n_h) @ gamma

    @staticmethod
    def solve_alpha_normal(gram: GramData, system: ParametrizedSystem, sigma: ConductivityPoint) -> AlphaSolution:
        """Решение через нормальные уравнения G_σ α = b_σ (для данных Грама без разложения)"""
        g_sigma, b_sigma = NumericsService.reduce_gram(gram, system, sigma)

        scale = np.sqrt(np.clip(np.diag(g_sigma), 0.0, None))
        scale[scale == 0.0] = 1.0
        scaled = g_sigma / np.outer(scale, scale)
        eigenvalues, eigenvectors = np.linalg.eigh(scaled)
        keep = eigenvalues > SPECTRAL_CUTOFF * eigenvalues.max()
        regularized = not bool(keep.all())

        basis = eigenvectors[:, keep]
        alpha = basis @ ((basis.T @ (b_sigma / scale)) / eigenvalues[keep]) / scale

        squared = gram.s_norm_sq - 2.0 * alpha @ b_sigma + alpha @ g_sigma @ alpha
        upper = float(np.sqrt(max(squared, 0.0)))
        s_norm = np.sqrt(gram.s_norm_sq)
        return AlphaSolution(alpha, upper, upper / s_norm if s_norm > 0 else 0.0, regularized)

    @staticmethod
    def independence(gram: GramData, system: ParametrizedSystem, sigma: ConductivityPoint) -> float:
        """Отношение λ_min(G_σ) / trace(G_σ) (мера линейной независимости базиса)"""
        if gram.factor is not None:
            singular = linalg.svdvals(NumericsService.reduce_factor(gram, system, sigma), check_finite=False)
            total = float(np.sum(singular ** 2))
            if singular.size < gram.n_supports or total == 0.0:
                return 0.0
            return float(singular[-1] ** 2 / total)
        g_sigma, _ = NumericsService.reduce_gram(gram, system, sigma)
        trace = float(np.trace(g_sigma))
        return float(np.linalg.eigvalsh(g_sigma)[0] / trace) if trace > 0 else 0.0

    @staticmethod
    def upper_bound_direct(
        system: ParametrizedSystem,
        supports: Sequence[ReducedRows],
        alpha: np.ndarray,
        sigma: ConductivityPoint
    ) -> float:
        """
        Явное вычисление ‖S − Σ α_i R_i H_σ‖_F (диагностический путь).

        Args:
            system: Параметризованная система
            supports: Строки опорных точек
            alpha: Коэффициенты
            sigma: Точка запроса

        Returns:
            Ненормированная оценка E_n
        """
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.size != len(supports):
            raise ConfigurationError(f"длина α ({alpha.size}) не равна числу опорных точек ({len(supports)})")
        combined = np.zeros_like(system.selection)
        for weight, rows in zip(alpha, supports):
            combined += weight * rows.matrix
        return float(np.linalg.norm(system.selection - combined @ system.assemble_h(sigma)))

    @staticmethod
    def bound_constant(system: ParametrizedSystem, sigma: ConductivityPoint) -> float:
        """Константа C = ‖H_σ⁻¹D_σ‖_F / ‖L‖_F из оценки ‖L − L_n‖/‖L‖ ≤ C·E_n"""
        leadfield, solution = NumericsService.solve_leadfield(system, sigma)
        return NumericsService.constant_from(leadfield, solution, sigma)

    @staticmethod
    def constant_from(leadfield: np.ndarray, solution: np.ndarray, sigma: ConductivityPoint) -> float:
        norm = np.linalg.norm(leadfield)
        if norm == 0.0:
            raise NumericalError("поле отведений равно нулю", sigma.as_tuple())
        return float(np.linalg.norm(solution) / norm)

    @staticmethod
    def relative_error(exact: np.ndarray, approx: np.ndarray) -> float:
        """Относительная ошибка ‖L − L_n‖_F / ‖L‖_F"""
        norm = np.linalg.norm(exact)
        return float(np.linalg.norm(exact - approx) / norm) if norm > 0 else float(np.linalg.norm(approx))
