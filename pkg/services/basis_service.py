"""
Сервис метода опорных точек: жадный отбор (офлайн), приближение поля
отведений (онлайн) и оценка ошибок по сетке.
"""
import logging
import time
from typing import List, Optional, Tuple

import numpy as np

from exceptions import ConfigurationError, NumericalError
from models.basis import AlphaSolution, GreedyConfig, SupportBasis, TraceEntry
from models.conductivity import ConductivityPoint
from models.grid import ConductivityGrid
from models.results import ApproxResult, ErrorMap
from models.system import ParametrizedSystem
from services.numerics_service import NumericsService
from utils.workers import WorkerPool

logger = logging.getLogger(__name__)

INDEPENDENCE_FLOOR = 1e-12


class BasisService:
    """Сервис для построения и использования базиса опорных точек"""

    @staticmethod
    def empty_basis(system: ParametrizedSystem, grid: Optional[ConductivityGrid] = None) -> SupportBasis:
        provenance = {"grid": grid.to_list(), "grid_id": grid.grid_id} if grid is not None else {}
        return SupportBasis.empty(
            system.n_h,
            float(np.sum(system.selection ** 2)),
            (system.n_d, system.n_electrodes, system.n_sources),
            provenance
        )

    @staticmethod
    def add_support(basis: SupportBasis, system: ParametrizedSystem, sigma: ConductivityPoint) -> SupportBasis:
        """
        Добавляет опорную точку: строки S·H⁻¹, расширение Грама и матрицы L̄_ij.

        Args:
            basis: Текущий базис
            system: Параметризованная система
            sigma: Новая опорная точка

        Returns:
            Расширенный базис
        """
        rows = NumericsService.reduced_rows(system, sigma)
        gram = NumericsService.extend_gram(basis.gram, system, rows, basis.reduced)
        lbar_block = np.matmul(rows.matrix[None, :, :], system.d_stack)
        return basis.extended(rows, gram, lbar_block)

    @staticmethod
    def check_compatible(basis: SupportBasis, system: ParametrizedSystem):
        """Проверяет, что базис построен для системы с такими же размерами"""
        expected = (system.n_d, system.n_electrodes, system.n_sources)
        if basis.gram.n_h != system.n_h or tuple(basis.lbar.shape[1:]) != expected:
            raise ConfigurationError(
                f"базис (N_H={basis.gram.n_h}, L̄={tuple(basis.lbar.shape[1:])}) "
                f"не соответствует системе (N_H={system.n_h}, L̄={expected})",
                field="basis"
            )

    @staticmethod
    def initial_indices(grid: ConductivityGrid, config: GreedyConfig) -> List[int]:
        """Индексы начальных опорных точек в сетке (или -1 для точек вне сетки)"""
        if config.initial_supports == "corners":
            return grid.corner_indices()
        if config.initial_supports == "center":
            return [grid.center_index()]
        indices = []
        for point in config.explicit:
            if not grid.contains(point):
                raise ConfigurationError(f"начальная точка {list(point.as_tuple())} вне сетки", field="greedy.explicit")
            index = grid.index_of(point)
            indices.append(-1 if index is None else index)
        return indices

    @staticmethod
    def grid_bounds(
        basis: SupportBasis,
        system: ParametrizedSystem,
        grid: ConductivityGrid,
        pool: Optional[WorkerPool] = None
    ) -> Tuple[List[AlphaSolution], np.ndarray]:
        """
        Оценки Ê_n для всех отсчетов сетки.
        У отсчетов, совпадающих с опорными точками, оценка равна нулю.

        Returns:
            (решения α по отсчетам, массив нормированных оценок)
        """
        pool = pool or WorkerPool(1)
        solutions = pool.map(lambda sigma: NumericsService.solve_alpha(basis.gram, system, sigma),
                             grid.samples, desc="Оценка ошибки")
        errors = np.array([s.relative_upper_bound for s in solutions])
        for support in basis.supports:
            index = grid.index_of(support)
            if index is not None:
                errors[index] = 0.0
        return solutions, errors

    @staticmethod
    def greedy_select(
        system: ParametrizedSystem,
        grid: ConductivityGrid,
        config: GreedyConfig,
        pool: Optional[WorkerPool] = None
    ) -> SupportBasis:
        """
        Жадный отбор опорных точек: на каждой итерации добавляется отсчет
        с наибольшей оценкой ошибки (при равенстве с наименьшим индексом).

        Args:
            system: Параметризованная система
            grid: Выборка области интереса
            config: Настройки отбора
            pool: Пул потоков для поточечных оценок

        Returns:
            Базис с трассой максимальных оценок
        """
        if len(grid) == 0:
            raise ConfigurationError("сетка пуста", field="grid")
        if grid.n_compartments != system.n_compartments:
            raise ConfigurationError(
                f"сетка задана для {grid.n_compartments} компартментов, у системы {system.n_compartments}",
                field="grid"
            )
        max_supports = config.max_supports
        if max_supports > len(grid):
            logger.warning(f"max_supports={max_supports} больше числа отсчетов, ограничено до {len(grid)}")
            max_supports = len(grid)
        pool = pool or WorkerPool(1)

        started = time.perf_counter()
        basis = BasisService.empty_basis(system, grid)
        initial = BasisService.initial_indices(grid, config)
        points = [grid[i] if i >= 0 else config.explicit[k] for k, i in enumerate(initial)]
        if len(points) > max_supports:
            raise ConfigurationError(
                f"начальных точек ({len(points)}) больше, чем max_supports={max_supports}",
                field="greedy.max_supports"
            )

        logger.info(f"🔄 Жадный отбор: {len(grid)} отсчетов, начальных точек {len(points)}")
        for point in points:
            if point in basis.supports:
                continue
            try:
                basis = BasisService.add_support(basis, system, point)
            except NumericalError as e:
                logger.error(f"❌ Не удалось вычислить начальную опорную точку: {e}")
                raise

        trace: List[TraceEntry] = []
        stop_reason = "max_supports"
        while True:
            solutions, errors = BasisService.grid_bounds(basis, system, grid, pool)
            index = int(np.argmax(errors))
            max_error = float(errors[index])
            regularized = sum(1 for s in solutions if s.regularized)
            trace.append(
                TraceEntry(len(trace), basis.n_supports, max_error, index, grid[index].as_tuple(), regularized)
            )
            logger.info(f"n={basis.n_supports}: max Ê={max_error:.3e} в отсчете {index}")
            if regularized:
                logger.warning(f"n={basis.n_supports}: {regularized} решений α со спектральной отсечкой")

            if max_error == 0.0:
                stop_reason = "exact"
                break
            if config.eps_abs > 0 and max_error < config.eps_abs:
                stop_reason = "eps_abs"
                break
            if config.eps_delta > 0 and len(trace) > 1 and abs(trace[-2].max_error - max_error) < config.eps_delta:
                stop_reason = "eps_delta"
                break
            if basis.n_supports >= max_supports:
                stop_reason = "max_supports"
                break

            basis = BasisService.add_support(basis, system, grid[index])
            ratio = NumericsService.independence(basis.gram, system, grid[index])
            if ratio <= INDEPENDENCE_FLOOR:
                logger.warning(f"n={basis.n_supports}: базис почти линейно зависим (λ_min/trace={ratio:.3e})")

        elapsed = time.perf_counter() - started
        logger.info(f"✅ Отбор завершен: n={basis.n_supports}, критерий {stop_reason}, {elapsed:.2f} с")
        return basis.with_trace(
            trace,
            grid=grid.to_list(),
            grid_id=grid.grid_id,
            stop={"reason": stop_reason, **config.to_dict()}
        )

    @staticmethod
    def approximate(basis: SupportBasis, system: ParametrizedSystem, sigma: ConductivityPoint) -> ApproxResult:
        """
        Онлайн-приближение L_n = Σ_i Σ_j α_i λ_j(σ) L̄_ij.
        Данные размера N_V не используются.

        Args:
            basis: Непустой базис
            system: Параметризованная система (нужны только множители)
            sigma: Точка запроса

        Returns:
            Объект ApproxResult
        """
        if basis.n_supports == 0:
            raise ConfigurationError("базис пуст", field="basis")
        system.check_point(sigma)
        domain = basis.domain_grid()
        out_of_domain = domain is not None and not domain.contains(sigma)
        if out_of_domain:
            logger.warning(f"⚠️ Точка {list(sigma.as_tuple())} вне области интереса базиса")

        solution = NumericsService.solve_alpha(basis.gram, system, sigma)
        leadfield = np.einsum("i,j,ijes->es", solution.alpha, system.lam(sigma), basis.lbar)
        return ApproxResult(leadfield, solution, sigma, out_of_domain)

    @staticmethod
    def error_sweep(
        basis: SupportBasis,
        system: ParametrizedSystem,
        grid: ConductivityGrid,
        with_exact: bool = False,
        pool: Optional[WorkerPool] = None
    ) -> ErrorMap:
        """
        Оценка ошибки по сетке; с with_exact также истинная относительная ошибка
        и константа C по точным решениям.

        Args:
            basis: Базис
            system: Параметризованная система
            grid: Сетка
            with_exact: Считать точные поля (дорого)
            pool: Пул потоков

        Returns:
            Карта Ê_n со столбцами upper_bound и, при with_exact, true_error и bound_constant
        """
        BasisService.check_compatible(basis, system)
        pool = pool or WorkerPool(1)
        solutions, errors = BasisService.grid_bounds(basis, system, grid, pool)
        extras = {"upper_bound": [s.upper_bound for s in solutions]}
        valid = np.ones(len(grid), dtype=bool)

        if with_exact:
            def exact_pair(sigma: ConductivityPoint) -> Tuple[float, float]:
                try:
                    leadfield, solution = NumericsService.solve_leadfield(system, sigma)
                    approx = BasisService.approximate(basis, system, sigma).leadfield
                    return (NumericsService.relative_error(leadfield, approx),
                            NumericsService.constant_from(leadfield, solution, sigma))
                except NumericalError as e:
                    logger.warning(f"Отсчет пропущен: {e}")
                    return float("nan"), float("nan")

            pairs = pool.map(exact_pair, grid.samples, desc="Точные поля")
            extras["true_error"] = [p[0] for p in pairs]
            extras["bound_constant"] = [p[1] for p in pairs]
            valid = np.isfinite(extras["true_error"])

        return ErrorMap(grid, errors, valid, label="relative_upper_bound", extras=extras)
