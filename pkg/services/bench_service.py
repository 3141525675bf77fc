"""
Сервис замеров времени: онлайн-приближение против точного решения.
"""
import logging
from typing import Any, Dict, List, Sequence

import numpy as np

from exceptions import ConfigurationError
from models.basis import GreedyConfig, SupportBasis
from models.conductivity import ConductivityPoint
from models.grid import ConductivityGrid
from models.specs import MiniHeadSpec
from models.system import ParametrizedSystem
from services.basis_service import BasisService
from services.generator_service import GeneratorService
from services.numerics_service import NumericsService
from utils.timing import median_time
from utils.workers import WorkerPool

logger = logging.getLogger(__name__)


class BenchService:
    """Сервис для сравнения времени онлайн- и офлайн-расчетов"""

    @staticmethod
    def spread_points(points: Sequence[ConductivityPoint], count: int) -> List[ConductivityPoint]:
        """Не более count точек, равномерно разнесенных по списку (первая и последняя включены)"""
        points = list(points)
        if count < 1:
            raise ConfigurationError("число точек замера должно быть положительным", field="query_count")
        if len(points) <= count:
            return points
        indices = np.unique(np.linspace(0, len(points) - 1, count).round().astype(int))
        return [points[i] for i in indices]

    @staticmethod
    def time_queries(
        basis: SupportBasis,
        system: ParametrizedSystem,
        points: Sequence[ConductivityPoint],
        repeats: int = 5,
        sample_count: int = 5,
        with_exact: bool = True
    ) -> Dict[str, Any]:
        """
        Медианное время на одну матрицу для approximate() и exact_leadfield().
        Каждая точка замеряется отдельно (медиана по повторам), затем берется медиана по точкам.

        Args:
            basis: Базис
            system: Система
            points: Точки запроса
            repeats: Число повторов (медиана)
            sample_count: Сколько разнесенных точек замерять
            with_exact: Замерять также точное решение

        Returns:
            Словарь с медианами и отношением
        """
        timed = BenchService.spread_points(points, sample_count)
        online = [
            median_time(lambda sigma=sigma: BasisService.approximate(basis, system, sigma), repeats)
            for sigma in timed
        ]
        report: Dict[str, Any] = {
            "online_seconds": float(np.median(online)),
            "online_max_seconds": float(np.max(online)),
            "n_points": len(timed)
        }
        if with_exact:
            exact = [
                median_time(lambda sigma=sigma: NumericsService.exact_leadfield(system, sigma), repeats)
                for sigma in timed
            ]
            report["exact_seconds"] = float(np.median(exact))
            online_median = report["online_seconds"]
            report["speedup"] = report["exact_seconds"] / online_median if online_median > 0 else float("inf")
        return report

    @staticmethod
    def run(
        sizes: Sequence[int] = (12, 16),
        n_supports: int = 10,
        grid_count: int = 5,
        repeats: int = 5,
        query_count: int = 5,
        pool: WorkerPool = None
    ) -> Dict[str, Any]:
        """
        Строит модели головы заданных размеров, базис фиксированного размера
        и замеряет время на матрицу в нескольких отсчетах сетки.

        Args:
            sizes: Размеры сетки модели (ребро куба в ячейках)
            n_supports: Число опорных точек
            grid_count: Число отсчетов по каждой изменяемой оси
            repeats: Число повторов (медиана)
            query_count: Число отсчетов сетки, в которых замеряется время
            pool: Пул потоков для офлайн-этапа

        Returns:
            Отчет: строки по размерам и отношение онлайн-времен
        """
        rows: List[Dict[str, Any]] = []
        for size in sizes:
            spec = MiniHeadSpec.nested_boxes(shape=(size, size, size), domain=MiniHeadSpec.default_domain())
            system = GeneratorService.build_mini_head(spec)
            grid: ConductivityGrid = system.default_grid().resized(grid_count)
            config = GreedyConfig(initial_supports="corners", eps_abs=0.0, max_supports=min(n_supports, len(grid)))
            basis = BasisService.greedy_select(system, grid, config, pool)

            report = BenchService.time_queries(basis, system, grid.samples, repeats, query_count)
            row = {"size": size, "n_unknowns": system.n_unknowns, "n_supports": basis.n_supports, **report}
            rows.append(row)
            logger.info(
                f"N_V={system.n_unknowns}: онлайн {report['online_seconds']:.2e} с, "
                f"точно {report['exact_seconds']:.2e} с, ускорение {report['speedup']:.1f}x "
                f"({report['n_points']} точек)"
            )

        online = [row["online_seconds"] for row in rows]
        ratio = max(online) / min(online) if rows and min(online) > 0 else float("nan")
        return {"rows": rows, "online_ratio": ratio, "repeats": repeats}
