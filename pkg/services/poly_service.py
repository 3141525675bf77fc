"""
Сервис полиномиальной интерполяции поля отведений по одному компартменту
и сравнения с методом опорных точек.
"""
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from exceptions import ConfigurationError
from models.basis import GreedyConfig
from models.conductivity import ConductivityPoint
from models.grid import ConductivityGrid, GridAxis
from models.results import ComparisonRow, PolyEvaluation, PolyModel
from models.system import ParametrizedSystem
from services.basis_service import BasisService
from services.numerics_service import NumericsService
from utils.workers import WorkerPool

logger = logging.getLogger(__name__)

TRANSFORMS = ("linear", "log")
POINT_RTOL = 1e-12


class PolyService:
    """Сервис для полиномиальной интерполяции и сравнения методов"""

    @staticmethod
    def _coordinate(values: np.ndarray, transform: str) -> np.ndarray:
        return np.log(values) if transform == "log" else np.asarray(values, dtype=np.float64)

    @staticmethod
    def build_model(
        compartment: int,
        base: ConductivityPoint,
        nodes: Sequence[float],
        leadfields: np.ndarray,
        transform: str = "linear"
    ) -> PolyModel:
        """
        Строит интерполяционную модель по готовым полям в узлах.

        Args:
            compartment: Изменяемый компартмент
            base: Значения остальных компартментов
            nodes: Значения проводимости в узлах
            leadfields: Поля в узлах (n×N_E×N_S)
            transform: Координата интерполяции ("linear" или "log")

        Returns:
            Объект PolyModel
        """
        if transform not in TRANSFORMS:
            raise ConfigurationError(f"преобразование должно быть одним из {TRANSFORMS}", field="transform")
        nodes = np.asarray(nodes, dtype=np.float64)
        leadfields = np.asarray(leadfields, dtype=np.float64)
        if nodes.size < 1:
            raise ConfigurationError("нужен хотя бы один узел", field="nodes")
        if np.unique(nodes).size != nodes.size:
            raise ConfigurationError("узлы интерполяции совпадают", field="nodes")
        if leadfields.shape[0] != nodes.size:
            raise ConfigurationError("число полей не равно числу узлов", field="nodes")

        interpolator = None
        if nodes.size > 1:
            interpolator = BarycentricInterpolator(
                PolyService._coordinate(nodes, transform),
                leadfields.reshape(nodes.size, -1),
                axis=0
            )
        return PolyModel(compartment, base, nodes, transform, leadfields, interpolator)

    @staticmethod
    def poly_fit(
        system: ParametrizedSystem,
        nodes: Sequence[ConductivityPoint],
        compartment: int,
        transform: str = "linear",
        pool: Optional[WorkerPool] = None
    ) -> PolyModel:
        """
        Интерполяционный полином степени n−1 по n точным полям отведений.
        Узлы должны отличаться только значением одного компартмента.

        Args:
            system: Параметризованная система
            nodes: Узлы (точки проводимости)
            compartment: Изменяемый компартмент
            transform: Координата интерполяции
            pool: Пул потоков

        Returns:
            Объект PolyModel
        """
        if not nodes:
            raise ConfigurationError("нужен хотя бы один узел", field="nodes")
        base = nodes[0]
        for node in nodes[1:]:
            PolyService._check_line(base, node, compartment)
        pool = pool or WorkerPool(1)
        leadfields = pool.map(lambda sigma: NumericsService.exact_leadfield(system, sigma), list(nodes),
                              desc="Узлы полинома")
        values = [node[compartment] for node in nodes]
        return PolyService.build_model(compartment, base, values, np.stack(leadfields), transform)

    @staticmethod
    def _check_line(base: ConductivityPoint, sigma: ConductivityPoint, compartment: int):
        if len(sigma) != len(base):
            raise ConfigurationError("число компартментов не совпадает с моделью", field="sigma")
        for k, (a, b) in enumerate(zip(base.values, sigma.values)):
            if k != compartment and abs(a - b) > POINT_RTOL * abs(a):
                raise ConfigurationError(
                    f"точка {list(sigma.as_tuple())} не лежит на прямой изменения компартмента {compartment}",
                    field="sigma"
                )

    @staticmethod
    def poly_eval(model: PolyModel, sigma: ConductivityPoint) -> PolyEvaluation:
        """
        Поэлементное вычисление полинома в точке запроса (экстраполяция помечается).

        Args:
            model: Интерполяционная модель
            sigma: Точка запроса

        Returns:
            Объект PolyEvaluation
        """
        PolyService._check_line(model.base, sigma, model.compartment)
        value = sigma[model.compartment]
        extrapolated = bool(value < model.nodes.min() or value > model.nodes.max())
        if extrapolated and model.nodes.size > 1:
            logger.warning(f"Экстраполяция полинома в точке {value:g}")
        if model.interpolator is None:
            return PolyEvaluation(model.leadfields[0].copy(), extrapolated)
        x = PolyService._coordinate(np.array([value]), model.transform)
        flat = np.asarray(model.interpolator(x))[0]
        return PolyEvaluation(flat.reshape(model.shape), extrapolated)

    @staticmethod
    def _line_points(base: ConductivityPoint, compartment: int, values: Sequence[float]) -> List[ConductivityPoint]:
        return [base.with_value(compartment, float(v)) for v in values]

    @staticmethod
    def _errors(reference: List[np.ndarray], approx: List[np.ndarray]) -> np.ndarray:
        return np.array([NumericsService.relative_error(e, a) for e, a in zip(reference, approx)])

    @staticmethod
    def compare_methods(
        system: ParametrizedSystem,
        compartment: int,
        lo: float,
        hi: float,
        n_values: Sequence[int],
        eval_count: int = 40,
        rb_grid_count: int = 25,
        base: Optional[ConductivityPoint] = None,
        sensitivity: bool = False,
        pool: Optional[WorkerPool] = None
    ) -> List[ComparisonRow]:
        """
        Сравнение метода опорных точек и полиномиальной интерполяции на одномерном отрезке.
        Ошибка усредняется по eval_count равномерно расположенным точным полям.

        Args:
            system: Параметризованная система
            compartment: Изменяемый компартмент
            lo: Левая граница отрезка
            hi: Правая граница отрезка
            n_values: Числа опорных точек / узлов
            eval_count: Число контрольных точек
            rb_grid_count: Число отсчетов сетки для жадного отбора
            base: Значения остальных компартментов (по умолчанию центр области системы)
            sensitivity: Добавить вариант poly-log (лог-узлы, лог-координата)
            pool: Пул потоков

        Returns:
            Строки таблицы: для каждого n методы rb, poly (и poly-log)
        """
        n_values = sorted({int(n) for n in n_values})
        if not n_values or n_values[0] < 1:
            raise ConfigurationError("числа n должны быть положительными", field="n_values")
        if not 0 <= compartment < system.n_compartments:
            raise ConfigurationError("компартмент вне диапазона", field="compartment")
        if max(n_values) > rb_grid_count:
            raise ConfigurationError(
                f"n={max(n_values)} больше числа отсчетов сетки {rb_grid_count}", field="n_values"
            )
        pool = pool or WorkerPool(1)
        if base is None:
            base = system.default_grid().center() if system.domain else ConductivityPoint([1.0] * system.n_compartments)

        eval_points = PolyService._line_points(base, compartment, np.linspace(lo, hi, eval_count))
        logger.info(f"🔄 Сравнение методов: {eval_count} контрольных точек, n={n_values}")
        exact = pool.map(lambda sigma: NumericsService.exact_leadfield(system, sigma), eval_points,
                         desc="Контрольные поля")

        fixed = {k: base[k] for k in range(system.n_compartments) if k != compartment}
        grid = ConductivityGrid.from_axes([GridAxis(compartment, lo, hi, rb_grid_count, "linear")], fixed)
        initial = "corners" if n_values[0] >= 2 else "center"
        config = GreedyConfig(initial_supports=initial, eps_abs=0.0, eps_delta=0.0, max_supports=n_values[-1])
        full_basis = BasisService.greedy_select(system, grid, config, pool)

        rows: List[ComparisonRow] = []
        for n in n_values:
            basis = full_basis.truncated(min(n, full_basis.n_supports))
            approx = [BasisService.approximate(basis, system, sigma).leadfield for sigma in eval_points]
            rb_errors = PolyService._errors(exact, approx)
            rows.append(ComparisonRow("rb", n, float(rb_errors.mean()), float(rb_errors.max())))

            variants: Dict[str, tuple] = {"poly": (np.linspace(lo, hi, n) if n > 1 else [0.5 * (lo + hi)], "linear")}
            if sensitivity:
                variants["poly-log"] = (np.geomspace(lo, hi, n) if n > 1 else [np.sqrt(lo * hi)], "log")
            for method, (values, transform) in variants.items():
                model = PolyService.poly_fit(system, PolyService._line_points(base, compartment, values),
                                             compartment, transform, pool)
                approx = [PolyService.poly_eval(model, sigma).leadfield for sigma in eval_points]
                errors = PolyService._errors(exact, approx)
                rows.append(ComparisonRow(method, n, float(errors.mean()), float(errors.max())))
            logger.info(f"n={n}: rb={rows[-len(variants) - 1].mean_rel_error:.3e}, "
                        f"poly={rows[-len(variants)].mean_rel_error:.3e}")
        return rows
