"""
Сервис оценки проводимостей: подгонка одного диполя, карты невязок R(σ)
по сетке и поиск минимума.
"""
import logging
from typing import Any, Dict, List, Optional

import numpy as np

from exceptions import ConfigurationError, EstimationError, NumericalError
from models.basis import SupportBasis
from models.conductivity import ConductivityPoint
from models.grid import ConductivityGrid
from models.results import ErrorMap, EstimateResult, FitResult
from models.system import ParametrizedSystem
from services.basis_service import BasisService
from services.numerics_service import NumericsService
from utils.workers import WorkerPool

logger = logging.getLogger(__name__)

MAP_MODES = ("exact", "approx")
FLAT_TOLERANCE = 1e-12


class EstimationService:
    """Сервис подгонки диполя и оценки проводимостей"""

    @staticmethod
    def _amplitudes(data: np.ndarray, leadfield: np.ndarray) -> np.ndarray:
        """Оптимальные амплитуды a[j, t] = ⟨y_t, L_j⟩ / ‖L_j‖² (0 для нулевых столбцов)"""
        norms = np.sum(leadfield ** 2, axis=0)
        projections = leadfield.T @ data
        safe = np.where(norms > 0, norms, 1.0)
        return np.where(norms[:, None] > 0, projections / safe[:, None], 0.0)

    @staticmethod
    def fit_multi(data: np.ndarray, leadfield: np.ndarray, sigma: Optional[ConductivityPoint] = None) -> FitResult:
        """
        Подгонка одного диполя к T топографиям: R = min_j Σ_t min_a ‖y(t) − a·L_j‖₂.
        Источник общий для всех отсчетов времени, амплитуды свои.

        Args:
            data: Матрица N_E×T (или вектор длины N_E)
            leadfield: Поле отведений N_E×N_S
            sigma: Проводимости поля (для отчета)

        Returns:
            Объект FitResult
        """
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] < 1:
            raise ConfigurationError("ожидалась матрица N_E×T с T ≥ 1", field="data")
        if data.shape[0] != leadfield.shape[0]:
            raise ConfigurationError(
                f"длина топографии {data.shape[0]} не равна числу электродов {leadfield.shape[0]}",
                field="data"
            )

        amplitudes = EstimationService._amplitudes(data, leadfield)
        residuals = data.T[None, :, :] - amplitudes[:, :, None] * leadfield.T[:, None, :]
        totals = np.linalg.norm(residuals, axis=2).sum(axis=1)
        best = int(np.argmin(totals))
        best_amplitudes = amplitudes[best].copy()

        r_value = float(np.linalg.norm(data - np.outer(leadfield[:, best], best_amplitudes), axis=0).sum())
        return FitResult(r_value, best, best_amplitudes, sigma)

    @staticmethod
    def fit_single(topography: np.ndarray, leadfield: np.ndarray,
                   sigma: Optional[ConductivityPoint] = None) -> FitResult:
        """
        Подгонка одного диполя к одной топографии: R = min_{j,a} ‖y − a·L_j‖₂.

        Args:
            topography: Вектор длины N_E
            leadfield: Поле отведений N_E×N_S
            sigma: Проводимости поля (для отчета)

        Returns:
            Объект FitResult
        """
        topography = np.asarray(topography, dtype=np.float64)
        if topography.ndim != 1:
            raise ConfigurationError("ожидался вектор топографии", field="data")
        return EstimationService.fit_multi(topography[:, None], leadfield, sigma)

    @staticmethod
    def error_map(
        system: ParametrizedSystem,
        grid: ConductivityGrid,
        data: np.ndarray,
        mode: str = "exact",
        basis: Optional[SupportBasis] = None,
        normalize: bool = False,
        pool: Optional[WorkerPool] = None
    ) -> ErrorMap:
        """
        Карта невязок R(σ) по сетке с точными или приближенными полями отведений.
        Отсчеты с численной ошибкой помечаются невалидными.

        Args:
            system: Параметризованная система
            grid: Сетка проводимостей
            data: Топография (N_E) или серия (N_E×T)
            mode: "exact" или "approx"
            basis: Базис для режима "approx"
            normalize: Нормировать карту на минимум
            pool: Пул потоков

        Returns:
            Карта R(σ) со столбцом best_source
        """
        if mode not in MAP_MODES:
            raise ConfigurationError(f"режим должен быть одним из {MAP_MODES}", field="mode")
        if mode == "approx":
            if basis is None:
                raise ConfigurationError("для режима approx нужен базис", field="basis")
            BasisService.check_compatible(basis, system)
        pool = pool or WorkerPool(1)

        def evaluate(sigma: ConductivityPoint):
            try:
                if mode == "exact":
                    leadfield = NumericsService.exact_leadfield(system, sigma)
                else:
                    leadfield = BasisService.approximate(basis, system, sigma).leadfield
                return EstimationService.fit_multi(data, leadfield, sigma)
            except NumericalError as e:
                logger.warning(f"Отсчет помечен невалидным: {e}")
                return None

        fits = pool.map(evaluate, grid.samples, desc=f"Карта R ({mode})")
        values = [fit.r_value if fit is not None else float("nan") for fit in fits]
        sources = [fit.best_source if fit is not None else float("nan") for fit in fits]
        valid = [fit is not None for fit in fits]
        invalid = len(fits) - sum(valid)
        if invalid:
            logger.warning(f"⚠️ Невалидных отсчетов в карте: {invalid} из {len(fits)}")

        result = ErrorMap(grid, values, valid, label="data_fit", extras={"best_source": sources})
        return result.min_normalized() if normalize else result

    @staticmethod
    def estimate_conductivity(error_map: ErrorMap) -> EstimateResult:
        """
        Глобальный минимум карты и условные минимумы по первой изменяемой оси.

        Args:
            error_map: Карта невязок

        Returns:
            Объект EstimateResult
        """
        index = error_map.argmin()
        if index is None:
            raise EstimationError("в карте нет ни одного валидного отсчета")
        grid = error_map.grid
        values = error_map.values

        minimum = error_map.min_value()
        maximum = error_map.max_value()
        flat = (maximum - minimum) <= FLAT_TOLERANCE * max(1.0, abs(maximum))
        if flat:
            logger.warning("Карта постоянна: выбран отсчет с наименьшим индексом")
        spread = None
        if error_map.normalization == "min-normalized":
            spread = maximum / minimum - 1.0

        varying = [axis.compartment for axis in grid.varying_axes]
        axis = varying[0] if varying else 0
        profile: List[Dict[str, Any]] = []
        for position, value in enumerate(grid.axes[axis].values()):
            members = [i for i in range(len(grid)) if grid.multi_index(i)[axis] == position]
            candidates = [i for i in members if error_map.valid[i]]
            if not candidates:
                profile.append({"value": float(value), "index": None, "sigma": None, "r": None})
                continue
            best = min(candidates, key=lambda i: (values[i], i))
            profile.append({
                "value": float(value),
                "index": best,
                "sigma": list(grid[best].as_tuple()),
                "r": float(values[best])
            })

        return EstimateResult(
            sigma_hat=grid[index],
            index=index,
            value=float(values[index]),
            profile=profile,
            flat=bool(flat),
            spread=spread,
            normalization=error_map.normalization
        )
