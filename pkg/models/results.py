"""
Результаты расчетов: приближенные поля, карты ошибок, подгонка диполя,
оценка проводимостей и сравнение с полиномиальной интерполяцией.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from exceptions import ConfigurationError
from models.basis import AlphaSolution
from models.conductivity import ConductivityPoint
from models.grid import ConductivityGrid
from utils.artifacts import write_csv

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

NORMALIZATIONS = ("raw", "min-normalized")


@dataclass(frozen=True)
class ApproxResult:
    """
    Результат онлайн-приближения поля отведений.

    Атрибуты:
        leadfield: Матрица L_n (N_E×N_S)
        alpha: Решение для коэффициентов α*
        sigma: Точка запроса
        out_of_domain: Точка лежит вне области интереса базиса
    """

    leadfield: np.ndarray
    alpha: AlphaSolution
    sigma: ConductivityPoint
    out_of_domain: bool = False


class ErrorMap:
    """
    Значения по отсчетам сетки: оценка ошибки, истинная ошибка или невязка R(σ).

    Атрибуты:
        grid: Сетка проводимостей
        values: Основные значения (NaN у невалидных отсчетов)
        valid: Маска валидных отсчетов
        label: Имя основного столбца
        normalization: "raw" или "min-normalized"
        extras: Дополнительные именованные столбцы той же длины
    """

    def __init__(
        self,
        grid: ConductivityGrid,
        values: Sequence[float],
        valid: Optional[Sequence[bool]] = None,
        label: str = "value",
        normalization: str = "raw",
        extras: Optional[Dict[str, Sequence[float]]] = None
    ):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(grid),):
            raise ConfigurationError(f"ожидалось {len(grid)} значений, получено {values.shape}",
                                     field="error_map.values")
        if normalization not in NORMALIZATIONS:
            raise ConfigurationError(f"нормировка должна быть одной из {NORMALIZATIONS}",
                                     field="error_map.normalization")
        valid = np.isfinite(values) if valid is None else np.asarray(valid, dtype=bool) & np.isfinite(values)
        self.grid = grid
        self.values = np.where(valid, values, np.nan)
        self.valid = valid
        self.label = label
        self.normalization = normalization
        self.extras: Dict[str, np.ndarray] = {
            name: np.asarray(column, dtype=np.float64) for name, column in (extras or {}).items()
        }
        for name, column in self.extras.items():
            if column.shape != (len(grid),):
                raise ConfigurationError(f"ожидалось {len(grid)} значений, получено {column.shape}",
                                         field=f"error_map.extras.{name}")

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def argmin(self) -> Optional[int]:
        """Индекс наименьшего валидного значения (при равенстве наименьший индекс)"""
        if not self.valid.any():
            return None
        return int(np.nanargmin(self.values))

    def argmax(self) -> Optional[int]:
        if not self.valid.any():
            return None
        return int(np.nanargmax(self.values))

    def min_value(self) -> float:
        return float(np.nanmin(self.values)) if self.valid.any() else float("nan")

    def max_value(self) -> float:
        return float(np.nanmax(self.values)) if self.valid.any() else float("nan")

    def min_normalized(self) -> "ErrorMap":
        """
        Карта, нормированная на свой минимум (минимум становится ровно 1).
        Нулевой минимум делает нормировку невозможной: карта возвращается без изменений.
        """
        minimum = self.min_value()
        if not np.isfinite(minimum) or minimum <= 0.0:
            logger.warning(f"Нормировка на минимум невозможна (минимум {minimum}), карта оставлена как есть")
            return self
        values = self.values / minimum
        values[self.argmin()] = 1.0
        return ErrorMap(self.grid, values, self.valid, self.label, "min-normalized", self.extras)

    def header(self) -> List[str]:
        names = [f"sigma_{k}" for k in range(self.grid.n_compartments)]
        return names + [self.label, "valid"] + list(self.extras)

    def rows(self) -> List[list]:
        result = []
        for i, sample in enumerate(self.grid.samples):
            row: List[Any] = list(sample.as_tuple())
            row += [self.values[i], bool(self.valid[i])]
            row += [column[i] for column in self.extras.values()]
            result.append(row)
        return result

    def to_csv(self, path: PathLike) -> Path:
        """Экспорт карты в CSV (координаты σ, значение, валидность, доп. столбцы)"""
        return write_csv(path, self.header(), self.rows())

    def summary(self) -> Dict[str, Any]:
        argmin = self.argmin()
        argmax = self.argmax()
        return {
            "label": self.label,
            "normalization": self.normalization,
            "grid_id": self.grid.grid_id,
            "n_samples": len(self.grid),
            "n_valid": self.n_valid,
            "min": self.min_value(),
            "max": self.max_value(),
            "argmin": argmin,
            "argmin_sigma": None if argmin is None else list(self.grid[argmin].as_tuple()),
            "argmax": argmax,
            "argmax_sigma": None if argmax is None else list(self.grid[argmax].as_tuple())
        }


@dataclass(frozen=True)
class FitResult:
    """
    Результат подгонки одного диполя.

    Атрибуты:
        r_value: Невязка R
        best_source: Индекс лучшего источника
        best_amplitudes: Амплитуды a(t) по отсчетам времени
        sigma: Проводимости, для которых считалось поле (если известны)
    """

    r_value: float
    best_source: int
    best_amplitudes: np.ndarray
    sigma: Optional[ConductivityPoint] = None


@dataclass
class EstimateResult:
    """
    Оценка проводимостей по карте невязок.

    Атрибуты:
        sigma_hat: Точка глобального минимума
        index: Индекс этой точки в сетке
        value: Значение карты в минимуме
        profile: Условные минимумы по первой изменяемой оси
        flat: Карта постоянна (разброс ниже 1e-12)
        spread: max/min − 1 для нормированной карты, иначе None
        normalization: Нормировка исходной карты
    """

    sigma_hat: ConductivityPoint
    index: int
    value: float
    profile: List[Dict[str, Any]] = field(default_factory=list)
    flat: bool = False
    spread: Optional[float] = None
    normalization: str = "raw"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sigma_hat": list(self.sigma_hat.as_tuple()),
            "index": self.index,
            "value": self.value,
            "flat": self.flat,
            "spread": self.spread,
            "normalization": self.normalization,
            "profile": self.profile
        }


class PolyModel:
    """
    Поэлементная полиномиальная интерполяция поля отведений по одному компартменту.

    Атрибуты:
        compartment: Изменяемый компартмент
        base: Точка с фиксированными значениями остальных компартментов
        nodes: Значения проводимости в узлах
        transform: "linear" или "log" (координата интерполяции)
        leadfields: Точные поля в узлах (n×N_E×N_S)
        interpolator: Интерполятор scipy или None при n = 1
    """

    def __init__(self, compartment: int, base: ConductivityPoint, nodes: np.ndarray, transform: str,
                 leadfields: np.ndarray, interpolator: Any = None):
        self.compartment = compartment
        self.base = base
        self.nodes = np.asarray(nodes, dtype=np.float64)
        self.transform = transform
        self.leadfields = np.asarray(leadfields, dtype=np.float64)
        self.interpolator = interpolator

    @property
    def degree(self) -> int:
        return self.nodes.size - 1

    @property
    def shape(self):
        return self.leadfields.shape[1:]


@dataclass(frozen=True)
class PolyEvaluation:
    leadfield: np.ndarray
    extrapolated: bool = False


@dataclass(frozen=True)
class ComparisonRow:
    """Строка таблицы сравнения методов"""

    method: str
    n: int
    mean_rel_error: float
    max_rel_error: float

    def as_row(self) -> list:
        return [self.method, self.n, self.mean_rel_error, self.max_rel_error]


COMPARISON_HEADER = ["method", "n", "mean_rel_error", "max_rel_error"]
