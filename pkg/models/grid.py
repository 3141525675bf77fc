"""
Дискретизация области интереса в пространстве проводимостей.
"""
import hashlib
import itertools
import json
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import ConfigurationError
from models.conductivity import ConductivityPoint

SAMPLING_MODES = ("linear", "log")


@dataclass(frozen=True)
class GridAxis:
    """
    Ось сетки для одного компартмента.

    Атрибуты:
        compartment: Индекс компартмента (с нуля)
        lo: Нижняя граница
        hi: Верхняя граница
        count: Число отсчетов (1 означает фиксированную проводимость)
        mode: Равномерно по значению ("linear") или по логарифму ("log")
    """

    compartment: int
    lo: float
    hi: float
    count: int = 1
    mode: str = "linear"

    def __post_init__(self):
        field = f"grid[{self.compartment}]"
        if self.mode not in SAMPLING_MODES:
            raise ConfigurationError(f"режим должен быть одним из {SAMPLING_MODES}", field=f"{field}.mode")
        if self.count < 1:
            raise ConfigurationError("число отсчетов должно быть положительным", field=f"{field}.count")
        if not (self.lo > 0 and self.hi > 0):
            raise ConfigurationError("границы должны быть положительными", field=field)
        if self.lo > self.hi:
            raise ConfigurationError("нижняя граница больше верхней", field=field)
        if self.count > 1 and self.lo == self.hi:
            raise ConfigurationError("для нескольких отсчетов нужен ненулевой интервал", field=field)

    @property
    def varying(self) -> bool:
        return self.count > 1

    @property
    def center(self) -> float:
        if self.mode == "log":
            return float(np.sqrt(self.lo * self.hi))
        return 0.5 * (self.lo + self.hi)

    def values(self) -> np.ndarray:
        """Значения отсчетов вдоль оси"""
        if self.count == 1:
            return np.array([self.center])
        if self.mode == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "compartment": self.compartment,
            "lo": self.lo,
            "hi": self.hi,
            "count": self.count,
            "mode": self.mode
        }

    @classmethod
    def from_dict(cls, item: Dict[str, Any], field: str = "grid") -> "GridAxis":
        try:
            lo = float(item["lo"])
            return cls(
                compartment=int(item["compartment"]),
                lo=lo,
                hi=float(item.get("hi", lo)),
                count=int(item.get("count", 1)),
                mode=str(item.get("mode", "linear"))
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"некорректное описание оси: {item!r}", field=field) from e


class ConductivityGrid:
    """
    Конечная выборка Σ = {σ_1..σ_M} прямоугольной области интереса.
    Порядок отсчетов построчный: первая ось меняется медленнее всех.

    Атрибуты:
        axes: Оси по всем компартментам (в порядке компартментов)
        samples: Список точек ConductivityPoint
        values: Матрица M×N_C значений проводимостей
    """

    def __init__(self, axes: Sequence[GridAxis]):
        axes = sorted(axes, key=lambda axis: axis.compartment)
        compartments = [axis.compartment for axis in axes]
        if compartments != list(range(len(axes))):
            raise ConfigurationError(
                f"оси должны покрывать компартменты 0..N_C-1 ровно по одному разу, получено {compartments}",
                field="grid"
            )
        self.axes: Tuple[GridAxis, ...] = tuple(axes)
        self.shape: Tuple[int, ...] = tuple(axis.count for axis in axes)

        per_axis = [axis.values() for axis in axes]
        rows = list(itertools.product(*per_axis))
        values = np.array(rows, dtype=np.float64).reshape(len(rows), len(axes))
        values.setflags(write=False)
        self.values = values
        self.samples: List[ConductivityPoint] = [ConductivityPoint(row) for row in values]
        self._index = {sample.as_tuple(): i for i, sample in enumerate(self.samples)}

    @classmethod
    def from_axes(cls, axes: Sequence[GridAxis], fixed: Optional[Dict[int, float]] = None) -> "ConductivityGrid":
        """
        Сетка по изменяемым осям; остальные компартменты фиксированы.

        Args:
            axes: Оси с отсчетами
            fixed: Значения фиксированных компартментов {индекс: проводимость}

        Returns:
            Объект ConductivityGrid
        """
        all_axes = list(axes)
        for compartment, value in (fixed or {}).items():
            all_axes.append(GridAxis(int(compartment), float(value), float(value)))
        return cls(all_axes)

    @classmethod
    def from_list(cls, items: Sequence[Dict[str, Any]], field: str = "grid") -> "ConductivityGrid":
        if not isinstance(items, (list, tuple)) or not items:
            raise ConfigurationError("ожидался непустой список осей", field=field)
        return cls([GridAxis.from_dict(item, field=f"{field}[{i}]") for i, item in enumerate(items)])

    def to_list(self) -> List[Dict[str, Any]]:
        return [axis.to_dict() for axis in self.axes]

    @property
    def grid_id(self) -> str:
        """Короткий идентификатор сетки (хэш описания осей)"""
        text = json.dumps(self.to_list(), sort_keys=True)
        return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]

    @property
    def n_compartments(self) -> int:
        return len(self.axes)

    @property
    def varying_axes(self) -> List[GridAxis]:
        return [axis for axis in self.axes if axis.varying]

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int) -> ConductivityPoint:
        return self.samples[index]

    def multi_index(self, index: int) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.shape))

    def flat_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.shape))

    def index_of(self, sigma: ConductivityPoint) -> Optional[int]:
        """Индекс отсчета, точно совпадающего с σ, или None"""
        return self._index.get(sigma.as_tuple())

    def corner_indices(self) -> List[int]:
        """Индексы угловых точек области (по изменяемым осям)"""
        choices = [sorted({0, axis.count - 1}) for axis in self.axes]
        return sorted({self.flat_index(multi) for multi in itertools.product(*choices)})

    def center_index(self) -> int:
        """Индекс отсчета в центре сетки (нижняя середина при четном числе отсчетов)"""
        return self.flat_index([(axis.count - 1) // 2 for axis in self.axes])

    def center(self) -> ConductivityPoint:
        """Центр области (среднее геометрическое для логарифмических осей)"""
        return ConductivityPoint([axis.center for axis in self.axes])

    def contains(self, sigma: ConductivityPoint, rtol: float = 1e-12) -> bool:
        """Лежит ли σ внутри границ области"""
        if len(sigma) != self.n_compartments:
            return False
        for axis, value in zip(self.axes, sigma.values):
            lo = axis.lo if axis.varying else min(axis.lo, axis.center)
            hi = axis.hi if axis.varying else max(axis.hi, axis.center)
            if value < lo * (1 - rtol) or value > hi * (1 + rtol):
                return False
        return True

    def resized(self, count: int) -> "ConductivityGrid":
        """Копия сетки с другим числом отсчетов на каждой изменяемой оси"""
        return ConductivityGrid([
            replace(axis, count=count) if axis.varying else axis
            for axis in self.axes
        ])

    def __repr__(self) -> str:
        return f"ConductivityGrid(shape={self.shape}, id={self.grid_id})"
