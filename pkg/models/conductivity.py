"""
Проводимости и множители разложения.
Представляют точку в пространстве проводимостей и скалярные функции γ(σ), λ(σ).
"""
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import ConfigurationError


class ConductivityPoint:
    """
    Точка в пространстве проводимостей (См/м), по одному значению на компартмент.

    Атрибуты:
        values: Вектор проводимостей (только для чтения)
    """

    def __init__(self, values: Iterable[float]):
        array = np.array([float(v) for v in values], dtype=np.float64)
        if array.ndim != 1 or array.size == 0:
            raise ConfigurationError("проводимость должна быть непустым вектором")
        if not np.all(np.isfinite(array)) or np.any(array <= 0.0):
            raise ConfigurationError(f"проводимости должны быть положительными: {array.tolist()}")
        array.setflags(write=False)
        self._values = array

    @property
    def values(self) -> np.ndarray:
        return self._values

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(float(v) for v in self._values)

    def __len__(self) -> int:
        return self._values.size

    def __iter__(self) -> Iterator[float]:
        return iter(self.as_tuple())

    def __getitem__(self, index: int) -> float:
        return float(self._values[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConductivityPoint):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def __repr__(self) -> str:
        return f"ConductivityPoint({list(self.as_tuple())})"

    def with_value(self, compartment: int, value: float) -> "ConductivityPoint":
        """Возвращает копию с замененной проводимостью одного компартмента"""
        values = list(self.as_tuple())
        values[compartment] = value
        return ConductivityPoint(values)


@dataclass(frozen=True)
class MultiplierTerm:
    """
    Одночлен coefficient·σ_compartment^power.
    power == 0 или compartment is None означает постоянный член.
    """

    coefficient: float
    compartment: Optional[int] = None
    power: int = 1

    def __post_init__(self):
        if self.power not in (-1, 0, 1):
            raise ConfigurationError(f"степень множителя должна быть -1, 0 или 1, получено {self.power}")

    @property
    def is_constant(self) -> bool:
        return self.compartment is None or self.power == 0

    def evaluate(self, values: np.ndarray) -> float:
        if self.is_constant:
            return self.coefficient
        if not 0 <= self.compartment < values.size:
            raise ConfigurationError(
                f"индекс компартмента {self.compartment} вне диапазона 0..{values.size - 1}"
            )
        sigma = values[self.compartment]
        return self.coefficient * (sigma if self.power == 1 else 1.0 / sigma)

    def to_dict(self) -> Dict[str, Any]:
        return {"coefficient": self.coefficient, "compartment": self.compartment, "power": self.power}


class MultiplierSpec:
    """
    Множитель γ_i(σ) или λ_j(σ): сумма одночленов со степенями -1, 0, +1.

    Атрибуты:
        terms: Список одночленов
    """

    def __init__(self, terms: Sequence[MultiplierTerm]):
        if not terms:
            raise ConfigurationError("множитель должен содержать хотя бы один член")
        self.terms: Tuple[MultiplierTerm, ...] = tuple(terms)

    @classmethod
    def constant(cls, value: float = 1.0) -> "MultiplierSpec":
        return cls([MultiplierTerm(value, None, 0)])

    @classmethod
    def sigma(cls, compartment: int, coefficient: float = 1.0) -> "MultiplierSpec":
        return cls([MultiplierTerm(coefficient, compartment, 1)])

    @classmethod
    def inverse(cls, compartment: int, coefficient: float = 1.0) -> "MultiplierSpec":
        return cls([MultiplierTerm(coefficient, compartment, -1)])

    @classmethod
    def pair_sum(cls, first: int, second: int, power: int = 1) -> "MultiplierSpec":
        return cls([MultiplierTerm(1.0, first, power), MultiplierTerm(1.0, second, power)])

    def evaluate(self, sigma: ConductivityPoint) -> float:
        """
        Вычисляет множитель в точке σ.

        Args:
            sigma: Проводимости

        Returns:
            Σ coefficient·σ^power
        """
        values = sigma.values
        total = 0.0
        for term in self.terms:
            total += term.evaluate(values)
        return total

    @property
    def is_constant(self) -> bool:
        return all(term.is_constant for term in self.terms)

    def max_compartment(self) -> int:
        """Наибольший использованный индекс компартмента (-1, если множитель постоянный)"""
        indices = [t.compartment for t in self.terms if not t.is_constant]
        return max(indices) if indices else -1

    def to_list(self) -> List[Dict[str, Any]]:
        return [term.to_dict() for term in self.terms]

    @classmethod
    def from_list(cls, items: Sequence[Dict[str, Any]], field: str = "multiplier") -> "MultiplierSpec":
        """Восстанавливает множитель из манифеста"""
        if not isinstance(items, (list, tuple)) or not items:
            raise ConfigurationError("ожидался непустой список членов", field=field)
        terms = []
        for index, item in enumerate(items):
            try:
                compartment = item.get("compartment")
                terms.append(MultiplierTerm(
                    coefficient=float(item.get("coefficient", 1.0)),
                    compartment=None if compartment is None else int(compartment),
                    power=int(item.get("power", 1))
                ))
            except (AttributeError, TypeError, ValueError) as e:
                raise ConfigurationError(f"некорректный член множителя: {item!r}", field=f"{field}[{index}]") from e
        return cls(terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiplierSpec):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self) -> str:
        parts = []
        for term in self.terms:
            if term.is_constant:
                parts.append(f"{term.coefficient:g}")
            else:
                suffix = "" if term.power == 1 else "^-1"
                parts.append(f"{term.coefficient:g}*s{term.compartment}{suffix}")
        return " + ".join(parts)
