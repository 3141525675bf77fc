"""
Параметризованная по проводимостям линейная система
H_σ = Σ γ_i(σ) H̄_i,  D_σ = Σ λ_j(σ) D̄_j,  L(σ) = S H_σ⁻¹ D_σ.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from exceptions import ConfigurationError, StorageError
from models.conductivity import ConductivityPoint, MultiplierSpec
from models.grid import ConductivityGrid, GridAxis
from utils.lfrb import read_matrix, read_vector, write_matrix
from utils.manifest import as_int, dump_yaml, load_yaml, require

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MANIFEST_NAME = "system.yaml"
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class Deflation:
    """
    Одноранговая поправка c·wwᵀ, устраняющая ядро (постоянный вектор) матрицы головы.

    Атрибуты:
        vector: Вектор w длины N_V
        scale: Положительный масштаб c
        component: Индекс соответствующей компоненты H̄ с множителем 1
    """

    vector: np.ndarray
    scale: float
    component: int

    def matrix(self) -> np.ndarray:
        return self.scale * np.outer(self.vector, self.vector)


def _readonly(matrix: np.ndarray) -> np.ndarray:
    array = np.array(matrix, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


class ParametrizedSystem:
    """
    Независимые от проводимости компоненты прямой задачи.

    Атрибуты:
        h_stack: Массив N_H×N_V×N_V компонент H̄_i
        h_multipliers: Множители γ_i
        d_stack: Массив N_D×N_V×N_S компонент D̄_j
        d_multipliers: Множители λ_j
        selection: Матрица выбора электродов S (N_E×N_V)
        deflation: Описание дефляции или None
        domain: Область интереса по умолчанию (оси сетки) или None
        compartment_names: Имена компартментов
        metadata: Дополнительные сведения генератора
    """

    def __init__(
        self,
        h_components: Sequence[Tuple[np.ndarray, MultiplierSpec]],
        d_components: Sequence[Tuple[np.ndarray, MultiplierSpec]],
        selection: np.ndarray,
        n_compartments: int,
        deflation: Optional[Deflation] = None,
        domain: Optional[Sequence[GridAxis]] = None,
        compartment_names: Optional[Sequence[str]] = None,
        metadata: Optional[Dict[str, Any]] = None
    ):
        if not h_components or not d_components:
            raise ConfigurationError("нужна хотя бы одна компонента H̄ и одна компонента D̄")
        self.n_compartments = int(n_compartments)
        self.h_stack = _readonly(np.stack([np.asarray(m, dtype=np.float64) for m, _ in h_components]))
        self.h_multipliers: Tuple[MultiplierSpec, ...] = tuple(spec for _, spec in h_components)
        self.d_stack = _readonly(np.stack([np.asarray(m, dtype=np.float64) for m, _ in d_components]))
        self.d_multipliers: Tuple[MultiplierSpec, ...] = tuple(spec for _, spec in d_components)
        self.selection = _readonly(selection)
        self.deflation = deflation
        self.domain: Optional[Tuple[GridAxis, ...]] = tuple(domain) if domain else None
        self.compartment_names = list(compartment_names or [f"c{i}" for i in range(self.n_compartments)])
        self.metadata = dict(metadata or {})
        self._validate()

    def _validate(self):
        """Проверяет размеры, симметрию компонент и инварианты дефляции"""
        n_v = self.n_unknowns
        if self.h_stack.shape[1:] != (n_v, n_v):
            raise ConfigurationError(f"компоненты H̄ должны быть квадратными, получено {self.h_stack.shape[1:]}")
        if self.d_stack.shape[1] != n_v:
            raise ConfigurationError(f"компоненты D̄ должны иметь {n_v} строк")
        if self.selection.ndim != 2 or self.selection.shape[1] != n_v:
            raise ConfigurationError(f"матрица S должна иметь {n_v} столбцов")
        if len(self.compartment_names) != self.n_compartments:
            raise ConfigurationError("число имен компартментов не совпадает с N_C")

        for i, component in enumerate(self.h_stack):
            scale = max(np.linalg.norm(component), 1.0)
            if np.linalg.norm(component - component.T) > SYMMETRY_RTOL * scale:
                raise ConfigurationError(f"компонента H̄_{i} не симметрична", field=f"h_components[{i}]")

        for name, specs in (("h_components", self.h_multipliers), ("d_components", self.d_multipliers)):
            for i, spec in enumerate(specs):
                if spec.max_compartment() >= self.n_compartments:
                    raise ConfigurationError(
                        f"множитель ссылается на компартмент {spec.max_compartment()} при N_C={self.n_compartments}",
                        field=f"{name}[{i}].multiplier"
                    )

        if self.deflation is not None:
            index = self.deflation.component
            if not 0 <= index < self.n_h:
                raise ConfigurationError("индекс компоненты дефляции вне диапазона", field="deflation.component")
            if self.deflation.scale <= 0:
                raise ConfigurationError("масштаб дефляции должен быть положительным", field="deflation.scale")
            spec = self.h_multipliers[index]
            if not (spec.is_constant and spec.evaluate(ConductivityPoint([1.0] * self.n_compartments)) == 1.0):
                raise ConfigurationError("множитель компоненты дефляции должен быть равен 1", field="deflation")
            expected = self.deflation.matrix()
            if not np.allclose(self.h_stack[index], expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max()):
                raise ConfigurationError("компонента дефляции не равна c·wwᵀ", field="deflation")

        if self.domain is not None:
            ConductivityGrid(self.domain)

    @property
    def n_unknowns(self) -> int:
        return self.h_stack.shape[1]

    @property
    def n_electrodes(self) -> int:
        return self.selection.shape[0]

    @property
    def n_sources(self) -> int:
        return self.d_stack.shape[2]

    @property
    def n_h(self) -> int:
        return self.h_stack.shape[0]

    @property
    def n_d(self) -> int:
        return self.d_stack.shape[0]

    def check_point(self, sigma: ConductivityPoint) -> ConductivityPoint:
        """Проверяет, что σ согласована с числом компартментов системы"""
        if len(sigma) != self.n_compartments:
            raise ConfigurationError(
                f"ожидалось {self.n_compartments} проводимостей, получено {len(sigma)}",
                field="sigma"
            )
        return sigma

    def gamma(self, sigma: ConductivityPoint) -> np.ndarray:
        """Вектор множителей γ(σ) длины N_H"""
        self.check_point(sigma)
        return np.array([spec.evaluate(sigma) for spec in self.h_multipliers])

    def lam(self, sigma: ConductivityPoint) -> np.ndarray:
        """Вектор множителей λ(σ) длины N_D"""
        self.check_point(sigma)
        return np.array([spec.evaluate(sigma) for spec in self.d_multipliers])

    def assemble_h(self, sigma: ConductivityPoint) -> np.ndarray:
        """
        Собирает матрицу головы H_σ = Σ γ_i(σ) H̄_i (вместе с компонентой дефляции).

        Args:
            sigma: Проводимости

        Returns:
            Симметричная матрица N_V×N_V
        """
        return np.tensordot(self.gamma(sigma), self.h_stack, axes=1)

    def assemble_d(self, sigma: ConductivityPoint) -> np.ndarray:
        """Собирает матрицу источников D_σ = Σ λ_j(σ) D̄_j"""
        return np.tensordot(self.lam(sigma), self.d_stack, axes=1)

    def default_grid(self) -> ConductivityGrid:
        """Сетка по области интереса, записанной в системе"""
        if self.domain is None:
            raise ConfigurationError("в системе не задана область интереса, укажите сетку явно", field="grid")
        return ConductivityGrid(self.domain)

    def save(self, directory: PathLike) -> Path:
        """
        Сохраняет систему: манифест system.yaml и файлы LFRB компонент.

        Args:
            directory: Каталог системы (создается при необходимости)

        Returns:
            Путь к манифесту
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        h_entries = []
        for i, (matrix, spec) in enumerate(zip(self.h_stack, self.h_multipliers)):
            name = f"h_{i:02d}.lfrb"
            write_matrix(directory / name, matrix)
            h_entries.append({"file": name, "multiplier": spec.to_list()})

        d_entries = []
        for j, (matrix, spec) in enumerate(zip(self.d_stack, self.d_multipliers)):
            name = f"d_{j:02d}.lfrb"
            write_matrix(directory / name, matrix)
            d_entries.append({"file": name, "multiplier": spec.to_list()})

        write_matrix(directory / "selection.lfrb", self.selection)

        manifest: Dict[str, Any] = {
            "format": "lfrb-system/1",
            "n_unknowns": self.n_unknowns,
            "n_electrodes": self.n_electrodes,
            "n_sources": self.n_sources,
            "n_compartments": self.n_compartments,
            "compartments": self.compartment_names,
            "h_components": h_entries,
            "d_components": d_entries,
            "selection": "selection.lfrb",
        }
        if self.deflation is not None:
            write_matrix(directory / "deflation_w.lfrb", self.deflation.vector)
            manifest["deflation"] = {
                "vector": "deflation_w.lfrb",
                "scale": float(self.deflation.scale),
                "component": self.deflation.component
            }
        if self.domain is not None:
            manifest["domain"] = [axis.to_dict() for axis in self.domain]
        if self.metadata:
            manifest["metadata"] = self.metadata

        path = dump_yaml(directory / MANIFEST_NAME, manifest)
        logger.info(f"Система сохранена: {directory} (N_V={self.n_unknowns}, N_H={self.n_h}, N_D={self.n_d})")
        return path

    @classmethod
    def load(cls, directory: PathLike) -> "ParametrizedSystem":
        """
        Загружает систему из каталога.

        Args:
            directory: Каталог с system.yaml

        Returns:
            Объект ParametrizedSystem
        """
        directory = Path(directory)
        manifest_path = directory / MANIFEST_NAME
        if not manifest_path.exists():
            raise StorageError(f"Манифест системы не найден: {manifest_path}")
        manifest = load_yaml(manifest_path)

        n_compartments = as_int(require(manifest, "n_compartments"), "n_compartments")

        def components(key: str) -> List[Tuple[np.ndarray, MultiplierSpec]]:
            entries = require(manifest, key)
            result = []
            for i, entry in enumerate(entries):
                field = f"{key}[{i}]"
                matrix = read_matrix(directory / require(entry, "file", field))
                spec = MultiplierSpec.from_list(require(entry, "multiplier", field), field=f"{field}.multiplier")
                result.append((matrix, spec))
            return result

        h_components = components("h_components")
        d_components = components("d_components")
        selection = read_matrix(directory / require(manifest, "selection"))

        deflation = None
        if manifest.get("deflation"):
            entry = manifest["deflation"]
            deflation = Deflation(
                vector=read_vector(directory / require(entry, "vector", "deflation")),
                scale=float(require(entry, "scale", "deflation")),
                component=as_int(require(entry, "component", "deflation"), "deflation.component")
            )

        domain = None
        if manifest.get("domain"):
            domain = ConductivityGrid.from_list(manifest["domain"], field="domain").axes

        system = cls(
            h_components=h_components,
            d_components=d_components,
            selection=selection,
            n_compartments=n_compartments,
            deflation=deflation,
            domain=domain,
            compartment_names=manifest.get("compartments"),
            metadata=manifest.get("metadata")
        )
        for key, actual in (("n_unknowns", system.n_unknowns), ("n_electrodes", system.n_electrodes),
                            ("n_sources", system.n_sources)):
            if key in manifest and as_int(manifest[key], key) != actual:
                raise StorageError(f"{manifest_path}: {key}={manifest[key]} не совпадает с файлами ({actual})")
        logger.info(f"Система загружена: {directory}")
        return system
