"""
Спецификации генераторов моделей: вложенная воксельная модель головы
и синтетическая система со структурой множителей BEM.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import ConfigurationError, GenerationError
from models.grid import ConductivityGrid, GridAxis
from utils.manifest import as_float, as_int, require

GAMMA_FAMILIES = ("sigma", "inverse", "pair_sum", "constant")
LAMBDA_FAMILIES = ("one", "sigma")

DEFAULT_NAMES = {3: ["brain", "skull", "scalp"], 2: ["brain", "scalp"], 1: ["head"]}


def cell_depth(shape: Sequence[int]) -> np.ndarray:
    """Расстояние (в ячейках) от каждой ячейки до внешней границы сетки"""
    axes = [np.arange(n) for n in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    depth = None
    for coords, n in zip(grids, shape):
        d = np.minimum(coords, n - 1 - coords)
        depth = d if depth is None else np.minimum(depth, d)
    return depth


def face_pairs(shape: Sequence[int]) -> List[Tuple[np.ndarray, np.ndarray, int]]:
    """Пары соседних по грани ячеек по каждой оси: (индексы a, индексы b, ось)"""
    index = np.arange(int(np.prod(shape))).reshape(shape)
    pairs = []
    for axis in range(len(shape)):
        lo = [slice(None)] * len(shape)
        hi = [slice(None)] * len(shape)
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        pairs.append((index[tuple(lo)].ravel(), index[tuple(hi)].ravel(), axis))
    return pairs


def _spread(count: int, total: int, what: str) -> np.ndarray:
    """Равномерно разнесенные индексы 0..total-1"""
    if count > total:
        raise GenerationError(f"нужно {count} позиций ({what}), доступно только {total}", field=what)
    return np.unique(np.round(np.linspace(0, total - 1, count)).astype(int))


@dataclass
class MiniHeadSpec:
    """
    Воксельная модель головы из вложенных областей.

    Атрибуты:
        grid_shape: Число ячеек (nx, ny, nz)
        compartment_map: Метки областей 1..N_C по ячейкам (1 внутренняя)
        electrode_cells: Индексы ячеек электродов
        source_pairs: Пары соседних ячеек (диполи)
        spacing: Шаг сетки h в метрах
        domain: Область интереса по проводимостям
        names: Имена компартментов
    """

    grid_shape: Tuple[int, int, int]
    compartment_map: np.ndarray
    electrode_cells: List[int]
    source_pairs: List[Tuple[int, int]]
    spacing: float = 0.01
    domain: Optional[List[GridAxis]] = None
    names: Optional[List[str]] = None
    layout: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.grid_shape = tuple(int(n) for n in self.grid_shape)
        self.compartment_map = np.asarray(self.compartment_map, dtype=np.int64).reshape(self.grid_shape)
        self.electrode_cells = [int(c) for c in self.electrode_cells]
        self.source_pairs = [(int(a), int(b)) for a, b in self.source_pairs]
        if self.names is None:
            self.names = DEFAULT_NAMES.get(self.n_compartments, [f"region_{k + 1}" for k in range(self.n_compartments)])

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.grid_shape))

    @property
    def n_compartments(self) -> int:
        return int(self.compartment_map.max())

    def validate(self):
        """Проверяет инварианты спецификации (связность проверяет генератор)"""
        if len(self.grid_shape) != 3 or min(self.grid_shape) < 1:
            raise GenerationError("ожидалась трехмерная сетка", field="mini_head.grid_shape")
        if self.spacing <= 0:
            raise GenerationError("шаг сетки должен быть положительным", field="mini_head.spacing")
        labels = self.compartment_map.ravel()
        if labels.min() < 1:
            raise GenerationError("метки областей должны быть 1..N_C", field="mini_head.compartment_map")
        present = set(np.unique(labels).tolist())
        missing = sorted(set(range(1, self.n_compartments + 1)) - present)
        if missing:
            raise GenerationError(f"пустые области: {missing}", field="mini_head.compartment_map")
        if len(self.names) != self.n_compartments:
            raise GenerationError("число имен не совпадает с числом областей", field="mini_head.names")

        if not self.electrode_cells:
            raise GenerationError("нужен хотя бы один электрод", field="mini_head.electrode_cells")
        depth = cell_depth(self.grid_shape).ravel()
        outer = self.n_compartments
        for cell in self.electrode_cells:
            if not 0 <= cell < self.n_cells or labels[cell] != outer or depth[cell] != 0:
                raise GenerationError(
                    f"ячейка {cell} не лежит на границе внешней области",
                    field="mini_head.electrode_cells"
                )

        if not self.source_pairs:
            raise GenerationError("нужен хотя бы один источник", field="mini_head.source_pairs")
        for a, b in self.source_pairs:
            if not (0 <= a < self.n_cells and 0 <= b < self.n_cells):
                raise GenerationError(f"пара ({a}, {b}) вне сетки", field="mini_head.source_pairs")
            if labels[a] != 1 or labels[b] != 1:
                raise GenerationError(f"пара ({a}, {b}) вне внутренней области", field="mini_head.source_pairs")
            ca = np.array(np.unravel_index(a, self.grid_shape))
            cb = np.array(np.unravel_index(b, self.grid_shape))
            if np.abs(ca - cb).sum() != 1:
                raise GenerationError(f"ячейки пары ({a}, {b}) не соседние по грани", field="mini_head.source_pairs")
        if self.domain is not None:
            ConductivityGrid(self.domain)

    def domain_grid(self) -> ConductivityGrid:
        if self.domain is None:
            return ConductivityGrid([GridAxis(k, 1.0, 1.0) for k in range(self.n_compartments)])
        return ConductivityGrid(self.domain)

    @classmethod
    def nested_boxes(
        cls,
        shape: Sequence[int] = (16, 16, 16),
        n_regions: int = 3,
        shell: int = 2,
        n_electrodes: int = 32,
        n_sources: int = 128,
        spacing: float = 0.01,
        domain: Optional[List[GridAxis]] = None
    ) -> "MiniHeadSpec":
        """
        Вложенные коробки: внешние слои толщиной shell ячеек, внутренняя область (мозг) в центре.
        Электроды разнесены по верхней половине внешней поверхности, источники по всем глубинам мозга.
        """
        shape = tuple(int(n) for n in shape)
        if n_regions < 1 or shell < 1:
            raise GenerationError("нужна хотя бы одна область и толщина слоя >= 1", field="mini_head.nested_boxes")
        depth = cell_depth(shape)
        labels = np.clip(n_regions - depth // shell, 1, n_regions)
        flat_labels = labels.ravel()
        flat_depth = depth.ravel()

        z = np.unravel_index(np.arange(flat_labels.size), shape)[2]
        cap = np.flatnonzero((flat_depth == 0) & (flat_labels == n_regions) & (z >= shape[2] // 2))
        electrodes = cap[_spread(n_electrodes, cap.size, "mini_head.n_electrodes")]

        candidates = []
        for a, b, _ in face_pairs(shape):
            inside = (flat_labels[a] == 1) & (flat_labels[b] == 1)
            for pa, pb in zip(a[inside], b[inside]):
                candidates.append((int(min(flat_depth[pa], flat_depth[pb])), int(pa), int(pb)))
        candidates.sort()
        chosen = _spread(n_sources, len(candidates), "mini_head.n_sources")
        sources = [(candidates[k][1], candidates[k][2]) for k in chosen]

        return cls(
            grid_shape=shape,
            compartment_map=labels,
            electrode_cells=electrodes.tolist(),
            source_pairs=sources,
            spacing=spacing,
            domain=domain,
            layout={"nested_boxes": {"n_regions": n_regions, "shell": shell,
                                     "n_electrodes": n_electrodes, "n_sources": n_sources}}
        )

    @staticmethod
    def default_domain() -> List[GridAxis]:
        """Мозг [0.5, 2] линейно, череп [1e-4, 1e-1] логарифмически, скальп 1; 15×15 отсчетов"""
        return [
            GridAxis(0, 0.5, 2.0, 15, "linear"),
            GridAxis(1, 1e-4, 1e-1, 15, "log"),
            GridAxis(2, 1.0, 1.0)
        ]

    @classmethod
    def default(cls) -> "MiniHeadSpec":
        """Модель по умолчанию: 16³ ячеек, мозг/череп/скальп, 32 электрода, 128 диполей"""
        return cls.nested_boxes(domain=cls.default_domain())

    @classmethod
    def from_dict(cls, tree: Dict[str, Any], prefix: str = "mini_head") -> "MiniHeadSpec":
        """
        Читает спецификацию из дерева параметров.
        Разметка задается явно (compartment_map, electrode_cells, source_pairs)
        или секцией nested_boxes.
        """
        if not isinstance(tree, dict):
            raise ConfigurationError("ожидался словарь", field=prefix)
        shape = tuple(as_int(n, f"{prefix}.grid_shape") for n in require(tree, "grid_shape", prefix, [16, 16, 16]))
        spacing = as_float(tree.get("spacing", 0.01), f"{prefix}.spacing")
        domain = None
        if tree.get("domain"):
            domain = list(ConductivityGrid.from_list(tree["domain"], field=f"{prefix}.domain").axes)

        if "nested_boxes" in tree:
            boxes = tree.get("nested_boxes") or {}
            spec = cls.nested_boxes(
                shape=shape,
                n_regions=as_int(boxes.get("n_regions", 3), f"{prefix}.nested_boxes.n_regions"),
                shell=as_int(boxes.get("shell", 2), f"{prefix}.nested_boxes.shell"),
                n_electrodes=as_int(boxes.get("n_electrodes", 32), f"{prefix}.nested_boxes.n_electrodes"),
                n_sources=as_int(boxes.get("n_sources", 128), f"{prefix}.nested_boxes.n_sources"),
                spacing=spacing,
                domain=domain
            )
        else:
            labels = require(tree, "compartment_map", prefix)
            spec = cls(
                grid_shape=shape,
                compartment_map=np.asarray(labels),
                electrode_cells=require(tree, "electrode_cells", prefix),
                source_pairs=[tuple(p) for p in require(tree, "source_pairs", prefix)],
                spacing=spacing,
                domain=domain
            )
            if spec.compartment_map.size != int(np.prod(shape)):
                raise ConfigurationError("размер не совпадает с grid_shape", field=f"{prefix}.compartment_map")
        if tree.get("names"):
            spec.names = [str(n) for n in tree["names"]]
        return spec

    def to_dict(self) -> Dict[str, Any]:
        tree: Dict[str, Any] = {"grid_shape": list(self.grid_shape), "spacing": self.spacing}
        if self.layout.get("nested_boxes"):
            tree["nested_boxes"] = dict(self.layout["nested_boxes"])
        else:
            tree["compartment_map"] = self.compartment_map.ravel().tolist()
            tree["electrode_cells"] = list(self.electrode_cells)
            tree["source_pairs"] = [list(p) for p in self.source_pairs]
        tree["names"] = list(self.names)
        if self.domain is not None:
            tree["domain"] = [axis.to_dict() for axis in self.domain]
        return tree


@dataclass
class SynthSpec:
    """
    Синтетическая система со случайными положительно определенными компонентами.

    Атрибуты:
        n_unknowns: N_V
        n_compartments: N_C
        n_electrodes: N_E
        n_sources: N_S
        gamma_family: Семейства множителей γ из GAMMA_FAMILIES
        lambda_family: Семейства множителей λ из LAMBDA_FAMILIES
        seed: Зерно генератора
        conditioning_floor: Добавка к диагонали (делится на N_H)
        domain: Область интереса
    """

    n_unknowns: int = 64
    n_compartments: int = 2
    n_electrodes: int = 8
    n_sources: int = 12
    gamma_family: List[str] = field(default_factory=lambda: ["sigma"])
    lambda_family: List[str] = field(default_factory=lambda: ["one"])
    seed: int = 0
    conditioning_floor: float = 1.0
    domain: Optional[List[GridAxis]] = None

    def validate(self):
        for name in ("n_unknowns", "n_compartments", "n_electrodes", "n_sources"):
            if getattr(self, name) < 1:
                raise GenerationError("значение должно быть положительным", field=f"synthetic.{name}")
        if self.n_electrodes > self.n_unknowns:
            raise GenerationError("электродов больше, чем неизвестных", field="synthetic.n_electrodes")
        if not self.gamma_family or any(f not in GAMMA_FAMILIES for f in self.gamma_family):
            raise GenerationError(f"допустимые семейства: {GAMMA_FAMILIES}", field="synthetic.gamma_family")
        if not self.lambda_family or any(f not in LAMBDA_FAMILIES for f in self.lambda_family):
            raise GenerationError(f"допустимые семейства: {LAMBDA_FAMILIES}", field="synthetic.lambda_family")
        if "pair_sum" in self.gamma_family and self.n_compartments < 2:
            raise GenerationError("pair_sum требует хотя бы двух компартментов", field="synthetic.gamma_family")
        if self.conditioning_floor <= 0:
            raise GenerationError("должно быть положительным", field="synthetic.conditioning_floor")
        if self.domain is not None:
            ConductivityGrid(self.domain)

    def domain_axes(self) -> List[GridAxis]:
        if self.domain is not None:
            return list(self.domain)
        return [GridAxis(k, 0.5, 2.0, 5, "linear") for k in range(self.n_compartments)]

    @classmethod
    def from_dict(cls, tree: Dict[str, Any], prefix: str = "synthetic") -> "SynthSpec":
        if not isinstance(tree, dict):
            raise ConfigurationError("ожидался словарь", field=prefix)
        domain = None
        if tree.get("domain"):
            domain = list(ConductivityGrid.from_list(tree["domain"], field=f"{prefix}.domain").axes)
        return cls(
            n_unknowns=as_int(tree.get("n_unknowns", 64), f"{prefix}.n_unknowns"),
            n_compartments=as_int(tree.get("n_compartments", 2), f"{prefix}.n_compartments"),
            n_electrodes=as_int(tree.get("n_electrodes", 8), f"{prefix}.n_electrodes"),
            n_sources=as_int(tree.get("n_sources", 12), f"{prefix}.n_sources"),
            gamma_family=[str(f) for f in tree.get("gamma_family", ["sigma"])],
            lambda_family=[str(f) for f in tree.get("lambda_family", ["one"])],
            seed=as_int(tree.get("seed", 0), f"{prefix}.seed"),
            conditioning_floor=as_float(tree.get("conditioning_floor", 1.0), f"{prefix}.conditioning_floor"),
            domain=domain
        )

    def to_dict(self) -> Dict[str, Any]:
        tree: Dict[str, Any] = {
            "n_unknowns": self.n_unknowns,
            "n_compartments": self.n_compartments,
            "n_electrodes": self.n_electrodes,
            "n_sources": self.n_sources,
            "gamma_family": list(self.gamma_family),
            "lambda_family": list(self.lambda_family),
            "seed": self.seed,
            "conditioning_floor": self.conditioning_floor
        }
        if self.domain is not None:
            tree["domain"] = [axis.to_dict() for axis in self.domain]
        return tree
