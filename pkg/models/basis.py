"""
Типы метода опорных точек: строки S·H⁻¹, данные Грама, решение для α,
базис опорных точек и настройки жадного отбора.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from exceptions import ConfigurationError, StorageError
from models.conductivity import ConductivityPoint
from models.grid import ConductivityGrid
from utils.artifacts import read_csv, write_csv
from utils.lfrb import read_matrix, read_vector, write_matrix
from utils.manifest import as_float, as_int, dump_yaml, load_yaml, require

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MANIFEST_NAME = "basis.yaml"
INITIAL_MODES = ("corners", "center", "explicit")


class ReducedRows:
    """
    Строки R_i = S·H_{σ_i}⁻¹ для одной опорной точки.

    Атрибуты:
        matrix: Матрица N_E×N_V (только для чтения)
        sigma: Опорная точка σ_i
        residual: Относительная невязка ‖R_i·H_{σ_i} − S‖_F / ‖S‖_F
        blocks: Кэш произведений R_i·H̄_j (N_H×N_E×N_V), заполняется при сборке Грама
    """

    def __init__(self, matrix: np.ndarray, sigma: ConductivityPoint, residual: float = float("nan")):
        array = np.array(matrix, dtype=np.float64, copy=True)
        array.setflags(write=False)
        self.matrix = array
        self.sigma = sigma
        self.residual = float(residual)
        self.blocks: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return f"ReducedRows(sigma={list(self.sigma.as_tuple())}, shape={self.matrix.shape})"


class OrthoFactor:
    """
    Разложение K = Q·R, накапливаемое по опорным точкам.
    Строки Q и остаток (I − QQᵀ)vec(S) хранятся только в памяти офлайн-этапа.

    Атрибуты:
        r_factor: Матрица R размера r×(n·N_H), блочно верхнетреугольная
        projection: Вектор c = Qᵀvec(S) длины r
        residuals: ‖(I − QQᵀ)vec(S)‖ после каждой опорной точки
        ranks: Число строк Q после каждой опорной точки
        vectors: Строки Q (r×N_E·N_V) или None
        remainder: Остаток (I − QQᵀ)vec(S) или None
    """

    def __init__(
        self,
        r_factor: np.ndarray,
        projection: np.ndarray,
        residuals: Sequence[float],
        ranks: Sequence[int],
        vectors: Optional[np.ndarray] = None,
        remainder: Optional[np.ndarray] = None
    ):
        r_factor = np.array(r_factor, dtype=np.float64, copy=True)
        projection = np.array(projection, dtype=np.float64, copy=True)
        if r_factor.ndim != 2 or r_factor.shape[0] != projection.size:
            raise ConfigurationError(f"форма R {r_factor.shape} не согласована с длиной проекции {projection.size}")
        r_factor.setflags(write=False)
        projection.setflags(write=False)
        self.r_factor = r_factor
        self.projection = projection
        self.residuals: List[float] = [float(value) for value in residuals]
        self.ranks: List[int] = [int(value) for value in ranks]
        if len(self.residuals) != len(self.ranks):
            raise ConfigurationError("длины residuals и ranks разложения не совпадают")
        if self.ranks and self.ranks[-1] != projection.size:
            raise ConfigurationError(f"ранг разложения {self.ranks[-1]} не равен длине проекции {projection.size}")
        self.vectors = vectors
        self.remainder = remainder

    @classmethod
    def empty(cls, selection_flat: np.ndarray) -> "OrthoFactor":
        remainder = np.array(selection_flat, dtype=np.float64, copy=True)
        return cls(np.zeros((0, 0)), np.zeros(0), [], [], np.zeros((0, remainder.size)), remainder)

    @property
    def rank(self) -> int:
        return self.projection.size

    @property
    def residual(self) -> float:
        """Расстояние от vec(S) до span(K); до первой опорной точки не определено"""
        return self.residuals[-1] if self.residuals else float("nan")

    @property
    def extendable(self) -> bool:
        return self.vectors is not None and self.remainder is not None

    def truncated(self, n: int, n_h: int) -> "OrthoFactor":
        """Разложение для первых n опорных точек (без векторов Q)"""
        r = self.ranks[n - 1] if n > 0 else 0
        return OrthoFactor(self.r_factor[:r, :n * n_h], self.projection[:r], self.residuals[:n], self.ranks[:n])


class GramData:
    """
    Данные Грама KᵀK и Kᵀvec(S). Столбец (i, j) имеет индекс i·N_H + j.

    Атрибуты:
        gram: Симметричная матрица (n·N_H)×(n·N_H)
        rhs: Вектор длины n·N_H
        s_norm_sq: ‖S‖_F²
        n_h: Число компонент H̄
        factor: Разложение K = Q·R (None, если известен только Грам)
    """

    def __init__(self, gram: np.ndarray, rhs: np.ndarray, s_norm_sq: float, n_h: int,
                 factor: Optional[OrthoFactor] = None):
        gram = np.array(gram, dtype=np.float64, copy=True).reshape(len(rhs), len(rhs))
        rhs = np.array(rhs, dtype=np.float64, copy=True)
        if gram.shape[0] % n_h:
            raise ConfigurationError(f"размер Грама {gram.shape[0]} не кратен N_H={n_h}")
        if factor is not None and factor.r_factor.shape[1] != rhs.size:
            raise ConfigurationError(f"разложение задано для {factor.r_factor.shape[1]} столбцов, в Граме {rhs.size}")
        gram.setflags(write=False)
        rhs.setflags(write=False)
        self.gram = gram
        self.rhs = rhs
        self.s_norm_sq = float(s_norm_sq)
        self.n_h = int(n_h)
        self.factor = factor

    @classmethod
    def empty(cls, n_h: int, s_norm_sq: float) -> "GramData":
        return cls(np.zeros((0, 0)), np.zeros(0), s_norm_sq, n_h)

    @property
    def n_supports(self) -> int:
        return self.rhs.size // self.n_h

    @staticmethod
    def column(i: int, j: int, n_h: int) -> int:
        """Индекс столбца K для пары (опорная точка i, компонента j)"""
        return i * n_h + j

    def truncated(self, n: int) -> "GramData":
        """Данные Грама для первых n опорных точек (ведущий блок)"""
        m = n * self.n_h
        factor = self.factor.truncated(n, self.n_h) if self.factor is not None else None
        return GramData(self.gram[:m, :m], self.rhs[:m], self.s_norm_sq, self.n_h, factor)


@dataclass(frozen=True)
class AlphaSolution:
    """
    Оптимальные коэффициенты α* и верхняя оценка ошибки.

    Атрибуты:
        alpha: Вектор α* длины n
        upper_bound: E_n (ненормированная)
        relative_upper_bound: E_n / ‖S‖_F
        regularized: Решение получено со спектральной отсечкой
    """

    alpha: np.ndarray
    upper_bound: float
    relative_upper_bound: float
    regularized: bool = False


@dataclass(frozen=True)
class GreedyConfig:
    """
    Настройки жадного отбора опорных точек.

    Атрибуты:
        initial_supports: "corners", "center" или "explicit"
        explicit: Явный список начальных точек (для "explicit")
        eps_abs: Порог на максимум нормированной оценки Ê*_n (0 отключает)
        eps_delta: Порог на |Ê*_n − Ê*_{n−1}| (0 отключает)
        max_supports: Максимальное число опорных точек
        tie_break: Правило выбора при равенстве (только "lowest-index")
    """

    initial_supports: str = "corners"
    explicit: Tuple[ConductivityPoint, ...] = ()
    eps_abs: float = 1e-6
    eps_delta: float = 0.0
    max_supports: int = 30
    tie_break: str = "lowest-index"

    def __post_init__(self):
        if self.initial_supports not in INITIAL_MODES:
            raise ConfigurationError(f"допустимые значения: {INITIAL_MODES}", field="greedy.initial_supports")
        if self.initial_supports == "explicit" and not self.explicit:
            raise ConfigurationError("для режима explicit нужен список точек", field="greedy.explicit")
        if self.eps_abs < 0 or self.eps_delta < 0:
            raise ConfigurationError("пороги останова не могут быть отрицательными", field="greedy.stop")
        if self.max_supports < 1:
            raise ConfigurationError("max_supports должен быть положительным", field="greedy.max_supports")
        if self.tie_break != "lowest-index":
            raise ConfigurationError("поддерживается только lowest-index", field="greedy.tie_break")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "initial_supports": self.initial_supports,
            "explicit": [list(p.as_tuple()) for p in self.explicit],
            "eps_abs": self.eps_abs,
            "eps_delta": self.eps_delta,
            "max_supports": self.max_supports,
            "tie_break": self.tie_break
        }

    @classmethod
    def from_dict(cls, tree: Dict[str, Any], prefix: str = "greedy") -> "GreedyConfig":
        if not isinstance(tree, dict):
            raise ConfigurationError("ожидался словарь", field=prefix)
        explicit = tuple(ConductivityPoint(p) for p in tree.get("explicit") or ())
        return cls(
            initial_supports=str(tree.get("initial_supports", "explicit" if explicit else "corners")),
            explicit=explicit,
            eps_abs=as_float(tree.get("eps_abs", 1e-6), f"{prefix}.eps_abs"),
            eps_delta=as_float(tree.get("eps_delta", 0.0), f"{prefix}.eps_delta"),
            max_supports=as_int(tree.get("max_supports", 30), f"{prefix}.max_supports"),
            tie_break=str(tree.get("tie_break", "lowest-index"))
        )


@dataclass(frozen=True)
class TraceEntry:
    """Одна итерация жадного отбора"""

    iteration: int
    n_supports: int
    max_error: float
    argmax_index: int
    argmax_sigma: Tuple[float, ...]
    regularized: int = 0


TRACE_HEADER_BASE = ["iteration", "n_supports", "max_error", "argmax_index", "regularized"]


def trace_header(n_compartments: int) -> List[str]:
    return TRACE_HEADER_BASE + [f"sigma_{k}" for k in range(n_compartments)]


def trace_rows(trace: Sequence[TraceEntry]) -> List[list]:
    return [
        [e.iteration, e.n_supports, e.max_error, e.argmax_index, e.regularized, *e.argmax_sigma]
        for e in trace
    ]


class SupportBasis:
    """
    Базис опорных точек с предвычисленными матрицами.

    Атрибуты:
        supports: Опорные точки (попарно различные)
        reduced: Строки S·H⁻¹ для каждой опорной точки
        gram: Данные Грама
        lbar: Массив n×N_D×N_E×N_S матриц L̄_ij = S H_{σ_i}⁻¹ D̄_j
        provenance: Сетка, критерий останова, трасса
    """

    def __init__(
        self,
        supports: Sequence[ConductivityPoint],
        reduced: Sequence[ReducedRows],
        gram: GramData,
        lbar: np.ndarray,
        provenance: Optional[Dict[str, Any]] = None,
        trace: Sequence[TraceEntry] = ()
    ):
        if len(set(supports)) != len(supports):
            raise ConfigurationError("опорные точки должны быть попарно различны")
        if not (len(supports) == len(reduced) == gram.n_supports == len(lbar)):
            raise ConfigurationError("число опорных точек не согласовано между частями базиса")
        lbar = np.array(lbar, dtype=np.float64, copy=True)
        lbar.setflags(write=False)
        self.supports: List[ConductivityPoint] = list(supports)
        self.reduced: List[ReducedRows] = list(reduced)
        self.gram = gram
        self.lbar = lbar
        self.provenance: Dict[str, Any] = dict(provenance or {})
        self.trace: List[TraceEntry] = list(trace)

    @classmethod
    def empty(cls, n_h: int, s_norm_sq: float, lbar_shape: Tuple[int, int, int],
              provenance: Optional[Dict[str, Any]] = None) -> "SupportBasis":
        return cls([], [], GramData.empty(n_h, s_norm_sq), np.zeros((0,) + tuple(lbar_shape)), provenance)

    @property
    def n_supports(self) -> int:
        return len(self.supports)

    def extended(self, rows: ReducedRows, gram: GramData, lbar_block: np.ndarray) -> "SupportBasis":
        """Новый базис с добавленной опорной точкой"""
        return SupportBasis(
            self.supports + [rows.sigma],
            self.reduced + [rows],
            gram,
            np.concatenate([self.lbar, lbar_block[None]], axis=0),
            self.provenance,
            self.trace
        )

    def with_trace(self, trace: Sequence[TraceEntry], **provenance: Any) -> "SupportBasis":
        merged = dict(self.provenance)
        merged.update(provenance)
        return SupportBasis(self.supports, self.reduced, self.gram, self.lbar, merged, trace)

    def truncated(self, n: int) -> "SupportBasis":
        """Вложенный базис из первых n опорных точек"""
        if not 1 <= n <= self.n_supports:
            raise ConfigurationError(f"n должно быть в диапазоне 1..{self.n_supports}", field="n")
        trace = [entry for entry in self.trace if entry.n_supports <= n]
        provenance = dict(self.provenance)
        provenance["truncated_from"] = self.n_supports
        return SupportBasis(self.supports[:n], self.reduced[:n], self.gram.truncated(n),
                            self.lbar[:n], provenance, trace)

    def domain_grid(self) -> Optional[ConductivityGrid]:
        """Сетка, на которой отбирались опорные точки (если записана)"""
        axes = self.provenance.get("grid")
        return ConductivityGrid.from_list(axes, field="provenance.grid") if axes else None

    def save(self, directory: PathLike) -> Path:
        """
        Сохраняет базис: манифест, файлы LFRB и трассу trace.csv.
        Каждая опорная точка хранится в своих файлах reduced_XXX и lbar_XXX_YY.

        Args:
            directory: Каталог базиса

        Returns:
            Путь к манифесту
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        n_d = self.lbar.shape[1]

        support_entries = []
        for i, rows in enumerate(self.reduced):
            reduced_name = f"reduced_{i:03d}.lfrb"
            write_matrix(directory / reduced_name, rows.matrix)
            lbar_names = []
            for j in range(n_d):
                name = f"lbar_{i:03d}_{j:02d}.lfrb"
                write_matrix(directory / name, self.lbar[i, j])
                lbar_names.append(name)
            support_entries.append({
                "sigma": list(rows.sigma.as_tuple()),
                "reduced": reduced_name,
                "lbar": lbar_names,
                "residual": rows.residual
            })

        written = {entry["reduced"] for entry in support_entries}
        written.update(name for entry in support_entries for name in entry["lbar"])
        for stale in list(directory.glob("reduced_*.lfrb")) + list(directory.glob("lbar_*.lfrb")):
            if stale.name not in written:
                stale.unlink()

        write_matrix(directory / "gram.lfrb", self.gram.gram)
        write_matrix(directory / "rhs.lfrb", self.gram.rhs)
        factor = self.gram.factor
        if factor is not None:
            write_matrix(directory / "factor.lfrb", factor.r_factor)
            write_matrix(directory / "projection.lfrb", factor.projection)
        else:
            for stale in ("factor.lfrb", "projection.lfrb"):
                (directory / stale).unlink(missing_ok=True)

        manifest = {
            "format": "lfrb-basis/1",
            "n_supports": self.n_supports,
            "n_h": self.gram.n_h,
            "n_d": n_d,
            "n_electrodes": int(self.lbar.shape[2]),
            "n_sources": int(self.lbar.shape[3]),
            "column_order": "(i, j) -> i * n_h + j",
            "s_norm_sq": self.gram.s_norm_sq,
            "gram": "gram.lfrb",
            "rhs": "rhs.lfrb",
            "factor": None if factor is None else {
                "r_factor": "factor.lfrb",
                "projection": "projection.lfrb",
                "ranks": factor.ranks,
                "residuals": factor.residuals
            },
            "supports": support_entries,
            "provenance": self.provenance,
            "trace": "trace.csv"
        }
        n_compartments = len(self.supports[0]) if self.supports else 0
        write_csv(directory / "trace.csv", trace_header(n_compartments), trace_rows(self.trace))
        path = dump_yaml(directory / MANIFEST_NAME, manifest)
        logger.info(f"Базис сохранен: {directory} (n={self.n_supports})")
        return path

    @classmethod
    def load(cls, directory: PathLike) -> "SupportBasis":
        """
        Загружает базис из каталога.

        Args:
            directory: Каталог с basis.yaml

        Returns:
            Объект SupportBasis
        """
        directory = Path(directory)
        manifest_path = directory / MANIFEST_NAME
        if not manifest_path.exists():
            raise StorageError(f"Манифест базиса не найден: {manifest_path}")
        manifest = load_yaml(manifest_path)

        n_h = as_int(require(manifest, "n_h"), "n_h")
        n_d = as_int(require(manifest, "n_d"), "n_d")
        n_e = as_int(require(manifest, "n_electrodes"), "n_electrodes")
        n_s = as_int(require(manifest, "n_sources"), "n_sources")

        supports, reduced, lbar = [], [], []
        for i, entry in enumerate(require(manifest, "supports")):
            field_name = f"supports[{i}]"
            sigma = ConductivityPoint(require(entry, "sigma", field_name))
            matrix = read_matrix(directory / require(entry, "reduced", field_name))
            reduced.append(ReducedRows(matrix, sigma, float(entry.get("residual", float("nan")))))
            supports.append(sigma)
            names = require(entry, "lbar", field_name)
            if len(names) != n_d:
                raise StorageError(f"{manifest_path}: у опорной точки {i} ожидалось {n_d} матриц L̄")
            lbar.append(np.stack([read_matrix(directory / name) for name in names]))

        factor = None
        factor_entry = manifest.get("factor")
        if factor_entry:
            factor = OrthoFactor(
                read_matrix(directory / require(factor_entry, "r_factor", "factor")),
                read_vector(directory / require(factor_entry, "projection", "factor")),
                [as_float(value, "factor.residuals") for value in require(factor_entry, "residuals", "factor")],
                [as_int(value, "factor.ranks") for value in require(factor_entry, "ranks", "factor")]
            )

        gram = GramData(
            read_matrix(directory / require(manifest, "gram")),
            read_vector(directory / require(manifest, "rhs")),
            as_float(require(manifest, "s_norm_sq"), "s_norm_sq"),
            n_h,
            factor
        )
        lbar_array = np.stack(lbar) if lbar else np.zeros((0, n_d, n_e, n_s))

        trace = []
        trace_path = directory / str(manifest.get("trace", "trace.csv"))
        if trace_path.exists():
            for row in read_csv(trace_path):
                sigma_keys = sorted((k for k in row if k.startswith("sigma_")), key=lambda k: int(k[6:]))
                trace.append(TraceEntry(
                    iteration=int(row["iteration"]),
                    n_supports=int(row["n_supports"]),
                    max_error=float(row["max_error"]),
                    argmax_index=int(row["argmax_index"]),
                    argmax_sigma=tuple(float(row[k]) for k in sigma_keys),
                    regularized=int(row["regularized"])
                ))

        basis = cls(supports, reduced, gram, lbar_array, manifest.get("provenance") or {}, trace)
        logger.info(f"Базис загружен: {directory} (n={basis.n_supports})")
        return basis
