"""
Общие аргументы и вспомогательные функции обработчиков команд.
"""
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional

from exceptions import ConfigurationError
from models.basis import SupportBasis
from models.conductivity import ConductivityPoint
from models.grid import ConductivityGrid
from models.run import RunContext
from models.system import ParametrizedSystem
from utils.manifest import as_int, require


def float_list(text: str) -> List[float]:
    """Разбирает список чисел через запятую: "1,0.01,1" """
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"ожидался список чисел через запятую: {text!r}") from e


def int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"ожидался список целых через запятую: {text!r}") from e


def common_parser() -> argparse.ArgumentParser:
    """Родительский парсер с аргументами, общими для всех команд"""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="YAML-файл параметров (например, snapshot.yaml прошлого запуска)")
    parser.add_argument("--seed", type=int, help="зерно генератора случайных чисел")
    parser.add_argument("--jobs", type=int, help="число рабочих потоков")
    parser.add_argument("--out", help="каталог результатов")
    parser.add_argument("--log-level", dest="log_level", help="уровень логирования")
    return parser


def load_system(context: RunContext) -> ParametrizedSystem:
    return ParametrizedSystem.load(Path(require(context.params, "system")))


def load_basis(context: RunContext) -> SupportBasis:
    return SupportBasis.load(Path(require(context.params, "basis")))


def points_from(params: Dict[str, Any], key: str = "sigma") -> List[ConductivityPoint]:
    """Список точек проводимости из параметров (одна точка или список)"""
    value = params.get(key)
    if value is None:
        return []
    if not isinstance(value, (list, tuple)):
        raise ConfigurationError("ожидался список проводимостей", field=key)
    if value and not isinstance(value[0], (list, tuple)):
        value = [value]
    return [ConductivityPoint(point) for point in value]


def resolve_grid(
    params: Dict[str, Any],
    system: ParametrizedSystem,
    basis: Optional[SupportBasis] = None
) -> ConductivityGrid:
    """
    Сетка из параметров: явное описание осей, иначе сетка базиса, иначе область системы.
    Параметр grid_count меняет число отсчетов по изменяемым осям.
    """
    if params.get("grid"):
        grid = ConductivityGrid.from_list(params["grid"], field="grid")
    elif basis is not None and basis.domain_grid() is not None:
        grid = basis.domain_grid()
    else:
        grid = system.default_grid()
    if params.get("grid_count"):
        grid = grid.resized(as_int(params["grid_count"], "grid_count"))
    return grid
