"""
Обработчик команды оценки проводимостей: estimate.
"""
import logging
from pathlib import Path

from exceptions import ConfigurationError
from handlers.common import common_parser, load_system, resolve_grid
from models.basis import SupportBasis
from models.run import RunContext
from services.estimation_service import MAP_MODES, EstimationService
from utils.artifacts import write_json
from utils.lfrb import read_matrix
from utils.manifest import require

logger = logging.getLogger(__name__)

ESTIMATE_DEFAULTS = {"mode": "exact", "normalize": False}


def cmd_estimate(context: RunContext):
    """
    Обработчик команды estimate.
    Строит карту R(σ) по сетке и выбирает σ̂ с минимальной невязкой.
    """
    params = context.params
    system = load_system(context)
    data = read_matrix(Path(require(params, "data")))
    if data.shape[0] != system.n_electrodes:
        raise ConfigurationError(
            f"число строк данных {data.shape[0]} не совпадает с числом электродов {system.n_electrodes}",
            field="data"
        )

    mode = params.get("mode", "exact")
    basis = None
    if mode == "approx":
        basis = SupportBasis.load(Path(require(params, "basis")))
    grid = resolve_grid(params, system, basis)

    with context.phase("map"):
        error_map = EstimationService.error_map(
            system, grid, data, mode, basis, bool(params.get("normalize", False)), context.pool
        )
    error_map.to_csv(context.artifact("rmap.csv"))

    with context.phase("estimate"):
        estimate = EstimationService.estimate_conductivity(error_map)
    report = {"mode": mode, "grid_id": grid.grid_id, "map": error_map.summary(), **estimate.to_dict()}
    write_json(context.artifact("estimate.json"), report)

    logger.info(f"✅ σ̂ = {list(estimate.sigma_hat.as_tuple())}, R = {estimate.value:.6g}")
    context.summary.update({
        "sigma_hat": list(estimate.sigma_hat.as_tuple()),
        "r_value": estimate.value,
        "flat": estimate.flat
    })


def register_estimation_handlers(subparsers):
    """Регистрирует команду estimate"""
    estimate = subparsers.add_parser("estimate", parents=[common_parser()], help="оценка проводимостей по данным")
    estimate.add_argument("--system", help="каталог системы")
    estimate.add_argument("--data", help="файл данных .lfrb (N_E×T)")
    estimate.add_argument("--mode", choices=list(MAP_MODES), help="точные или приближенные поля отведений")
    estimate.add_argument("--basis", help="каталог базиса для режима approx")
    estimate.add_argument("--grid-count", dest="grid_count", type=int)
    estimate.add_argument("--normalize", action="store_const", const=True, help="нормировать карту на минимум")
    estimate.set_defaults(handler=cmd_estimate, defaults=ESTIMATE_DEFAULTS)
