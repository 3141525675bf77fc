"""
Обработчики команд метода опорных точек: select, approx, exact, errmap.
"""
import logging

import numpy as np

from config import Config
from handlers.common import common_parser, float_list, load_basis, load_system, points_from, resolve_grid
from models.basis import GreedyConfig, trace_header, trace_rows
from models.run import RunContext
from services.basis_service import BasisService
from services.bench_service import BenchService
from services.numerics_service import NumericsService
from utils.artifacts import write_csv, write_json
from utils.lfrb import write_matrix
from utils.manifest import as_int

logger = logging.getLogger(__name__)

SELECT_DEFAULTS = {"greedy": GreedyConfig().to_dict()}
APPROX_DEFAULTS = {"use_grid": False, "save_leadfields": True, "exact_timing": True}
ERRMAP_DEFAULTS = {"with_exact": False}


def cmd_select(context: RunContext):
    """
    Обработчик команды select.
    Жадный отбор опорных точек; базис сохраняется в <out>/basis, трасса в trace.csv.
    """
    params = context.params
    system = load_system(context)
    grid = resolve_grid(params, system)
    config = GreedyConfig.from_dict(params.get("greedy") or {})

    with context.phase("select"):
        basis = BasisService.greedy_select(system, grid, config, context.pool)
    with context.phase("write"):
        basis.save(context.out_dir / "basis")
        write_csv(context.artifact("trace.csv"), trace_header(system.n_compartments), trace_rows(basis.trace))
    context.artifacts.append("basis/basis.yaml")

    summary = {
        "n_supports": basis.n_supports,
        "stop": basis.provenance.get("stop", {}).get("reason"),
        "max_error": basis.trace[-1].max_error,
        "grid_id": grid.grid_id,
        "supports": [list(s.as_tuple()) for s in basis.supports]
    }
    write_json(context.artifact("select.json"), summary)
    context.summary.update({"basis": str(context.out_dir / "basis"), **summary})


def cmd_approx(context: RunContext):
    """
    Обработчик команды approx.
    Приближенные поля отведений в заданных точках или по сетке базиса с отчетом о времени.
    """
    params = context.params
    system = load_system(context)
    basis = load_basis(context)
    BasisService.check_compatible(basis, system)
    points = points_from(params)
    if params.get("use_grid") or not points:
        points = list(resolve_grid(params, system, basis).samples)

    rows = []
    with context.phase("approximate"):
        for index, sigma in enumerate(points):
            result = BasisService.approximate(basis, system, sigma)
            if params.get("save_leadfields", True):
                write_matrix(context.artifact(f"leadfields/approx_{index:04d}.lfrb"), result.leadfield)
            rows.append([index, *sigma.as_tuple(), result.alpha.relative_upper_bound,
                         result.alpha.regularized, result.out_of_domain])
    header = ["index"] + [f"sigma_{k}" for k in range(system.n_compartments)]
    header += ["relative_upper_bound", "regularized", "out_of_domain"]
    write_csv(context.artifact("approx.csv"), header, rows)

    with context.phase("timing"):
        repeats = as_int(params.get("repeats", Config.BENCH_REPEATS), "repeats")
        timing = BenchService.time_queries(basis, system, points, repeats,
                                           with_exact=bool(params.get("exact_timing", True)))
    write_json(context.artifact("timing.json"), timing)

    flagged = sum(1 for row in rows if row[-1])
    if flagged:
        logger.warning(f"⚠️ Точек вне области интереса: {flagged}")
    context.summary.update({"points": len(points), "out_of_domain": flagged, **timing})


def cmd_exact(context: RunContext):
    """
    Обработчик команды exact.
    Точные поля отведений через факторизацию матрицы головы.
    """
    params = context.params
    system = load_system(context)
    points = points_from(params)
    if not points:
        points = list(resolve_grid(params, system).samples)

    def solve(sigma):
        factorization = NumericsService.factorize(system, sigma)
        leadfield = system.selection @ factorization.solve(system.assemble_d(sigma))
        return leadfield, factorization.condition

    with context.phase("exact"):
        results = context.pool.map(solve, points, desc="Точные поля")
    rows = []
    for index, (sigma, (leadfield, condition)) in enumerate(zip(points, results)):
        write_matrix(context.artifact(f"leadfields/exact_{index:04d}.lfrb"), leadfield)
        rows.append([index, *sigma.as_tuple(), float(np.linalg.norm(leadfield)), condition])
    header = ["index"] + [f"sigma_{k}" for k in range(system.n_compartments)] + ["frobenius_norm", "condition"]
    write_csv(context.artifact("exact.csv"), header, rows)
    context.summary.update({"points": len(points)})


def cmd_errmap(context: RunContext):
    """
    Обработчик команды errmap.
    Карта оценки ошибки по сетке и, с --with-exact, истинной ошибки.
    """
    params = context.params
    system = load_system(context)
    basis = load_basis(context)
    grid = resolve_grid(params, system, basis)
    with_exact = bool(params.get("with_exact", False))

    with context.phase("sweep"):
        error_map = BasisService.error_sweep(basis, system, grid, with_exact, context.pool)
    error_map.to_csv(context.artifact("errmap.csv"))

    summary = error_map.summary()
    summary["n_supports"] = basis.n_supports
    if with_exact:
        true_errors = error_map.extras["true_error"]
        constants = error_map.extras["bound_constant"]
        summary["max_true_error"] = float(np.nanmax(true_errors)) if error_map.valid.any() else None
        summary["c_max"] = float(np.nanmax(constants)) if error_map.valid.any() else None
    write_json(context.artifact("errmap.json"), summary)
    context.summary.update({k: summary[k] for k in ("max", "n_valid") if k in summary})
    if "max_true_error" in summary:
        context.summary["max_true_error"] = summary["max_true_error"]


def register_basis_handlers(subparsers):
    """Регистрирует команды select, approx, exact и errmap"""
    parents = [common_parser()]

    select = subparsers.add_parser("select", parents=parents, help="жадный отбор опорных точек")
    select.add_argument("--system", help="каталог системы")
    select.add_argument("--grid-count", dest="grid_count", type=int, help="отсчетов на изменяемую ось")
    select.add_argument("--initial", dest="greedy.initial_supports", choices=["corners", "center", "explicit"])
    select.add_argument("--eps-abs", dest="greedy.eps_abs", type=float, help="порог на max Ê")
    select.add_argument("--eps-delta", dest="greedy.eps_delta", type=float, help="порог на изменение max Ê")
    select.add_argument("--max-supports", dest="greedy.max_supports", type=int, help="предел числа опорных точек")
    select.set_defaults(handler=cmd_select, defaults=SELECT_DEFAULTS)

    approx = subparsers.add_parser("approx", parents=parents, help="онлайн-приближение полей отведений")
    approx.add_argument("--system", help="каталог системы")
    approx.add_argument("--basis", help="каталог базиса")
    approx.add_argument("--sigma", type=float_list, action="append", help="точка запроса (можно несколько)")
    approx.add_argument("--grid", dest="use_grid", action="store_const", const=True, help="все отсчеты сетки базиса")
    approx.add_argument("--grid-count", dest="grid_count", type=int)
    approx.add_argument("--repeats", type=int, help="повторов для медианы времени")
    approx.add_argument("--no-exact-timing", dest="exact_timing", action="store_const", const=False)
    approx.add_argument("--no-save", dest="save_leadfields", action="store_const", const=False)
    approx.set_defaults(handler=cmd_approx, defaults=APPROX_DEFAULTS)

    exact = subparsers.add_parser("exact", parents=parents, help="точные поля отведений")
    exact.add_argument("--system", help="каталог системы")
    exact.add_argument("--sigma", type=float_list, action="append", help="точка (можно несколько)")
    exact.add_argument("--grid-count", dest="grid_count", type=int)
    exact.set_defaults(handler=cmd_exact, defaults={})

    errmap = subparsers.add_parser("errmap", parents=parents, help="карта ошибки по сетке")
    errmap.add_argument("--system", help="каталог системы")
    errmap.add_argument("--basis", help="каталог базиса")
    errmap.add_argument("--grid-count", dest="grid_count", type=int)
    errmap.add_argument("--with-exact", dest="with_exact", action="store_const", const=True)
    errmap.set_defaults(handler=cmd_errmap, defaults=ERRMAP_DEFAULTS)
