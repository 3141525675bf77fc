"""
Обработчики сравнительных экспериментов: compare-poly, bench.
"""
import logging

from config import Config
from handlers.common import common_parser, float_list, int_list, load_system
from models.conductivity import ConductivityPoint
from models.results import COMPARISON_HEADER
from models.run import RunContext
from services.bench_service import BenchService
from services.poly_service import PolyService
from utils.artifacts import write_csv, write_json
from utils.manifest import as_float, as_int

logger = logging.getLogger(__name__)

COMPARE_DEFAULTS = {
    "compartment": 1,
    "lo": 1e-4,
    "hi": 1e-1,
    "n_values": list(range(2, 15)),
    "eval_count": 40,
    "rb_grid_count": 25,
    "sensitivity": False
}
BENCH_DEFAULTS = {"sizes": [12, 16], "n_supports": 10, "grid_count": 5, "query_count": 5}

BENCH_HEADER = ["size", "n_unknowns", "n_supports", "n_points", "online_seconds", "online_max_seconds",
                "exact_seconds", "speedup"]


def cmd_compare_poly(context: RunContext):
    """
    Обработчик команды compare-poly.
    Таблица средней относительной ошибки для метода опорных точек и полиномов.
    """
    params = context.params
    system = load_system(context)
    base = ConductivityPoint(params["base"]) if params.get("base") else None

    with context.phase("compare"):
        rows = PolyService.compare_methods(
            system,
            compartment=as_int(params["compartment"], "compartment"),
            lo=as_float(params["lo"], "lo"),
            hi=as_float(params["hi"], "hi"),
            n_values=[as_int(n, "n_values") for n in params["n_values"]],
            eval_count=as_int(params["eval_count"], "eval_count"),
            rb_grid_count=as_int(params["rb_grid_count"], "rb_grid_count"),
            base=base,
            sensitivity=bool(params.get("sensitivity")),
            pool=context.pool
        )
    write_csv(context.artifact("comparison.csv"), COMPARISON_HEADER, [row.as_row() for row in rows])

    best = {}
    for row in rows:
        best[row.method] = min(best.get(row.method, float("inf")), row.mean_rel_error)
    context.summary.update({"rows": len(rows), "best_mean_rel_error": best})


def cmd_bench(context: RunContext):
    """
    Обработчик команды bench.
    Замер времени онлайн-запроса и точного решения на моделях головы разного размера.
    """
    params = context.params
    repeats = as_int(params.get("repeats", Config.BENCH_REPEATS), "repeats")
    with context.phase("bench"):
        report = BenchService.run(
            sizes=[as_int(size, "sizes") for size in params["sizes"]],
            n_supports=as_int(params["n_supports"], "n_supports"),
            grid_count=as_int(params["grid_count"], "grid_count"),
            repeats=repeats,
            query_count=as_int(params["query_count"], "query_count"),
            pool=context.pool
        )
    write_json(context.artifact("bench.json"), report)
    write_csv(context.artifact("bench.csv"), BENCH_HEADER,
              [[row.get(key) for key in BENCH_HEADER] for row in report["rows"]])
    context.summary.update({"online_ratio": report["online_ratio"], "sizes": len(report["rows"])})


def register_comparison_handlers(subparsers):
    """Регистрирует команды compare-poly и bench"""
    parents = [common_parser()]

    compare = subparsers.add_parser("compare-poly", parents=parents,
                                    help="сравнение с полиномиальной интерполяцией")
    compare.add_argument("--system", help="каталог системы")
    compare.add_argument("--compartment", type=int, help="изменяемый компартмент")
    compare.add_argument("--lo", type=float, help="левая граница отрезка")
    compare.add_argument("--hi", type=float, help="правая граница отрезка")
    compare.add_argument("--n-values", dest="n_values", type=int_list, help="числа n через запятую")
    compare.add_argument("--eval-count", dest="eval_count", type=int, help="число контрольных точек")
    compare.add_argument("--rb-grid-count", dest="rb_grid_count", type=int)
    compare.add_argument("--base", type=float_list, help="значения остальных компартментов")
    compare.add_argument("--sensitivity", action="store_const", const=True, help="добавить вариант poly-log")
    compare.set_defaults(handler=cmd_compare_poly, defaults=COMPARE_DEFAULTS)

    bench = subparsers.add_parser("bench", parents=parents, help="замер времени онлайн-этапа")
    bench.add_argument("--sizes", type=int_list, help="ребра сетки модели через запятую")
    bench.add_argument("--n-supports", dest="n_supports", type=int)
    bench.add_argument("--grid-count", dest="grid_count", type=int)
    bench.add_argument("--repeats", type=int, help="повторов для медианы")
    bench.add_argument("--query-count", dest="query_count", type=int, help="число отсчетов сетки для замера")
    bench.set_defaults(handler=cmd_bench, defaults=BENCH_DEFAULTS)
