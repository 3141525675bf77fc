"""
Обработчики команд построения модели и моделирования измерений: gen, simulate.
"""
import logging

from exceptions import ConfigurationError
from handlers.common import common_parser, float_list, load_system, points_from
from models.run import RunContext
from models.specs import MiniHeadSpec, SynthSpec
from services.generator_service import GeneratorService
from utils.artifacts import write_json
from utils.lfrb import write_matrix
from utils.manifest import as_float, as_int

logger = logging.getLogger(__name__)

GEN_DEFAULTS = {"kind": "mini_head"}
SIMULATE_DEFAULTS = {"source": 0, "amplitude": 1.0, "noise_std": 0.0}


def cmd_gen(context: RunContext):
    """
    Обработчик команды gen.
    Строит систему по спецификации и сохраняет ее в <out>/system.
    """
    params = context.params
    kind = params.get("kind")
    with context.phase("generate"):
        if kind == "mini_head":
            tree = params.get("mini_head") or MiniHeadSpec.default().to_dict()
            spec = MiniHeadSpec.from_dict(tree)
            params["mini_head"] = spec.to_dict()
            system = GeneratorService.build_mini_head(spec)
        elif kind == "synthetic":
            tree = dict(params.get("synthetic") or {})
            tree.setdefault("seed", context.seed)
            spec = SynthSpec.from_dict(tree)
            params["synthetic"] = spec.to_dict()
            system = GeneratorService.build_synthetic(spec)
        else:
            raise ConfigurationError("допустимые значения: mini_head, synthetic", field="kind")

    with context.phase("write"):
        system.save(context.out_dir / "system")
    context.artifacts.append("system/system.yaml")
    context.summary.update({
        "system": str(context.out_dir / "system"),
        "n_unknowns": system.n_unknowns,
        "n_h": system.n_h,
        "n_d": system.n_d,
        "n_electrodes": system.n_electrodes,
        "n_sources": system.n_sources
    })


def cmd_simulate(context: RunContext):
    """
    Обработчик команды simulate.
    Моделирует топографии одного диполя и сохраняет их в data.lfrb (N_E×T).
    """
    params = context.params
    system = load_system(context)
    points = points_from(params)
    if len(points) != 1:
        raise ConfigurationError("нужна ровно одна точка проводимости", field="sigma")
    sigma = points[0]
    source = as_int(params.get("source", 0), "source")
    noise_std = as_float(params.get("noise_std", 0.0), "noise_std")

    with context.phase("simulate"):
        if params.get("amplitudes"):
            amplitudes = [as_float(a, "amplitudes") for a in params["amplitudes"]]
            data = GeneratorService.simulate_series(system, sigma, source, amplitudes, noise_std, context.seed)
        else:
            amplitudes = [as_float(params.get("amplitude", 1.0), "amplitude")]
            data = GeneratorService.simulate_measurement(
                system, sigma, source, amplitudes[0], noise_std, context.seed
            )[:, None]

    write_matrix(context.artifact("data.lfrb"), data)
    write_json(context.artifact("simulation.json"), {
        "sigma": list(sigma.as_tuple()),
        "source": source,
        "amplitudes": amplitudes,
        "noise_std": noise_std,
        "seed": context.seed,
        "shape": list(data.shape)
    })
    context.summary.update({"data": str(context.out_dir / "data.lfrb"), "samples": data.shape[1]})


def register_model_handlers(subparsers):
    """Регистрирует команды gen и simulate"""
    parents = [common_parser()]

    gen = subparsers.add_parser("gen", parents=parents, help="построить параметризованную систему")
    gen.add_argument("--kind", choices=["mini_head", "synthetic"], help="тип генератора")
    gen.add_argument("--spec", help="YAML-файл спецификации генератора")
    gen.set_defaults(handler=cmd_gen, defaults=GEN_DEFAULTS, spec_layer="spec")

    simulate = subparsers.add_parser("simulate", parents=parents, help="смоделировать топографии диполя")
    simulate.add_argument("--system", help="каталог системы")
    simulate.add_argument("--sigma", type=float_list, help="проводимости σ*, через запятую")
    simulate.add_argument("--source", type=int, help="индекс источника")
    simulate.add_argument("--amplitude", type=float, help="амплитуда диполя")
    simulate.add_argument("--amplitudes", type=float_list, help="амплитуды по отсчетам времени")
    simulate.add_argument("--noise-std", dest="noise_std", type=float, help="СКО шума")
    simulate.set_defaults(handler=cmd_simulate, defaults=SIMULATE_DEFAULTS)
