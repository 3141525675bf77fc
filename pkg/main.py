"""
Главный файл для запуска CLI.
Настраивает логирование, разбирает аргументы, открывает журнал запусков
и передает управление обработчику подкоманды.
"""
import argparse
import asyncio
import inspect
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from config import Config
from database import registry
from exceptions import ConfigurationError, LeadfieldError, StorageError
from handlers import (
    register_basis_handlers,
    register_comparison_handlers,
    register_estimation_handlers,
    register_history_handlers,
    register_model_handlers
)
from models.run import RunContext, RunRecord
from utils.artifacts import to_jsonable
from utils.manifest import load_yaml, merge_params, nest_dotted
from utils.workers import WorkerPool

logger = logging.getLogger(__name__)

# Ключи argparse, которые не являются параметрами команды
INTERNAL_KEYS = {"command", "handler", "defaults", "spec_layer", "record", "config", "out", "log_level"}


def setup_logging(level: Optional[str] = None):
    """Настраивает логирование в едином формате"""
    level = (level or Config.LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "INFO"
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        force=True
    )


def build_parser() -> argparse.ArgumentParser:
    """Создает парсер со всеми подкомандами"""
    parser = argparse.ArgumentParser(
        prog="lfrb",
        description="Быстрое приближение полей отведений ЭЭГ методом опорных точек"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Регистрируем обработчики
    register_model_handlers(subparsers)
    register_basis_handlers(subparsers)
    register_estimation_handlers(subparsers)
    register_comparison_handlers(subparsers)
    register_history_handlers(subparsers)
    return parser


def build_params(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Итоговое дерево параметров запуска.
    Порядок слоев: значения команды < окружение < --config < файл спецификации < флаги.
    """
    flags = dict(vars(args))
    spec_key = flags.get("spec_layer")
    layers = [
        args.defaults,
        {"seed": Config.SEED, "jobs": Config.JOBS},
        load_yaml(args.config) if args.config else None
    ]
    if spec_key and flags.get(spec_key):
        layers.append(load_yaml(flags[spec_key]))
    flags = {key: value for key, value in flags.items() if key not in INTERNAL_KEYS and key != spec_key}
    layers.append(nest_dotted(flags))
    return merge_params(*layers)


def print_summary(command: str, summary: Dict[str, Any]):
    """Выводит краткий итог команды в stdout"""
    if not summary:
        return
    print(f"[{command}]")
    for key, value in to_jsonable(summary).items():
        print(f"  {key}: {value}")


async def execute(args: argparse.Namespace) -> int:
    """
    Выполняет подкоманду и возвращает код завершения.
    Снимок параметров и run.json пишутся при любом исходе, если контекст создан.
    """
    record_run = getattr(args, "record", True)
    context: Optional[RunContext] = None
    record = RunRecord(args.command)
    exit_code = 0

    try:
        params = build_params(args)
        out_dir = Path(args.out) if args.out else Path(Config.OUTPUT_DIR) / args.command
        pool = WorkerPool(int(params.get("jobs", Config.JOBS)))
        context = RunContext(args.command, params, out_dir, pool)
        record.seed, record.jobs, record.out_dir = context.seed, context.jobs, str(out_dir)

        logger.info(f"🚀 Команда {args.command}, результаты в {out_dir}")
        with pool:
            if inspect.iscoroutinefunction(args.handler):
                await args.handler(context)
            else:
                await asyncio.to_thread(args.handler, context)
        logger.info(f"✅ Команда {args.command} завершена за {context.timer.total:.2f} с")
        print_summary(args.command, context.summary)
    except LeadfieldError as e:
        exit_code = e.exit_code
        logger.error(f"❌ {type(e).__name__}: {e}")
    except OSError as e:
        exit_code = StorageError.exit_code
        logger.error(f"❌ Ошибка ввода-вывода: {e}")
    except Exception as e:
        exit_code = 1
        logger.exception(f"❌ Непредвиденная ошибка: {e}")

    if context is not None and record_run:
        try:
            record.snapshot = context.params
            context.write_snapshot()
            record.finish(context, exit_code)
            record.write_json(context.artifact("run.json"))
        except OSError as e:
            logger.warning(f"Не удалось записать снимок запуска: {e}")
            exit_code = exit_code or StorageError.exit_code
        if registry.enabled:
            try:
                await record.save()
            except Exception as e:
                logger.warning(f"Не удалось сохранить запуск в журнал: {e}")
    return exit_code


async def main(argv: Optional[List[str]] = None) -> int:
    """
    Главная функция CLI.
    Валидирует конфигурацию, открывает журнал запусков и выполняет подкоманду.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else ConfigurationError.exit_code

    setup_logging(args.log_level)
    # Валидируем конфигурацию
    try:
        Config.validate()
    except ValueError as e:
        logger.error(f"❌ Ошибка конфигурации: {e}")
        return ConfigurationError.exit_code

    if registry.enabled:
        try:
            await registry.init_db()
        except Exception as e:
            logger.warning(f"Журнал запусков недоступен: {e}")
    try:
        return await execute(args)
    finally:
        await registry.close()


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Синхронная обертка над main() для тестов и точки входа"""
    return asyncio.run(main(argv))


if __name__ == "__main__":
    """
    Точка входа в приложение.
    Запускает асинхронную функцию main().
    """
    try:
        sys.exit(run_cli())
    except KeyboardInterrupt:
        logger.info("⏹ Остановлено пользователем")
        sys.exit(130)
