"""
Обработчик команды просмотра журнала запусков: history.
"""
import logging

from database import registry
from handlers.common import common_parser
from models.run import RunContext, RunRecord
from utils.manifest import as_int

logger = logging.getLogger(__name__)


async def cmd_history(context: RunContext):
    """
    Обработчик команды history.
    Показывает последние запуски из журнала.
    """
    if not registry.enabled:
        logger.warning("Журнал запусков отключен (LFRB_REGISTRY пуст)")
        context.summary["runs"] = []
        return

    limit = as_int(context.params.get("limit", 20), "limit")
    records = await RunRecord.recent(limit)
    if not records:
        logger.info("Журнал запусков пуст")
    context.summary["runs"] = [
        {
            "id": record.id,
            "command": record.command,
            "status": record.status,
            "exit_code": record.exit_code,
            "started_at": record.started_at,
            "total_seconds": record.total_seconds,
            "out_dir": record.out_dir
        }
        for record in records
    ]


def register_history_handlers(subparsers):
    """Регистрирует команду history"""
    history = subparsers.add_parser("history", parents=[common_parser()], help="последние запуски")
    history.add_argument("--limit", type=int, help="число записей")
    history.set_defaults(handler=cmd_history, defaults={"limit": 20}, record=False)
