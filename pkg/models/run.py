"""
Модели запуска команды: контекст выполнения и запись в журнале запусков.
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import pytz
import yaml

from config import Config
from database import registry
from utils.artifacts import write_json
from utils.manifest import dump_yaml
from utils.timing import PhaseTimer
from utils.workers import WorkerPool

logger = logging.getLogger(__name__)


def now_iso() -> str:
    """Текущее время в часовом поясе из конфигурации (ISO 8601)"""
    return datetime.now(pytz.timezone(Config.TIMEZONE)).isoformat()


class RunContext:
    """
    Контекст выполнения одной команды.

    Атрибуты:
        command: Имя подкоманды
        params: Итоговое дерево параметров (снимок запуска)
        out_dir: Каталог результатов
        pool: Пул потоков
        timer: Замер фаз
        artifacts: Записанные файлы (относительно out_dir)
        summary: Краткий итог для вывода в консоль
    """

    def __init__(self, command: str, params: Dict[str, Any], out_dir: Path, pool: WorkerPool):
        self.command = command
        self.params = params
        self.out_dir = Path(out_dir)
        self.pool = pool
        self.timer = PhaseTimer()
        self.artifacts: List[str] = []
        self.summary: Dict[str, Any] = {}

    @property
    def seed(self) -> int:
        return int(self.params.get("seed", Config.SEED))

    @property
    def jobs(self) -> int:
        return int(self.params.get("jobs", Config.JOBS))

    def phase(self, name: str):
        return self.timer.phase(name)

    def artifact(self, name: str) -> Path:
        """Регистрирует файл результата и возвращает его путь"""
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.artifacts:
            self.artifacts.append(name)
        return path

    def write_snapshot(self) -> Path:
        """Сохраняет снимок параметров; его можно передать обратно через --config"""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return dump_yaml(self.artifact("snapshot.yaml"), self.params)


class RunRecord:
    """
    Запись о запуске в журнале.

    Атрибуты:
        id: Идентификатор в журнале
        command: Имя подкоманды
        status: "ok" или "failed"
        exit_code: Код завершения
        seed: Зерно
        jobs: Число потоков
        out_dir: Каталог результатов
        snapshot: Параметры запуска
        started_at: Время начала
        finished_at: Время окончания
        phases: Длительности фаз
        artifacts: Записанные файлы
    """

    def __init__(
        self,
        command: str,
        status: str = "running",
        exit_code: int = 0,
        seed: Optional[int] = None,
        jobs: Optional[int] = None,
        out_dir: Optional[str] = None,
        snapshot: Optional[Dict[str, Any]] = None,
        started_at: Optional[str] = None,
        finished_at: Optional[str] = None,
        phases: Optional[Dict[str, float]] = None,
        artifacts: Optional[List[str]] = None,
        total_seconds: Optional[float] = None,
        run_id: Optional[int] = None
    ):
        self.id = run_id
        self.command = command
        self.status = status
        self.exit_code = exit_code
        self.seed = seed
        self.jobs = jobs
        self.out_dir = out_dir
        self.snapshot = snapshot or {}
        self.started_at = started_at or now_iso()
        self.finished_at = finished_at
        self.phases = dict(phases or {})
        self.artifacts = list(artifacts or [])
        self.total_seconds = total_seconds

    def finish(self, context: Optional[RunContext], exit_code: int):
        """Фиксирует результат запуска"""
        self.exit_code = exit_code
        self.status = "ok" if exit_code == 0 else "failed"
        self.finished_at = now_iso()
        if context is not None:
            self.phases = dict(context.timer.phases)
            self.artifacts = list(context.artifacts)
            self.total_seconds = context.timer.total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "status": self.status,
            "exit_code": self.exit_code,
            "seed": self.seed,
            "jobs": self.jobs,
            "out_dir": self.out_dir,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "phases": self.phases,
            "total_seconds": self.total_seconds,
            "artifacts": self.artifacts
        }

    def write_json(self, path: Path) -> Path:
        return write_json(path, self.to_dict())

    async def save(self) -> int:
        """
        Сохраняет запуск в журнал вместе с фазами и файлами.

        Returns:
            ID записи
        """
        run = self.to_dict()
        run["snapshot"] = yaml.safe_dump(self.snapshot, sort_keys=False)
        self.id = await registry.record_run(run, self.phases, self.artifacts)
        return self.id

    @classmethod
    async def recent(cls, limit: int = 20) -> List["RunRecord"]:
        """
        Последние запуски (сначала новые).

        Args:
            limit: Число записей

        Returns:
            Список объектов RunRecord
        """
        rows = await registry.recent_runs(limit)
        return [cls(run_id=row.pop("id"), **row) for row in rows]
