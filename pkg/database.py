"""
Журнал запусков команд lfrb в SQLite (aiosqlite).
"""
import logging
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import aiosqlite

from config import Config

logger = logging.getLogger(__name__)

RUN_COLUMNS = (
    "command", "status", "exit_code", "seed", "jobs", "out_dir", "snapshot",
    "started_at", "finished_at", "total_seconds"
)

SCHEMA = (
    """
    CREATE TABLE IF NOT EXISTS runs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        command TEXT NOT NULL,
        status TEXT NOT NULL,
        exit_code INTEGER NOT NULL,
        seed INTEGER,
        jobs INTEGER,
        out_dir TEXT,
        snapshot TEXT,
        started_at TEXT NOT NULL,
        finished_at TEXT,
        total_seconds REAL
    )
    """,
    """
    CREATE TABLE IF NOT EXISTS run_phases (
        run_id INTEGER NOT NULL REFERENCES runs(id) ON DELETE CASCADE,
        phase TEXT NOT NULL,
        seconds REAL NOT NULL
    )
    """,
    """
    CREATE TABLE IF NOT EXISTS run_artifacts (
        run_id INTEGER NOT NULL REFERENCES runs(id) ON DELETE CASCADE,
        path TEXT NOT NULL
    )
    """,
)


class RunRegistry:
    """
    Журнал запусков: одно соединение на процесс (Singleton).
    Путь к базе берется из Config.REGISTRY_PATH; пустая строка отключает журнал.
    """
    _instance: Optional['RunRegistry'] = None
    _connection: Optional[aiosqlite.Connection] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    @property
    def enabled(self) -> bool:
        return bool(Config.REGISTRY_PATH)

    async def connect(self) -> aiosqlite.Connection:
        if self._connection is None:
            self._connection = await aiosqlite.connect(Config.REGISTRY_PATH)
            self._connection.row_factory = aiosqlite.Row
            await self._connection.execute("PRAGMA foreign_keys = ON")
            for statement in SCHEMA:
                await self._connection.execute(statement)
            await self._connection.commit()
            logger.debug(f"Журнал запусков открыт: {Config.REGISTRY_PATH}")
        return self._connection

    async def close(self):
        if self._connection is not None:
            await self._connection.close()
            self._connection = None

    async def init_db(self):
        """Создает таблицы журнала, если их нет"""
        await self.connect()

    async def record_run(
        self,
        run: Mapping[str, Any],
        phases: Mapping[str, float],
        artifacts: Iterable[str]
    ) -> int:
        """
        Записывает запуск, его фазы и файлы одной транзакцией.

        Args:
            run: Значения колонок таблицы runs (ключи из RUN_COLUMNS)
            phases: Длительности фаз в секундах
            artifacts: Пути записанных файлов

        Returns:
            ID записи в таблице runs
        """
        connection = await self.connect()
        placeholders = ", ".join("?" for _ in RUN_COLUMNS)
        cursor = await connection.execute(
            f"INSERT INTO runs ({', '.join(RUN_COLUMNS)}) VALUES ({placeholders})",
            tuple(run.get(column) for column in RUN_COLUMNS)
        )
        run_id = cursor.lastrowid
        phase_rows: List[Tuple[int, str, float]] = [(run_id, name, seconds) for name, seconds in phases.items()]
        await connection.executemany("INSERT INTO run_phases (run_id, phase, seconds) VALUES (?, ?, ?)", phase_rows)
        await connection.executemany(
            "INSERT INTO run_artifacts (run_id, path) VALUES (?, ?)",
            [(run_id, path) for path in artifacts]
        )
        await connection.commit()
        return run_id

    async def recent_runs(self, limit: int = 20) -> List[Dict[str, Any]]:
        """Последние запуски, сначала новые"""
        connection = await self.connect()
        async with connection.execute(
            f"SELECT id, {', '.join(c for c in RUN_COLUMNS if c != 'snapshot')} FROM runs ORDER BY id DESC LIMIT ?",
            (limit,)
        ) as cursor:
            return [dict(row) for row in await cursor.fetchall()]


# Глобальный экземпляр журнала
registry = RunRegistry()
