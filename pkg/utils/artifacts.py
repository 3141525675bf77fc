"""
Запись артефактов CSV и JSON.
Вывод побайтно детерминирован при одинаковых входных данных.
"""
import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

from exceptions import StorageError

PathLike = Union[str, Path]


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Записывает таблицу в CSV.

    Args:
        path: Путь к файлу
        header: Имена столбцов
        rows: Строки таблицы

    Returns:
        Путь к файлу
    """
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(value) for value in row])
    except OSError as e:
        raise StorageError(f"Не удалось записать {path}: {e}") from e
    return path


def read_csv(path: PathLike) -> list:
    """Читает CSV как список словарей (для тестов и повторной обработки)"""
    path = Path(path)
    try:
        with open(path, "r", newline="", encoding="utf-8") as handle:
            return list(csv.DictReader(handle))
    except OSError as e:
        raise StorageError(f"Не удалось прочитать {path}: {e}") from e


def to_jsonable(value: Any) -> Any:
    """Приводит numpy-типы к стандартным типам JSON"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) else value
    return value


def write_json(path: PathLike, payload: Any) -> Path:
    """Записывает JSON с отсортированными ключами"""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(to_jsonable(payload), handle, indent=2, sort_keys=True, ensure_ascii=False)
            handle.write("\n")
    except OSError as e:
        raise StorageError(f"Не удалось записать {path}: {e}") from e
    return path
