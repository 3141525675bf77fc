"""
Контейнер матриц LFRB.
Формат: магия "LFRB", число строк и столбцов (uint32, little-endian),
затем rows*cols значений float64 по строкам.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from exceptions import StorageError

MAGIC = b"LFRB"
HEADER = struct.Struct("<4sII")

PathLike = Union[str, Path]


def write_matrix(path: PathLike, matrix: np.ndarray) -> Path:
    """
    Записывает матрицу (или вектор как столбец n×1) в файл LFRB.

    Args:
        path: Путь к файлу
        matrix: Двумерный массив или вектор

    Returns:
        Путь к записанному файлу
    """
    array = np.asarray(matrix, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2:
        raise StorageError(f"LFRB хранит только матрицы, получено измерений: {array.ndim}")
    rows, cols = array.shape
    path = Path(path)
    try:
        with open(path, "wb") as handle:
            handle.write(HEADER.pack(MAGIC, rows, cols))
            handle.write(np.ascontiguousarray(array, dtype="<f8").tobytes())
    except OSError as e:
        raise StorageError(f"Не удалось записать {path}: {e}") from e
    return path


def read_matrix(path: PathLike) -> np.ndarray:
    """
    Читает матрицу из файла LFRB.

    Args:
        path: Путь к файлу

    Returns:
        Массив float64 формы (rows, cols), доступный только для чтения
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise StorageError(f"Не удалось прочитать {path}: {e}") from e

    if len(payload) < HEADER.size:
        raise StorageError(f"{path}: файл короче заголовка")
    magic, rows, cols = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise StorageError(f"{path}: неверная сигнатура {magic!r}")
    expected = HEADER.size + rows * cols * 8
    if len(payload) != expected:
        raise StorageError(f"{path}: ожидалось {expected} байт, найдено {len(payload)}")

    matrix = np.frombuffer(payload, dtype="<f8", offset=HEADER.size).reshape(rows, cols)
    matrix = matrix.astype(np.float64)
    matrix.setflags(write=False)
    return matrix


def read_vector(path: PathLike) -> np.ndarray:
    """Читает вектор, сохраненный как столбец n×1"""
    matrix = read_matrix(path)
    if matrix.shape[1] != 1:
        raise StorageError(f"{path}: ожидался столбец, найдена матрица {matrix.shape}")
    return matrix[:, 0]
