"""
Работа с манифестами и конфигурационными файлами в формате YAML.
"""
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from exceptions import ConfigurationError, StorageError

PathLike = Union[str, Path]

_MISSING = object()


def load_yaml(path: PathLike) -> Dict[str, Any]:
    """
    Загружает YAML-документ верхнего уровня (словарь).

    Args:
        path: Путь к файлу

    Returns:
        Словарь с содержимым документа
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            tree = yaml.safe_load(handle)
    except OSError as e:
        raise StorageError(f"Не удалось прочитать {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"некорректный YAML: {e}", field=str(path)) from e

    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ConfigurationError("ожидался словарь на верхнем уровне", field=str(path))
    return tree


def dump_yaml(path: PathLike, tree: Mapping[str, Any]) -> Path:
    """Сохраняет словарь в YAML с сохранением порядка ключей"""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as handle:
            yaml.safe_dump(dict(tree), handle, sort_keys=False, allow_unicode=True)
    except OSError as e:
        raise StorageError(f"Не удалось записать {path}: {e}") from e
    return path


def require(tree: Mapping[str, Any], key: str, prefix: str = "", default: Any = _MISSING) -> Any:
    """
    Извлекает поле из дерева параметров.

    Args:
        tree: Словарь параметров
        key: Имя поля
        prefix: Путь к словарю (для сообщений об ошибках)
        default: Значение по умолчанию; если не задано, поле обязательно

    Returns:
        Значение поля
    """
    field = f"{prefix}.{key}" if prefix else key
    if not isinstance(tree, Mapping):
        raise ConfigurationError("ожидался словарь", field=prefix or None)
    if key not in tree or tree[key] is None:
        if default is _MISSING:
            raise ConfigurationError("обязательное поле отсутствует", field=field)
        return default
    return tree[key]


def as_float(value: Any, field: str) -> float:
    """Приводит значение к float, сообщая путь к полю при ошибке"""
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"ожидалось число, получено {value!r}", field=field) from e


def as_int(value: Any, field: str) -> int:
    """Приводит значение к int, сообщая путь к полю при ошибке"""
    if isinstance(value, bool):
        raise ConfigurationError(f"ожидалось целое число, получено {value!r}", field=field)
    try:
        number = float(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"ожидалось целое число, получено {value!r}", field=field) from e
    if not number.is_integer():
        raise ConfigurationError(f"ожидалось целое число, получено {value!r}", field=field)
    return int(number)


def nest_dotted(flat: Mapping[str, Any]) -> Dict[str, Any]:
    """Превращает ключи вида "greedy.eps_abs" во вложенные словари"""
    tree: Dict[str, Any] = {}
    for key, value in flat.items():
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return tree


def merge_params(*layers: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    """
    Объединяет слои параметров: каждый следующий слой перекрывает предыдущий.
    Вложенные словари объединяются рекурсивно, значения None пропускаются.
    """
    merged: Dict[str, Any] = {}
    for layer in layers:
        if not layer:
            continue
        for key, value in layer.items():
            if value is None:
                continue
            if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
                merged[key] = merge_params(merged[key], value)
            elif isinstance(value, Mapping):
                merged[key] = merge_params(value)
            else:
                merged[key] = value
    return merged
