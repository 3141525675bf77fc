"""
Иерархия ошибок приложения.
Каждый класс соответствует своему коду завершения CLI.
"""
from typing import Optional, Sequence


class LeadfieldError(Exception):
    """Базовая ошибка приложения"""

    exit_code: int = 1


class ConfigurationError(LeadfieldError):
    """
    Ошибка конфигурации или входной спецификации.

    Атрибуты:
        field: Путь к полю, в котором найдена ошибка (например, "mini_head.compartment_map")
    """

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class GenerationError(ConfigurationError):
    """Спецификация генератора модели не выполнима (например, несвязная область)"""


class NumericalError(LeadfieldError):
    """
    Численная ошибка (вырожденная или плохо обусловленная матрица).

    Атрибуты:
        sigma: Проводимости, при которых возникла ошибка
    """

    exit_code = 3

    def __init__(self, message: str, sigma: Optional[Sequence[float]] = None):
        self.sigma = tuple(float(s) for s in sigma) if sigma is not None else None
        if self.sigma is not None:
            message = f"{message} (sigma={list(self.sigma)})"
        super().__init__(message)


class EstimationError(NumericalError):
    """Во всей карте ошибок нет ни одного валидного отсчета"""


class StorageError(LeadfieldError):
    """Ошибка чтения или записи файлов (контейнер LFRB, манифесты)"""

    exit_code = 4
