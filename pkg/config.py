"""
Конфигурация приложения.
Загружает настройки из переменных окружения.
"""
import logging
import os
from dotenv import load_dotenv

# Загружаем переменные окружения из .env файла
load_dotenv()


class Config:
    """Класс для хранения конфигурации запусков"""

    # Уровень логирования (DEBUG, INFO, WARNING, ERROR)
    LOG_LEVEL: str = os.getenv("LFRB_LOG_LEVEL", "INFO").upper()

    # Часовой пояс для отметок времени в журнале запусков
    TIMEZONE: str = os.getenv("LFRB_TIMEZONE", "UTC")

    # Путь к базе журнала запусков (пустая строка отключает журнал)
    REGISTRY_PATH: str = os.getenv("LFRB_REGISTRY", "runs.db")

    # Число рабочих потоков по умолчанию
    JOBS: int = int(os.getenv("LFRB_JOBS", "1"))

    # Зерно генератора случайных чисел по умолчанию
    SEED: int = int(os.getenv("LFRB_SEED", "0"))

    # Каталог для результатов, если --out не указан
    OUTPUT_DIR: str = os.getenv("LFRB_OUTPUT_DIR", "runs")

    # Показывать ли индикатор прогресса (tqdm)
    SHOW_PROGRESS: bool = os.getenv("LFRB_PROGRESS", "1").strip() not in ("0", "false", "no")

    # Число повторов при замере времени (медиана)
    BENCH_REPEATS: int = int(os.getenv("LFRB_BENCH_REPEATS", "5"))

    @classmethod
    def validate(cls) -> bool:
        """
        Проверяет, что настройки согласованы.
        Возвращает True, если конфигурация валидна.
        """
        if cls.JOBS < 1:
            raise ValueError("LFRB_JOBS должен быть не меньше 1")
        if cls.BENCH_REPEATS < 5:
            raise ValueError("LFRB_BENCH_REPEATS должен быть не меньше 5")
        if not isinstance(logging.getLevelName(cls.LOG_LEVEL), int):
            raise ValueError(f"Неизвестный уровень логирования: {cls.LOG_LEVEL}")
        return True
