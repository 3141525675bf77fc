"""
Пул рабочих потоков для поточечных расчетов по сетке проводимостей.
NumPy и LAPACK отпускают GIL, поэтому потоков достаточно.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

from config import Config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class WorkerPool:
    """
    Пул потоков с сохранением порядка результатов.
    При jobs == 1 задачи выполняются в вызывающем потоке.
    """

    def __init__(self, jobs: int = 1, show_progress: Optional[bool] = None):
        """
        Инициализирует пул.

        Args:
            jobs: Число рабочих потоков
            show_progress: Показывать ли tqdm (по умолчанию из Config)
        """
        self.jobs = max(1, int(jobs))
        self.show_progress = Config.SHOW_PROGRESS if show_progress is None else show_progress
        self.executor: Optional[ThreadPoolExecutor] = None

    def start(self):
        """Запускает пул"""
        if self.jobs > 1 and self.executor is None:
            self.executor = ThreadPoolExecutor(max_workers=self.jobs)
            logger.debug(f"Пул потоков запущен: {self.jobs}")

    def stop(self):
        """Останавливает пул"""
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None
            logger.debug("Пул потоков остановлен")

    def __enter__(self) -> "WorkerPool":
        self.start()
        return self

    def __exit__(self, *exc_info):
        self.stop()

    def map(self, fn: Callable[[T], R], items: Sequence[T], desc: Optional[str] = None) -> List[R]:
        """
        Применяет функцию ко всем элементам.

        Args:
            fn: Функция одного аргумента
            items: Элементы
            desc: Подпись индикатора прогресса

        Returns:
            Список результатов в порядке элементов
        """
        items = list(items)
        disable = not self.show_progress or len(items) < 2
        with tqdm(total=len(items), desc=desc, disable=disable, leave=False) as bar:
            if self.executor is None:
                results = []
                for item in items:
                    results.append(fn(item))
                    bar.update(1)
                return results

            results = []
            for result in self.executor.map(fn, items):
                results.append(result)
                bar.update(1)
            return results

