"""
Замеры времени: фазы запуска и медианные повторы для бенчмарка.
"""
import statistics
import time
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List


class PhaseTimer:
    """
    Накопитель длительностей фаз запуска (в секундах).
    Повторный вход в фазу суммирует время.
    """

    def __init__(self):
        self.phases: Dict[str, float] = {}

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        """Контекст замера одной фазы"""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + time.perf_counter() - start

    @property
    def total(self) -> float:
        return sum(self.phases.values())


def median_time(fn: Callable[[], object], repeats: int = 5, warmup: int = 1) -> float:
    """
    Медиана времени выполнения функции по нескольким повторам (с прогревом).

    Args:
        fn: Функция без аргументов
        repeats: Число замеров
        warmup: Число прогревочных вызовов

    Returns:
        Медианное время в секундах
    """
    for _ in range(warmup):
        fn()
    samples: List[float] = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)
