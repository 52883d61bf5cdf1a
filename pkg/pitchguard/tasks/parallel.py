"""
Распределение независимых задач (строки матрицы Грама, точки сетки, фолды)
по воркерам joblib. Результаты всегда возвращаются в порядке входных элементов,
поэтому вывод не зависит от числа воркеров.
"""
import logging
from typing import Any, Callable, Iterable, Optional

from joblib import Parallel, delayed

from pitchguard.core.config import settings

logger = logging.getLogger(__name__)


def resolve_jobs(jobs: Optional[int] = None) -> int:
    """Число воркеров: явное значение, затем настройка JOBS, иначе все ядра (-1)."""
    if jobs is None:
        jobs = settings.JOBS
    if jobs is None or jobs == 0:
        return -1
    return jobs


def run_parallel(func: Callable[[Any], Any], items: Iterable[Any], jobs: Optional[int] = None) -> list:
    """
    Применяет func к каждому элементу, распределяя работу по воркерам.

    Args:
        func: функция одного аргумента (должна сериализоваться для процессов)
        items: элементы
        jobs: ограничение числа воркеров (1 - выполнить в текущем процессе)

    Returns:
        Список результатов в порядке элементов
    """
    items = list(items)
    n_jobs = resolve_jobs(jobs)
    if n_jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug("Запуск %d задач на %s воркерах", len(items), n_jobs)
    return Parallel(n_jobs=n_jobs)(delayed(func)(item) for item in items)
