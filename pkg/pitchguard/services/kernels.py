"""
Ковариационные ядра и матрицы Грама.

Для DTW-ядер расстояния не зависят от gamma, поэтому матрицы попарных
расстояний считаются один раз, а ядро для любой gamma получается как exp(-gamma*D).
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Any, Optional, Sequence

import numpy as np

from pitchguard.core.config import settings
from pitchguard.core.errors import InputKindMismatchError, PitchguardError
from pitchguard.models.exposure import ExposureRecord
from pitchguard.models.kernel import Constant, DtwRbf, ExposureAvg, KernelSpec, Polynomial, Rbf
from pitchguard.services.dtw import dtw_distance
from pitchguard.tasks.parallel import run_parallel

logger = logging.getLogger(__name__)


@dataclass
class GramMatrix:
    entries: np.ndarray

    @cached_property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class PsdProbe:
    psd: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class ExposureDistances:
    """Попарные DTW-расстояния по каналам тренировок и матчей."""

    training: np.ndarray
    match: np.ndarray = field(repr=False)

    def kernel(self, gamma: float) -> np.ndarray:
        return dtw_rbf_from_distances(self.training, gamma) / 2 + dtw_rbf_from_distances(self.match, gamma) / 2


def _vector(value: Any, spec: KernelSpec) -> np.ndarray:
    if isinstance(value, ExposureRecord):
        raise InputKindMismatchError(f"Ядро {spec.kind} ожидает вектор, получена запись нагрузки", kind=spec.kind)
    return np.atleast_1d(np.asarray(value, dtype=float))


def _paired_vectors(spec: KernelSpec, a: Any, b: Any) -> tuple[np.ndarray, np.ndarray]:
    x, y = _vector(a, spec), _vector(b, spec)
    if x.shape != y.shape:
        raise InputKindMismatchError(
            f"Ядро {spec.kind}: размерности входов различаются ({x.shape} и {y.shape})", kind=spec.kind
        )
    return x, y


def dtw_rbf_from_distances(distances: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * np.asarray(distances, dtype=float))


def exposure_kernel(spec: ExposureAvg, a: ExposureRecord, b: ExposureRecord) -> float:
    """Среднее DTW-RBF ядер каналов тренировок и матчей."""
    training = dtw_distance(a.training, b.training).distance
    match = dtw_distance(a.match, b.match).distance
    return float((np.exp(-spec.gamma * training) + np.exp(-spec.gamma * match)) / 2)


def kernel_eval(spec: KernelSpec, a: Any, b: Any) -> float:
    """
    Значение ядра k(a, b).

    Raises:
        InputKindMismatchError: если вид входа не подходит ядру
    """
    if isinstance(spec, Constant):
        return float(spec.c)
    if isinstance(spec, Rbf):
        x, y = _paired_vectors(spec, a, b)
        return float(np.exp(-spec.sigma * np.sum((x - y) ** 2)))
    if isinstance(spec, Polynomial):
        x, y = _paired_vectors(spec, a, b)
        return float((spec.sigma * np.dot(x, y)) ** spec.degree)
    if isinstance(spec, DtwRbf):
        x, y = _vector(a, spec), _vector(b, spec)
        return float(np.exp(-spec.gamma * dtw_distance(x, y).distance))
    if isinstance(spec, ExposureAvg):
        if not isinstance(a, ExposureRecord) or not isinstance(b, ExposureRecord):
            raise InputKindMismatchError("Ядро exposure_avg ожидает записи нагрузки", kind=spec.kind)
        return exposure_kernel(spec, a, b)
    raise InputKindMismatchError(f"Неизвестное ядро: {spec!r}")


def _upper_row(spec: KernelSpec, inputs: Sequence[Any], i: int) -> np.ndarray:
    row = np.empty(len(inputs) - i)
    for offset, j in enumerate(range(i, len(inputs))):
        try:
            row[offset] = kernel_eval(spec, inputs[i], inputs[j])
        except PitchguardError as exc:
            raise type(exc)(f"{exc} (пара {i}, {j})", **{**exc.context, "i": i, "j": j}) from exc
    return row


def _mirror(rows: list[np.ndarray]) -> np.ndarray:
    n = len(rows)
    matrix = np.empty((n, n))
    for i, row in enumerate(rows):
        matrix[i, i:] = row
        matrix[i:, i] = row
    return matrix


def gram(spec: KernelSpec, inputs: Sequence[Any], jobs: Optional[int] = None) -> GramMatrix:
    """
    Матрица Грама K(X, X): считается верхний треугольник, нижний - зеркальная копия,
    поэтому матрица симметрична точно. Строки распределяются по воркерам.
    """
    if len(inputs) == 0:
        raise InputKindMismatchError("Пустой набор входов для матрицы Грама")
    rows = run_parallel(partial(_upper_row, spec, list(inputs)), range(len(inputs)), jobs=jobs)
    return GramMatrix(entries=_mirror(rows))


def cross_gram(spec: KernelSpec, queries: Sequence[Any], inputs: Sequence[Any]) -> np.ndarray:
    """Матрица K(X*, X) размера (len(queries), len(inputs))."""
    return np.array([[kernel_eval(spec, q, x) for x in inputs] for q in queries], dtype=float).reshape(
        len(queries), len(inputs)
    )


def _dtw_row(series: list[np.ndarray], i: int) -> np.ndarray:
    return np.array([dtw_distance(series[i], series[j]).distance for j in range(i, len(series))])


def pairwise_dtw(series: Sequence[Sequence[float]], jobs: Optional[int] = None) -> np.ndarray:
    """Симметричная матрица DTW-расстояний с нулевой диагональю."""
    series = [np.asarray(s, dtype=float) for s in series]
    return _mirror(run_parallel(partial(_dtw_row, series), range(len(series)), jobs=jobs))


def exposure_distances(records: Sequence[ExposureRecord], jobs: Optional[int] = None) -> ExposureDistances:
    logger.info("Расчёт попарных DTW-расстояний для %d записей", len(records))
    return ExposureDistances(
        training=pairwise_dtw([r.training for r in records], jobs=jobs),
        match=pairwise_dtw([r.match for r in records], jobs=jobs),
    )


def psd_probe(g: GramMatrix, tol: Optional[float] = None) -> PsdProbe:
    """Положительная полуопределённость: минимальное собственное значение >= -tol."""
    tol = settings.PSD_TOL if tol is None else tol
    return PsdProbe(psd=g.min_eigenvalue >= -tol, min_eigenvalue=g.min_eigenvalue)


def eigendecompose(g: GramMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Собственные значения (по возрастанию) и векторы симметричной матрицы."""
    return np.linalg.eigh(g.entries)
