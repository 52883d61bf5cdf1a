"""
Dynamic time warping для скалярных рядов разной длины.

Накопленная матрица хранится с виртуальной нулевой строкой и столбцом:
DTW(0,0)=0, DTW(i,0)=DTW(0,j)=inf, поэтому DTW(1,1)=|r_1 - l_1|.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pitchguard.core.errors import EmptySequenceError, InputError, TooLargeError

BRUTEFORCE_LIMIT = 36


@dataclass(frozen=True)
class WarpResult:
    """Расстояние DTW(n, m) и оптимальный путь (пары индексов с 1)."""

    distance: float
    path: list[tuple[int, int]]


def _as_series(values: Sequence[float], name: str) -> np.ndarray:
    series = np.asarray(values, dtype=float).ravel()
    if series.size == 0:
        raise EmptySequenceError(f"Ряд {name} пуст", name=name)
    if not np.all(np.isfinite(series)):
        raise InputError(f"Ряд {name} содержит нечисловые значения", name=name)
    return series


def accumulated_matrix(r: Sequence[float], l: Sequence[float]) -> np.ndarray:
    """
    Накопленная матрица размера (n+1, m+1) с виртуальными границами.

    Клетки одной антидиагонали i + j = k не зависят друг от друга и считаются
    вместе: D[i, j] = |r_i - l_j| + min(D[i-1, j-1], D[i-1, j], D[i, j-1]).
    Матрица accumulated_matrix(l, r) побитово равна транспонированной accumulated_matrix(r, l).
    Элемент [k, m] равен DTW(r[:k], l), элемент [n, k] равен DTW(r, l[:k]).
    """
    r = _as_series(r, "r")
    l = _as_series(l, "l")
    n, m = len(r), len(l)
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    cost = np.abs(r[:, None] - l[None, :])
    for k in range(2, n + m + 1):
        i = np.arange(max(1, k - m), min(n, k - 1) + 1)
        j = k - i
        best = np.minimum(np.minimum(acc[i - 1, j - 1], acc[i - 1, j]), acc[i, j - 1])
        acc[i, j] = cost[i - 1, j - 1] + best
    return acc


def _traceback(acc: np.ndarray) -> list[tuple[int, int]]:
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 1 or j > 1:
        # При равенстве: диагональ, затем (i-1, j), затем (i, j-1)
        step = int(np.argmin((acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])))
        if step == 0:
            i, j = i - 1, j - 1
        elif step == 1:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return path


def dtw_distance(r: Sequence[float], l: Sequence[float]) -> WarpResult:
    """
    Минимальное накопленное расстояние |r_i - l_j| по монотонным путям
    от (1,1) до (n,m) и путь, на котором оно достигается.

    Raises:
        EmptySequenceError: если один из рядов пуст
    """
    acc = accumulated_matrix(r, l)
    return WarpResult(distance=float(acc[-1, -1]), path=_traceback(acc))


def prefix_distances(r: Sequence[float], l: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """
    DTW всех префиксов одного ряда против другого целиком за одну матрицу.

    Returns:
        (DTW(r[:k], l) для k=1..n, DTW(r, l[:k]) для k=1..m)
    """
    acc = accumulated_matrix(r, l)
    return acc[1:, -1].copy(), acc[-1, 1:].copy()


def dtw_bruteforce(r: Sequence[float], l: Sequence[float]) -> float:
    """Перебор всех монотонных путей; только для крошечных рядов (n*m <= 36)."""
    r = _as_series(r, "r")
    l = _as_series(l, "l")
    n, m = len(r), len(l)
    if n * m > BRUTEFORCE_LIMIT:
        raise TooLargeError(f"Перебор путей допустим только при n*m <= {BRUTEFORCE_LIMIT}: {n}x{m}", n=n, m=m)

    best = np.inf
    stack = [(0, 0, abs(r[0] - l[0]))]
    while stack:
        i, j, cost = stack.pop()
        if i == n - 1 and j == m - 1:
            best = min(best, cost)
            continue
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                stack.append((ni, nj, cost + abs(r[ni] - l[nj])))
    return float(best)
