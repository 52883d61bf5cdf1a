"""
Регрессия на гауссовском процессе с нулевым средним и перебор сетки (gamma, epsilon)
с отбрасыванием настроек, дающих отрицательную предсказательную дисперсию.
"""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Optional, Sequence

import numpy as np
from scipy import linalg

from pitchguard.core.config import settings
from pitchguard.core.errors import InputError, NoAcceptedSettingError, SingularSystemError
from pitchguard.models.kernel import KernelSpec
from pitchguard.models.reports import GridRow, GridSearchResult
from pitchguard.services.kernels import ExposureDistances, cross_gram, gram, kernel_eval
from pitchguard.tasks.parallel import run_parallel

logger = logging.getLogger(__name__)

REJECT_NEGATIVE_VARIANCE = "negative_variance"
REJECT_NUMERIC_FAILURE = "numeric_failure"


@dataclass(frozen=True)
class GpFit:
    """
    Обученный ГП: двойственные веса a = (K + eps*I)^-1 f.
    factor - разложение Холецкого, None если система решалась через симметричный solve.
    """

    spec: KernelSpec
    epsilon: float
    inputs: list
    targets: np.ndarray
    weights: np.ndarray
    system: np.ndarray = field(repr=False)
    factor: Optional[tuple] = field(default=None, repr=False)
    log_scale: bool = True

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.factor is not None:
            return linalg.cho_solve(self.factor, rhs)
        return linalg.solve(self.system, rhs, assume_a="sym")


@dataclass(frozen=True)
class PredictiveDistribution:
    mean: float
    variance: float
    day_mean: Optional[float] = None


def _solve_system(system: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, Optional[tuple]]:
    try:
        factor = linalg.cho_factor(system, lower=True)
        return linalg.cho_solve(factor, targets), factor
    except linalg.LinAlgError:
        # Матрица DTW-ядра может быть неположительно определённой
        logger.debug("Разложение Холецкого не удалось, используется симметричный solve")
    try:
        weights = linalg.solve(system, targets, assume_a="sym")
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularSystemError(f"Система K + eps*I вырождена: {e}") from e
    if not np.all(np.isfinite(weights)):
        raise SingularSystemError("Система K + eps*I вырождена: нечисловое решение")
    return weights, None


def gp_fit(
    spec: KernelSpec,
    inputs: Sequence[Any],
    targets: Sequence[float],
    epsilon: float,
    log_scale: bool = True,
    gram_matrix: Optional[np.ndarray] = None,
) -> GpFit:
    """
    Решает (K + eps*I) a = f.

    Args:
        targets: отклик (при log_scale - логарифм дней)
        gram_matrix: готовая матрица K(X, X), если уже посчитана

    Raises:
        SingularSystemError: если система не решается
    """
    targets = np.asarray(targets, dtype=float).ravel()
    if len(inputs) != len(targets) or len(targets) == 0:
        raise InputError(f"Число входов ({len(inputs)}) и целей ({len(targets)}) различается или равно 0")
    if epsilon <= 0:
        raise InputError(f"Шум epsilon должен быть положительным: {epsilon}")
    k = gram(spec, inputs, jobs=1).entries if gram_matrix is None else np.asarray(gram_matrix, dtype=float)
    system = k + epsilon * np.eye(len(targets))
    weights, factor = _solve_system(system, targets)
    return GpFit(
        spec=spec,
        epsilon=epsilon,
        inputs=list(inputs),
        targets=targets,
        weights=weights,
        system=system,
        factor=factor,
        log_scale=log_scale,
    )


def gp_predict(
    fit: GpFit,
    query: Any,
    k_star: Optional[np.ndarray] = None,
    k_self: Optional[float] = None,
) -> PredictiveDistribution:
    """
    mean = K(x*, X) a, variance = k(x*, x*) - K(x*, X) (K + eps*I)^-1 K(X, x*).
    При лог-шкале дополнительно возвращается прогноз в днях exp(mean).
    """
    if k_star is None:
        k_star = cross_gram(fit.spec, [query], fit.inputs)[0]
    if k_self is None:
        k_self = kernel_eval(fit.spec, query, query)
    k_star = np.asarray(k_star, dtype=float)
    mean = float(k_star @ fit.weights)
    variance = float(k_self - k_star @ fit.solve(k_star))
    return PredictiveDistribution(
        mean=mean, variance=variance, day_mean=float(np.exp(mean)) if fit.log_scale else None
    )


@dataclass(frozen=True)
class LooProtocol:
    """
    Leave-one-out по DTW-ядру: для каждого отложенного игрока i ГП обучается
    на остальных, прогноз строится для каждой единицы u (например, глубины усечения a).

    channels: попарные DTW-расстояния по каналам (n x n), ядро - среднее exp(-gamma*D)
    queries: расстояния запросов отложенного игрока до обучающих (n x n x U)
    heldout: индексы отложенных игроков (остальные только обучают)
    """

    channels: tuple[np.ndarray, ...]
    queries: tuple[np.ndarray, ...]
    targets: np.ndarray
    heldout: tuple[int, ...]
    units: tuple[int, ...] = (0,)
    log_scale: bool = True

    @classmethod
    def from_distances(
        cls,
        distances: ExposureDistances,
        targets: Sequence[float],
        heldout: Optional[Sequence[int]] = None,
        log_scale: bool = True,
    ) -> "LooProtocol":
        targets = np.asarray(targets, dtype=float)
        channels = (distances.training, distances.match)
        return cls(
            channels=channels,
            queries=tuple(d[:, :, None] for d in channels),
            targets=targets,
            heldout=tuple(range(len(targets)) if heldout is None else heldout),
            log_scale=log_scale,
        )

    def kernels(self, gamma: float) -> tuple[np.ndarray, np.ndarray]:
        train = sum(np.exp(-gamma * d) for d in self.channels) / len(self.channels)
        query = sum(np.exp(-gamma * d) for d in self.queries) / len(self.queries)
        return train, query

    def truth(self) -> np.ndarray:
        values = self.targets[list(self.heldout)]
        return np.exp(values) if self.log_scale else values


@dataclass(frozen=True)
class GammaEvaluation:
    """Метрики всех (epsilon, единица) для одного gamma, массивы формы (U, E)."""

    mae: np.ndarray
    ccc: np.ndarray
    min_variance: np.ndarray
    failed: np.ndarray


def _ccc_rows(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """CCC по строкам pred (моменты генеральной совокупности), nan если не определён."""
    pred_mean = pred.mean(axis=-1, keepdims=True)
    truth_mean = truth.mean()
    covariance = np.mean((pred - pred_mean) * (truth - truth_mean), axis=-1)
    denominator = pred.var(axis=-1) + truth.var() + (pred_mean[..., 0] - truth_mean) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        result = 2 * covariance / denominator
    constant = (np.ptp(pred, axis=-1) == 0) | (np.ptp(truth) == 0)
    return np.where(constant | ~np.isfinite(result), np.nan, result)


def evaluate_gamma(protocol: LooProtocol, epsilons: np.ndarray, gamma: float) -> GammaEvaluation:
    """
    Все epsilon для одного gamma: ядро каждого фолда раскладывается один раз
    (K_-i = V diag(l) V'), после чего (K_-i + eps*I)^-1 = V diag(1/(l + eps)) V'.
    """
    epsilons = np.asarray(epsilons, dtype=float)
    train, query = protocol.kernels(gamma)
    n, n_units, n_eps = len(protocol.targets), len(protocol.units), len(epsilons)
    heldout = list(protocol.heldout)
    means = np.empty((n_eps, len(heldout), n_units))
    variances = np.empty_like(means)
    singular_eps = np.zeros(n_eps, dtype=bool)

    for h, i in enumerate(heldout):
        rest = np.delete(np.arange(n), i)
        eigenvalues, vectors = np.linalg.eigh(train[np.ix_(rest, rest)])
        shifted = eigenvalues[None, :] + epsilons[:, None]
        scale = max(1.0, float(np.abs(eigenvalues).max()))
        singular = np.any(np.abs(shifted) <= 1e-12 * scale, axis=1)
        singular_eps |= singular
        inverse = 1.0 / np.where(np.abs(shifted) <= 1e-12 * scale, np.nan, shifted)
        projected_targets = vectors.T @ protocol.targets[rest]
        projected_queries = vectors.T @ query[i, rest, :]
        means[:, h, :] = inverse @ (projected_queries * projected_targets[:, None])
        # k(x*, x*) = 1: DTW ряда с самим собой равен 0
        variances[:, h, :] = 1.0 - inverse @ projected_queries**2

    pred = np.exp(means) if protocol.log_scale else means
    truth = protocol.truth()
    # сбой считается отдельно для каждой единицы, форма (U, E)
    failed = singular_eps[None, :] | ~np.isfinite(pred).all(axis=1).T | ~np.isfinite(variances).all(axis=1).T

    # (E, H, U) -> (U, E, H)
    pred = np.transpose(pred, (2, 0, 1))
    with np.errstate(invalid="ignore"):
        mae = np.mean(np.abs(pred - truth), axis=-1)
    return GammaEvaluation(
        mae=mae,
        ccc=_ccc_rows(pred, truth),
        min_variance=np.transpose(variances.min(axis=1), (1, 0)),
        failed=failed,
    )


def _optional(value: float) -> Optional[float]:
    return None if not np.isfinite(value) else float(value)


def _select_best(rows: list[GridRow], unit: Any) -> tuple[int, dict[str, int]]:
    accepted = [idx for idx, row in enumerate(rows) if row.accepted]
    if not accepted:
        raise NoAcceptedSettingError(f"Ни одна настройка (gamma, epsilon) не принята (единица {unit})", unit=unit)
    with_mae = [idx for idx in accepted if rows[idx].metrics.get("mae") is not None]
    with_ccc = [idx for idx in accepted if rows[idx].metrics.get("ccc") is not None]
    by_metric = {}
    if with_mae:
        by_metric["mae"] = min(with_mae, key=lambda idx: rows[idx].metrics["mae"])
    if with_ccc:
        by_metric["ccc"] = min(
            with_ccc, key=lambda idx: (-rows[idx].metrics["ccc"], rows[idx].metrics.get("mae") or np.inf)
        )
    best = by_metric.get("ccc", by_metric.get("mae", accepted[0]))
    return best, by_metric


def grid_search_units(
    protocol: LooProtocol,
    gamma_grid: Sequence[float],
    epsilon_grid: Sequence[float],
    jobs: Optional[int] = None,
    tol: Optional[float] = None,
) -> dict[int, GridSearchResult]:
    """
    Перебор всех пар (gamma, epsilon) для каждой единицы протокола.
    Настройка отвергается, если хотя бы одна LOO-дисперсия < -tol или расчёт не удался.
    Строки идут в порядке сетки (gamma, затем epsilon) независимо от числа воркеров.

    Raises:
        NoAcceptedSettingError: если для единицы не принята ни одна настройка
    """
    gammas = np.asarray(gamma_grid, dtype=float)
    epsilons = np.asarray(epsilon_grid, dtype=float)
    if gammas.size == 0 or epsilons.size == 0:
        raise InputError("Сетки gamma и epsilon должны быть непустыми")
    if len(protocol.targets) < 2 or not protocol.heldout:
        raise InputError("Для leave-one-out нужно не менее двух игроков")
    tol = settings.NEGATIVE_VARIANCE_TOL if tol is None else tol
    logger.info(
        "Перебор сетки: %d gamma x %d epsilon, отложенных игроков %d, единиц %d",
        len(gammas),
        len(epsilons),
        len(protocol.heldout),
        len(protocol.units),
    )
    evaluations = run_parallel(partial(evaluate_gamma, protocol, epsilons), gammas, jobs=jobs)

    results = {}
    for u, unit in enumerate(protocol.units):
        rows = []
        for gamma, evaluation in zip(gammas, evaluations):
            for e, epsilon in enumerate(epsilons):
                min_variance = evaluation.min_variance[u, e]
                if evaluation.failed[u, e]:
                    reason = REJECT_NUMERIC_FAILURE
                elif min_variance < -tol:
                    reason = REJECT_NEGATIVE_VARIANCE
                else:
                    reason = None
                rows.append(
                    GridRow(
                        gamma=float(gamma),
                        epsilon=float(epsilon),
                        metrics={"ccc": _optional(evaluation.ccc[u, e]), "mae": _optional(evaluation.mae[u, e])},
                        accepted=reason is None,
                        reason=reason,
                        min_variance=_optional(min_variance),
                    )
                )
        best, by_metric = _select_best(rows, unit)
        results[unit] = GridSearchResult(rows=rows, best_index=best, best_by_metric=by_metric)
        logger.info(
            "Единица %s: принято %d из %d, лучшая gamma=%g epsilon=%g",
            unit,
            results[unit].accepted_count,
            len(rows),
            rows[best].gamma,
            rows[best].epsilon,
        )
    return results


def grid_search(
    protocol: LooProtocol,
    gamma_grid: Sequence[float],
    epsilon_grid: Sequence[float],
    jobs: Optional[int] = None,
    tol: Optional[float] = None,
) -> GridSearchResult:
    """Перебор сетки для протокола с одной единицей оценки."""
    if len(protocol.units) != 1:
        raise InputError("grid_search ожидает протокол с одной единицей, используйте grid_search_units")
    return grid_search_units(protocol, gamma_grid, epsilon_grid, jobs=jobs, tol=tol)[protocol.units[0]]
