"""
Supervised PCA для бинарной классификации недель (травма / нет):
стандартизация, одномерный отбор признаков по |beta| >= alpha,
разложение ковариационной матрицы, логистическая регрессия на m компонентах.
"""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np
import pandas as pd

from pitchguard.core.config import settings
from pitchguard.core.errors import (
    AllColumnsDegenerateError,
    InputError,
    MissingFeatureError,
    NumericalFailureError,
    RankDeficientError,
    TooFewSurvivorsError,
)
from pitchguard.models.gps import WeeklyFrame
from pitchguard.services.glm import GlmFit, ridge_logistic_fit
from pitchguard.services.metrics import rank_sum_test
from pitchguard.tasks.parallel import run_parallel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Standardized:
    matrix: np.ndarray
    names: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray

    def destandardize(self) -> np.ndarray:
        return self.matrix * self.sds + self.means


@dataclass(frozen=True)
class PcaModel:
    """Строки loadings - собственные векторы, eigenvalues по убыванию."""

    loadings: np.ndarray
    eigenvalues: np.ndarray
    names: tuple[str, ...]

    def explained_variance(self) -> np.ndarray:
        total = np.sum(np.clip(self.eigenvalues, 0, None))
        return np.clip(self.eigenvalues, 0, None) / total if total > 0 else np.zeros_like(self.eigenvalues)

    def scores(self, matrix: np.ndarray, m: Optional[int] = None) -> np.ndarray:
        components = self.loadings if m is None else self.loadings[:m]
        return matrix @ components.T


@dataclass(frozen=True)
class SpcaClassifier:
    alpha: float
    m: int
    pca: PcaModel
    means: np.ndarray
    sds: np.ndarray
    logistic: GlmFit = field(repr=False)


def _feature_table(frame: WeeklyFrame | pd.DataFrame) -> pd.DataFrame:
    return frame.features() if isinstance(frame, WeeklyFrame) else frame


def standardize(frame: WeeklyFrame | pd.DataFrame) -> Standardized:
    """
    Центрирование и нормировка на стандартное отклонение генеральной совокупности.
    Столбцы с нулевой дисперсией отбрасываются с предупреждением.
    """
    table = _feature_table(frame)
    values = table.to_numpy(dtype=float)
    means = values.mean(axis=0)
    sds = values.std(axis=0)
    keep = sds > 0
    for name in table.columns[~keep]:
        logger.warning("Признак %s с нулевой дисперсией отброшен", name)
    if not keep.any():
        raise AllColumnsDegenerateError("Все признаки имеют нулевую дисперсию")
    return Standardized(
        matrix=(values[:, keep] - means[keep]) / sds[keep],
        names=tuple(table.columns[keep]),
        means=means[keep],
        sds=sds[keep],
    )


def _univariate_beta(matrix: np.ndarray, y: np.ndarray, j: int) -> float:
    design = np.column_stack([np.ones(len(y)), matrix[:, j]])
    fit = ridge_logistic_fit(design, y, 0.0)
    if not fit.converged:
        logger.info("Признак %d: логистическая регрессия не сошлась, ridge lambda=%g", j, settings.RIDGE_FALLBACK)
        fit = ridge_logistic_fit(design, y, settings.RIDGE_FALLBACK)
    return float(fit.coefficients[1])


def _check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) != {0.0, 1.0}:
        raise InputError("Метка должна содержать оба класса 0 и 1")
    return y


def univariate_coefficients(matrix: np.ndarray, y, jobs: Optional[int] = None) -> np.ndarray:
    """|beta| одномерной логистической регрессии (свободный член + признак) для каждого признака."""
    y = _check_labels(y)
    betas = run_parallel(partial(_univariate_beta, matrix, y), range(matrix.shape[1]), jobs=jobs)
    return np.abs(np.array(betas, dtype=float))


def univariate_filter(matrix: np.ndarray, y, alpha: float, jobs: Optional[int] = None) -> np.ndarray:
    """Индексы признаков с |beta| >= alpha (alpha=0 оставляет все)."""
    return np.flatnonzero(univariate_coefficients(matrix, y, jobs=jobs) >= alpha)


def pca_fit(matrix: np.ndarray, names: Optional[tuple[str, ...]] = None) -> PcaModel:
    """
    Разложение Sigma = X'X / n. Компоненты по убыванию собственных значений,
    знак компоненты выбирается так, чтобы наибольшая по модулю нагрузка была положительной.
    """
    matrix = np.asarray(matrix, dtype=float)
    n, p = matrix.shape
    if n < 2:
        raise NumericalFailureError("Для PCA нужно не менее двух наблюдений")
    centered = matrix - matrix.mean(axis=0)
    covariance = centered.T @ centered / n
    try:
        eigenvalues, vectors = np.linalg.eigh(covariance)
    except np.linalg.LinAlgError as e:
        raise NumericalFailureError(f"Разложение ковариационной матрицы не сошлось: {e}") from e
    order = np.argsort(eigenvalues)[::-1]
    loadings = vectors[:, order].T
    lead = np.argmax(np.abs(loadings), axis=1)
    signs = np.sign(loadings[np.arange(p), lead])
    loadings = loadings * np.where(signs == 0, 1.0, signs)[:, None]
    return PcaModel(
        loadings=loadings,
        eigenvalues=eigenvalues[order],
        names=tuple(names) if names is not None else tuple(f"x{j}" for j in range(p)),
    )


def fit_components(pca: PcaModel, standardized: Standardized, y: np.ndarray, alpha: float, m: int) -> SpcaClassifier:
    """Логистическая регрессия на первых m компонентах готовой PCA."""
    scores = pca.scores(standardized.matrix, m)
    design = np.column_stack([np.ones(len(y)), scores])
    try:
        logistic = ridge_logistic_fit(design, y, 0.0)
    except RankDeficientError:
        logistic = None
    if logistic is None or not logistic.converged:
        logger.info("SPCA alpha=%g m=%d: логистическая регрессия не сошлась, ridge lambda=%g", alpha, m,
                    settings.RIDGE_FALLBACK)
        logistic = ridge_logistic_fit(design, y, settings.RIDGE_FALLBACK)
    return SpcaClassifier(alpha=alpha, m=m, pca=pca, means=standardized.means, sds=standardized.sds, logistic=logistic)


def select_survivors(standardized: Standardized, survivors: np.ndarray) -> Standardized:
    return Standardized(
        matrix=standardized.matrix[:, survivors],
        names=tuple(standardized.names[j] for j in survivors),
        means=standardized.means[survivors],
        sds=standardized.sds[survivors],
    )


def spca_fit(frame: WeeklyFrame | pd.DataFrame, y, alpha: float, m: int, jobs: Optional[int] = None) -> SpcaClassifier:
    """
    Raises:
        TooFewSurvivorsError: если после отбора осталось меньше m признаков
    """
    if m < 1:
        raise InputError(f"Число компонент должно быть >= 1: {m}")
    y = _check_labels(y)
    standardized = standardize(frame)
    survivors = univariate_filter(standardized.matrix, y, alpha, jobs=jobs)
    if len(survivors) < m:
        raise TooFewSurvivorsError(
            f"После отбора с alpha={alpha} осталось {len(survivors)} признаков, нужно {m}",
            alpha=alpha,
            survivors=len(survivors),
            m=m,
        )
    kept = select_survivors(standardized, survivors)
    return fit_components(pca_fit(kept.matrix, kept.names), kept, y, alpha, m)


def _project(c: SpcaClassifier, frame: WeeklyFrame | pd.DataFrame) -> np.ndarray:
    table = _feature_table(frame)
    for name in c.pca.names:
        if name not in table.columns:
            raise MissingFeatureError(f"В данных нет признака '{name}'", name=name)
    values = table.loc[:, list(c.pca.names)].to_numpy(dtype=float)
    return c.pca.scores((values - c.means) / c.sds, c.m)


def spca_predict(c: SpcaClassifier, frame: WeeklyFrame | pd.DataFrame) -> np.ndarray:
    """Вероятность травмы для каждой строки (признаки сопоставляются по именам)."""
    scores = _project(c, frame)
    return c.logistic.predict(np.column_stack([np.ones(len(scores)), scores]))


def component_report(c: SpcaClassifier, frame: WeeklyFrame | pd.DataFrame, y, top: int = 10) -> dict:
    """
    Для каждой из m компонент: доля объяснённой дисперсии, признаки с наибольшими
    по модулю нагрузками, медианы оценок по группам и ранговый критерий Манна-Уитни.
    """
    y = np.asarray(y, dtype=int)
    scores = _project(c, frame)
    explained = c.pca.explained_variance()
    components = []
    for k in range(c.m):
        loadings = c.pca.loadings[k]
        order = sorted(range(len(loadings)), key=lambda j: (-abs(loadings[j]), c.pca.names[j]))[:top]
        injured, healthy = scores[y == 1, k], scores[y == 0, k]
        test = rank_sum_test(injured, healthy) if len(injured) and len(healthy) else None
        components.append(
            {
                "component": k + 1,
                "explained_variance": float(explained[k]),
                "top_loadings": [{"feature": c.pca.names[j], "loading": float(loadings[j])} for j in order],
                "median_injured": float(np.median(injured)) if len(injured) else None,
                "median_healthy": float(np.median(healthy)) if len(healthy) else None,
                "test": "mann-whitney rank-sum",
                "u": test.u if test else None,
                "z": test.z if test else None,
                "p": test.p if test else None,
            }
        )
    return {
        "alpha": c.alpha,
        "m": c.m,
        "survivors": list(c.pca.names),
        "scree": [float(value) for value in explained],
        "components": components,
    }
