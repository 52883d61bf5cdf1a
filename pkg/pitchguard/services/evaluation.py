"""
Протоколы оценки: повторная k-кратная кросс-валидация моделей классификации
и регрессии, сетка (alpha, m) для SPCA, сравнение моделей и усечённый
leave-one-out для гауссовского процесса по записям нагрузки (T - a).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.model_selection import RepeatedKFold, RepeatedStratifiedKFold
from sklearn.preprocessing import StandardScaler

from pitchguard.core.errors import FoldTooSmallError, InputError, TruncationTooDeepError
from pitchguard.models.configs import CvPlan, SpcaGrid, SweepConfig
from pitchguard.models.exposure import ExposureRecord
from pitchguard.models.reports import GridSearchResult, MetricRow, ModelReport, TruncationRow, TruncationSweep
from pitchguard.services.baselines import baseline_gnb, baseline_knn
from pitchguard.services.dtw import accumulated_matrix
from pitchguard.services.glm import ridge_logistic_fit
from pitchguard.services.gp import LooProtocol, grid_search_units
from pitchguard.services.ingest import fill_missing_days, log_transform, truncate_record
from pitchguard.services.metrics import ConfusionMatrix, classification_metrics, kappa, regression_metrics, safe_metric
from pitchguard.services.spca import (
    fit_components,
    pca_fit,
    select_survivors,
    spca_fit,
    spca_predict,
    standardize,
    univariate_coefficients,
)
from pitchguard.tasks.parallel import run_parallel

logger = logging.getLogger(__name__)

Task = Literal["classify", "regress"]

# Сетки базовых моделей при сравнении
RIDGE_LAMBDAS = tuple(10.0**power for power in range(-15, 0))
KNN_NEIGHBORS = tuple(range(1, 21))


class RiskStatus(str, Enum):
    IMMINENT = "Imminent"
    SAFE_FOR_NOW = "SafeForNow"


def interpret_prediction(f_star: float, current_day: float) -> RiskStatus:
    """Прогноз дня травмы не позже текущего дня означает высокий риск (граница - Imminent)."""
    if not np.isfinite(f_star):
        raise InputError(f"Прогноз должен быть конечным: {f_star}")
    return RiskStatus.IMMINENT if f_star <= current_day else RiskStatus.SAFE_FOR_NOW


# Модели для кросс-валидации: fit(X: DataFrame, y) -> self, predict(X) -> ndarray


class SpcaModel:
    def __init__(self, alpha: float, m: int):
        self.alpha, self.m = alpha, m

    def fit(self, x: pd.DataFrame, y: np.ndarray) -> "SpcaModel":
        self.classifier = spca_fit(x, y, self.alpha, self.m, jobs=1)
        return self

    def predict(self, x: pd.DataFrame) -> np.ndarray:
        return (spca_predict(self.classifier, x) >= 0.5).astype(int)


class RidgeLogisticModel:
    """Логистическая регрессия с L2-штрафом на стандартизированных признаках."""

    def __init__(self, lam: float):
        self.lam = lam

    def fit(self, x: pd.DataFrame, y: np.ndarray) -> "RidgeLogisticModel":
        self.scaler = StandardScaler().fit(x.to_numpy(dtype=float))
        design = np.column_stack([np.ones(len(y)), self.scaler.transform(x.to_numpy(dtype=float))])
        self.fit_ = ridge_logistic_fit(design, y, self.lam)
        return self

    def predict(self, x: pd.DataFrame) -> np.ndarray:
        design = np.column_stack([np.ones(len(x)), self.scaler.transform(x.to_numpy(dtype=float))])
        return (self.fit_.predict(design) >= 0.5).astype(int)


class KnnModel:
    """k ближайших соседей на стандартизированных признаках."""

    def __init__(self, k: int, task: Task = "classify"):
        self.k, self.task = k, task

    def fit(self, x: pd.DataFrame, y: np.ndarray) -> "KnnModel":
        self.scaler = StandardScaler().fit(x.to_numpy(dtype=float))
        self.train = (self.scaler.transform(x.to_numpy(dtype=float)), np.asarray(y))
        return self

    def predict(self, x: pd.DataFrame) -> np.ndarray:
        test = self.scaler.transform(x.to_numpy(dtype=float))
        return baseline_knn(self.k, self.train, test, mode=self.task)


class NaiveBayesModel:
    def fit(self, x: pd.DataFrame, y: np.ndarray) -> "NaiveBayesModel":
        self.train = (x.to_numpy(dtype=float), np.asarray(y))
        return self

    def predict(self, x: pd.DataFrame) -> np.ndarray:
        return baseline_gnb(self.train, x.to_numpy(dtype=float)).labels


class ConstantModel:
    """Мажоритарный класс (классификация) или среднее (регрессия)."""

    def __init__(self, task: Task = "classify"):
        self.task = task

    def fit(self, x: pd.DataFrame, y: np.ndarray) -> "ConstantModel":
        if self.task == "classify":
            values, counts = np.unique(y, return_counts=True)
            self.value = values[int(np.argmax(counts))]
        else:
            self.value = float(np.mean(y))
        return self

    def predict(self, x: pd.DataFrame) -> np.ndarray:
        return np.full(len(x), self.value)


def cv_splits(y: np.ndarray, plan: CvPlan, task: Task = "classify") -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Разбиения (repeat x fold) в каноническом порядке."""
    n = len(y)
    if n < plan.folds:
        raise FoldTooSmallError(f"Размер выборки {n} меньше числа фолдов {plan.folds}", n=n, folds=plan.folds)
    if plan.stratified and task == "classify":
        splitter = RepeatedStratifiedKFold(n_splits=plan.folds, n_repeats=plan.repeats, random_state=plan.seed)
    else:
        splitter = RepeatedKFold(n_splits=plan.folds, n_repeats=plan.repeats, random_state=plan.seed)
    try:
        splits = list(splitter.split(np.zeros(n), y))
    except ValueError as e:
        raise FoldTooSmallError(f"Невозможно построить фолды: {e}", n=n, folds=plan.folds) from e
    return [
        (f"r{index // plan.folds + 1}f{index % plan.folds + 1}", train, test)
        for index, (train, test) in enumerate(splits)
    ]


def _run_fold(
    factory: Callable[[], Any],
    table: pd.DataFrame,
    y: np.ndarray,
    task: Task,
    labels: list,
    positive_label: Any,
    split: tuple[str, np.ndarray, np.ndarray],
) -> MetricRow:
    unit, train, test = split
    model = factory().fit(table.iloc[train].reset_index(drop=True), y[train])
    pred = model.predict(table.iloc[test].reset_index(drop=True))
    if task == "classify":
        metrics = classification_metrics(pred, y[test], labels=labels, positive_label=positive_label)
    else:
        metrics = regression_metrics(pred, y[test])
    return MetricRow(unit=unit, metrics=metrics)


def kfold_cv(
    factory: Callable[[], Any],
    table: pd.DataFrame,
    y,
    plan: CvPlan,
    task: Task = "classify",
    positive_label: Any = 1,
    jobs: Optional[int] = None,
    config: Optional[dict] = None,
) -> ModelReport:
    """
    Повторная k-кратная кросс-валидация: модель обучается на обучающей части
    каждого фолда, метрики считаются на тестовой. Агрегат - среднее и sd по фолдам.

    Raises:
        FoldTooSmallError: если наблюдений меньше, чем фолдов
    """
    y = np.asarray(y)
    splits = cv_splits(y, plan, task)
    labels = sorted(np.unique(y).tolist()) if task == "classify" else []
    rows = run_parallel(partial(_run_fold, factory, table, y, task, labels, positive_label), splits, jobs=jobs)
    protocol = f"{plan.repeats}x{plan.folds}-fold {'stratified ' if plan.stratified and task == 'classify' else ''}cv"
    echo = {**plan.model_dump(mode="json"), **(config or {})}
    return ModelReport.from_rows(protocol, rows, config=echo, seed=plan.seed)


def _spca_fold(table: pd.DataFrame, y: np.ndarray, grid: SpcaGrid, split: tuple[str, np.ndarray, np.ndarray]) -> dict:
    """Каппа каждой пары (alpha, m) на одном фолде; PCA считается один раз на набор выживших признаков."""
    _, train, test = split
    y_train = y[train].astype(float)
    standardized = standardize(table.iloc[train].reset_index(drop=True))
    coefficients = univariate_coefficients(standardized.matrix, y_train, jobs=1)
    test_table = table.iloc[test].reset_index(drop=True)

    result: dict[tuple[float, int], Optional[float]] = {}
    fitted: dict[bytes, tuple] = {}
    for alpha in grid.alpha_grid:
        survivors = np.flatnonzero(coefficients >= alpha)
        key = survivors.tobytes()
        if key not in fitted and len(survivors):
            kept = select_survivors(standardized, survivors)
            fitted[key] = (kept, pca_fit(kept.matrix, kept.names))
        for m in grid.m_grid:
            if len(survivors) < m:
                result[(alpha, m)] = None
                continue
            kept, pca = fitted[key]
            classifier = fit_components(pca, kept, y_train, alpha, m)
            pred = (spca_predict(classifier, test_table) >= 0.5).astype(int)
            cm = ConfusionMatrix.from_labels(pred, y[test], labels=[0, 1])
            result[(alpha, m)] = safe_metric(kappa, cm)
    return result


def spca_grid(
    table: pd.DataFrame, y, grid: SpcaGrid, plan: CvPlan, jobs: Optional[int] = None
) -> list[dict]:
    """
    Средняя по фолдам каппа для каждой пары (alpha, m). Пара, для которой
    выживших признаков меньше m хотя бы в одном фолде, помечается как неопределённая.
    """
    y = np.asarray(y, dtype=int)
    splits = cv_splits(y, plan, "classify")
    folds = run_parallel(partial(_spca_fold, table, y, grid), splits, jobs=jobs)
    rows = []
    for alpha in grid.alpha_grid:
        for m in grid.m_grid:
            values = [fold[(alpha, m)] for fold in folds]
            feasible = all(value is not None for value in values)
            rows.append(
                {
                    "alpha": alpha,
                    "m": m,
                    "kappa_mean": float(np.mean(values)) if feasible else None,
                    "kappa_sd": float(np.std(values, ddof=1)) if feasible and len(values) > 1 else None,
                }
            )
    return rows


def _best_by_kappa(reports: dict[str, ModelReport]) -> str:
    scored = [(name, report.aggregate["kappa"].mean) for name, report in reports.items()]
    scored = [(name, value) for name, value in scored if value is not None]
    if not scored:
        return next(iter(reports))
    return max(scored, key=lambda item: item[1])[0]


def compare_models(
    table: pd.DataFrame,
    y,
    plan: CvPlan,
    spca: Optional[SpcaGrid] = None,
    lambdas: Sequence[float] = RIDGE_LAMBDAS,
    neighbors: Sequence[int] = KNN_NEIGHBORS,
    jobs: Optional[int] = None,
) -> dict[str, dict]:
    """
    Сравнение SPCA, ridge-логистической регрессии, k-NN, наивного Байеса и константной
    модели. Для каждой модели выбирается настройка с наибольшей средней каппой.
    """
    y = np.asarray(y, dtype=int)
    # Соседей не может быть больше, чем наблюдений в самом маленьком обучающем фолде
    min_train = len(y) - int(np.ceil(len(y) / plan.folds))
    candidates: dict[str, dict[str, Callable[[], Any]]] = {
        "ridge_logistic": {f"lambda={lam:g}": partial(RidgeLogisticModel, lam) for lam in lambdas},
        "knn": {f"k={k}": partial(KnnModel, k) for k in neighbors if k <= min_train},
        "naive_bayes": {"default": NaiveBayesModel},
        "constant": {"majority": ConstantModel},
    }
    if spca is not None:
        grid_rows = spca_grid(table, y, spca, plan, jobs=jobs)
        feasible = [row for row in grid_rows if row["kappa_mean"] is not None]
        if feasible:
            best = max(feasible, key=lambda row: row["kappa_mean"])
            candidates["spca"] = {f"alpha={best['alpha']:g},m={best['m']}": partial(SpcaModel, best["alpha"], best["m"])}
        else:
            logger.warning("SPCA: нет допустимых пар (alpha, m)")

    comparison = {}
    for model, settings_map in candidates.items():
        reports = {
            setting: kfold_cv(factory, table, y, plan, jobs=jobs, config={"model": model, "setting": setting})
            for setting, factory in settings_map.items()
        }
        best = _best_by_kappa(reports)
        comparison[model] = {"setting": best, "report": reports[best]}
        summary = reports[best].aggregate.get("kappa")
        logger.info("Модель %s: лучшая настройка %s, каппа %s", model, best, summary.mean if summary else None)
    return comparison


@dataclass(frozen=True)
class PairPrefixes:
    i: int
    j: int
    training: tuple[float, np.ndarray, np.ndarray]
    match: tuple[float, np.ndarray, np.ndarray]


def _prefix_row(records: list[ExposureRecord], i: int) -> list[PairPrefixes]:
    """Для пар (i, j>i): полное DTW и DTW префиксов обоих рядов по одной матрице на канал."""
    pairs = []
    for j in range(i + 1, len(records)):
        channels = []
        for a, b in ((records[i].training, records[j].training), (records[i].match, records[j].match)):
            acc = accumulated_matrix(a, b)
            channels.append((float(acc[-1, -1]), acc[1:, -1].copy(), acc[-1, 1:].copy()))
        pairs.append(PairPrefixes(i=i, j=j, training=channels[0], match=channels[1]))
    return pairs


def truncated_protocol(
    records: list[ExposureRecord],
    max_truncation: int,
    include_censored: bool = False,
    jobs: Optional[int] = None,
) -> LooProtocol:
    """
    Протокол усечённого leave-one-out: отложенный травмированный игрок i берётся
    с днями 1..T_i - a, обучающие игроки - целиком до T_i (цензурированные - до
    последнего дня, только при include_censored). Единицы протокола - a = 0..A.

    Raises:
        TruncationTooDeepError: если у травмированного игрока T - A < 2
    """
    injured = [r for r in records if r.injured]
    censored = [fill_missing_days(r) for r in records if not r.injured] if include_censored else []
    for record in injured:
        if record.response_day - max_truncation < 2:
            raise TruncationTooDeepError(
                f"Игрок {record.subject_id}: T={record.response_day} слишком мал для усечения до T-{max_truncation}",
                subject=record.subject_id,
                a=max_truncation,
            )
    pool = [truncate_record(r, 0) for r in injured] + list(censored)
    n = len(pool)
    units = tuple(range(max_truncation + 1))
    logger.info(
        "Усечённый LOO: травмированных %d, цензурированных %d, глубина усечения до %d", len(injured), len(censored), max_truncation
    )

    full_t, full_m = np.zeros((n, n)), np.zeros((n, n))
    query_t, query_m = np.zeros((n, n, len(units))), np.zeros((n, n, len(units)))
    heldout = range(len(injured))

    def prefix_index(record: ExposureRecord) -> np.ndarray:
        # Индекс строки накопленной матрицы для префикса длины T - a
        return np.array([record.response_day - a - 1 for a in units])

    for row in run_parallel(partial(_prefix_row, pool), range(n), jobs=jobs):
        for pair in row:
            i, j = pair.i, pair.j
            full_t[i, j] = full_t[j, i] = pair.training[0]
            full_m[i, j] = full_m[j, i] = pair.match[0]
            if i in heldout:
                query_t[i, j] = pair.training[1][prefix_index(pool[i])]
                query_m[i, j] = pair.match[1][prefix_index(pool[i])]
            if j in heldout:
                query_t[j, i] = pair.training[2][prefix_index(pool[j])]
                query_m[j, i] = pair.match[2][prefix_index(pool[j])]

    return LooProtocol(
        channels=(full_t, full_m),
        queries=(query_t, query_m),
        targets=log_transform([r.response_day for r in pool]),
        heldout=tuple(heldout),
        units=units,
    )


def truncation_sweep(
    records: list[ExposureRecord],
    sweep: Optional[SweepConfig] = None,
    include_censored: bool = False,
    jobs: Optional[int] = None,
) -> tuple[TruncationSweep, dict[int, GridSearchResult]]:
    """
    Для каждого a = 0..A: leave-one-out по травмированным игрокам с усечением
    отложенной записи до T - a, перебор сетки (gamma, epsilon), лучшая принятая
    настройка по CCC (при равенстве - меньший MAE).

    Raises:
        TruncationTooDeepError, NoAcceptedSettingError
    """
    sweep = sweep or SweepConfig()
    protocol = truncated_protocol(records, sweep.max_truncation, include_censored, jobs=jobs)
    results = grid_search_units(
        protocol, sweep.gammas(), sweep.epsilons(), jobs=jobs, tol=sweep.negative_variance_tol
    )
    rows = []
    for a in protocol.units:
        best = results[a].best
        rows.append(
            TruncationRow(
                t_minus_a=a,
                ccc=best.metrics.get("ccc"),
                mae=best.metrics.get("mae"),
                gamma=best.gamma,
                epsilon=best.epsilon,
            )
        )
    return TruncationSweep(rows=rows), results


def sweep_frame(sweep: TruncationSweep) -> pd.DataFrame:
    """Таблица t_minus_a,ccc,mae,gamma,epsilon."""
    return pd.DataFrame(
        [row.model_dump() for row in sweep.rows], columns=["t_minus_a", "ccc", "mae", "gamma", "epsilon"]
    )
