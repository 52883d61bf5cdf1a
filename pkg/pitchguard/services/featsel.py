"""
Отбор признаков по корреляционному критерию (CFS): энтропия, информационный выигрыш,
симметричная неопределённость, merit подмножества и поиск подмножества
генетическим алгоритмом с рулеточным отбором. Частота выживания признаков
считается по фолдам кросс-валидации.
"""
import logging
from dataclasses import dataclass, field
from functools import partial
from itertools import product
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.model_selection import StratifiedKFold

from pitchguard.core.errors import ConstantVectorError, FoldTooSmallError, InputError, MissingFeatureError
from pitchguard.models.configs import GaConfig
from pitchguard.services.metrics import pearson
from pitchguard.tasks.parallel import run_parallel

logger = logging.getLogger(__name__)

# Число квантильных интервалов для дискретизации числовых признаков при расчёте SU
DISCRETIZATION_BINS = 10
EXHAUSTIVE_LIMIT = 16


def _column(x) -> pd.Series:
    series = pd.Series(np.asarray(x).ravel()) if not isinstance(x, pd.Series) else x.reset_index(drop=True)
    if series.empty:
        raise InputError("Пустая колонка")
    return series


def entropy(x) -> float:
    """Энтропия Шеннона эмпирического распределения, в битах."""
    counts = _column(x).value_counts(sort=False).to_numpy()
    return float(stats.entropy(counts, base=2))


def joint_entropy(x, y) -> float:
    x, y = _column(x), _column(y)
    if len(x) != len(y):
        raise InputError(f"Длины колонок различаются: {len(x)} и {len(y)}")
    counts = pd.crosstab(x, y).to_numpy().ravel()
    return float(stats.entropy(counts[counts > 0], base=2))


def info_gain(x, y) -> float:
    """H(X) + H(Y) - H(X, Y)."""
    return entropy(x) + entropy(y) - joint_entropy(x, y)


def symmetrical_uncertainty(x, y) -> float:
    """2 * gain / (H(X) + H(Y)); 0, если обе энтропии нулевые."""
    total = entropy(x) + entropy(y)
    if total <= 0:
        logger.debug("Симметричная неопределённость: H(X) + H(Y) = 0, принято 0")
        return 0.0
    return float(np.clip(2 * info_gain(x, y) / total, 0.0, 1.0))


def _is_numeric(series: pd.Series) -> bool:
    return pd.api.types.is_numeric_dtype(series) and not pd.api.types.is_bool_dtype(series)


def discretize(series: pd.Series) -> pd.Series:
    """Квантильная дискретизация (до 10 интервалов, совпадающие границы объединяются)."""
    return pd.Series(pd.qcut(series.astype(float), q=DISCRETIZATION_BINS, labels=False, duplicates="drop"))


def association(a: pd.Series, b: pd.Series) -> float:
    """
    Мера связи двух колонок: |Пирсон| для двух числовых,
    SU для категориальных (числовая колонка в паре с категориальной дискретизируется).
    """
    a, b = a.reset_index(drop=True), b.reset_index(drop=True)
    if _is_numeric(a) and _is_numeric(b):
        try:
            return abs(pearson(a.to_numpy(dtype=float), b.to_numpy(dtype=float)))
        except ConstantVectorError:
            return 0.0
    if _is_numeric(a):
        a = discretize(a)
    if _is_numeric(b):
        b = discretize(b)
    return symmetrical_uncertainty(a, b)


@dataclass(frozen=True)
class MeritScore:
    value: float
    k: int
    mean_feature_class_corr: float
    mean_intercorr: float


def _merit_from(class_assoc: np.ndarray, inter: np.ndarray) -> MeritScore:
    k = len(class_assoc)
    r_zi = float(np.mean(class_assoc))
    r_ii = float(np.mean(inter[np.triu_indices(k, 1)])) if k > 1 else 0.0
    return MeritScore(value=k * r_zi / np.sqrt(k + k * (k - 1) * r_ii), k=k, mean_feature_class_corr=r_zi,
                      mean_intercorr=r_ii)


@dataclass
class CfsScorer:
    """Заранее посчитанные связи признак-класс и признак-признак, кэш merit по хромосомам."""

    names: tuple[str, ...]
    class_assoc: np.ndarray
    inter: np.ndarray
    cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_table(cls, table: pd.DataFrame, target) -> "CfsScorer":
        target = _column(target)
        if _is_numeric(target) and set(target.unique()) <= {0, 1}:
            target = target.astype(float)
        columns = [table[name].reset_index(drop=True) for name in table.columns]
        p = len(columns)
        inter = np.eye(p)
        for i in range(p):
            for j in range(i + 1, p):
                inter[i, j] = inter[j, i] = association(columns[i], columns[j])
        return cls(
            names=tuple(table.columns),
            class_assoc=np.array([association(column, target) for column in columns]),
            inter=inter,
        )

    def score(self, chromosome: np.ndarray) -> MeritScore:
        key = np.packbits(chromosome).tobytes()
        if key not in self.cache:
            idx = np.flatnonzero(chromosome)
            self.cache[key] = _merit_from(self.class_assoc[idx], self.inter[np.ix_(idx, idx)])
        return self.cache[key]


def merit(subset: Sequence[str], table: pd.DataFrame, target) -> MeritScore:
    """k * r_zi / sqrt(k + k(k-1) * r_ii) для подмножества признаков."""
    if not subset:
        raise InputError("Подмножество признаков пусто")
    for name in subset:
        if name not in table.columns:
            raise MissingFeatureError(f"В таблице нет признака '{name}'", name=name)
    scorer = CfsScorer.from_table(table.loc[:, list(subset)], target)
    return scorer.score(np.ones(len(subset), dtype=bool))


@dataclass(frozen=True)
class GaResult:
    chromosome: np.ndarray
    merit: MeritScore
    names: tuple[str, ...]
    history: tuple[float, ...] = ()

    @property
    def selected(self) -> list[str]:
        return [name for name, bit in zip(self.names, self.chromosome) if bit]


def _repair(population: np.ndarray, rng: np.random.Generator) -> None:
    for row in np.flatnonzero(~population.any(axis=1)):
        population[row, rng.integers(population.shape[1])] = True


def ga_search(scorer: CfsScorer, cfg: GaConfig, seed: Optional[int] = None) -> GaResult:
    """
    Генетический алгоритм: рулетка (fitness сдвигается к неотрицательным значениям),
    одноточечное скрещивание, побитовая мутация, элитизм 1, починка пустых хромосом.
    """
    p = len(scorer.names)
    if p < 2:
        raise InputError("Для генетического поиска нужно не менее двух признаков")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    population = rng.random((cfg.population, p)) < 0.5
    _repair(population, rng)

    def evaluate(pop: np.ndarray) -> np.ndarray:
        return np.array([scorer.score(chromosome).value for chromosome in pop])

    fitness = evaluate(population)
    history = [float(fitness.max())]
    for _ in range(cfg.generations):
        elite = population[int(np.argmax(fitness))].copy()
        shifted = fitness - fitness.min()
        probabilities = shifted / shifted.sum() if shifted.sum() > 0 else None
        parents = population[rng.choice(cfg.population, size=cfg.population, p=probabilities)]

        children = parents.copy()
        for i in range(0, cfg.population, 2):
            if rng.random() < cfg.crossover_p:
                point = rng.integers(1, p)
                children[i, point:], children[i + 1, point:] = parents[i + 1, point:], parents[i, point:]
        children ^= rng.random(children.shape) < cfg.mutation_p
        _repair(children, rng)
        children[0] = elite

        population = children
        fitness = evaluate(population)
        history.append(float(fitness.max()))

    best = population[int(np.argmax(fitness))]
    return GaResult(chromosome=best.copy(), merit=scorer.score(best), names=scorer.names, history=tuple(history))


def ga_select(table: pd.DataFrame, target, cfg: GaConfig, seed: Optional[int] = None) -> GaResult:
    """Лучшее подмножество признаков по merit."""
    return ga_search(CfsScorer.from_table(table, target), cfg, seed)


def exhaustive_select(table: pd.DataFrame, target) -> GaResult:
    """Полный перебор всех непустых подмножеств (только для небольшого числа признаков)."""
    scorer = CfsScorer.from_table(table, target)
    p = len(scorer.names)
    if p > EXHAUSTIVE_LIMIT:
        raise InputError(f"Полный перебор допустим не более чем для {EXHAUSTIVE_LIMIT} признаков")
    best, best_score = None, None
    for bits in product((False, True), repeat=p):
        chromosome = np.array(bits)
        if not chromosome.any():
            continue
        score = scorer.score(chromosome)
        if best_score is None or score.value > best_score.value:
            best, best_score = chromosome, score
    return GaResult(chromosome=best, merit=best_score, names=scorer.names)


def _fold_select(table: pd.DataFrame, target: np.ndarray, cfg: GaConfig, fold: tuple[int, np.ndarray]) -> GaResult:
    index, train = fold
    result = ga_select(table.iloc[train].reset_index(drop=True), target[train], cfg, seed=cfg.seed + index)
    logger.info("Фолд %d: выбрано %d признаков, merit=%.4f", index, len(result.selected), result.merit.value)
    return result


def cv_survival(table: pd.DataFrame, target, cfg: GaConfig, folds: int = 10, jobs: Optional[int] = None) -> pd.DataFrame:
    """
    Доля фолдов, в которых признак вошёл в лучшую хромосому, и средний лучший merit
    по этим фолдам (пусто, если признак не выжил ни разу).

    Returns:
        Таблица с колонками feature, survival_fraction, mean_best_merit
    """
    if folds < 2:
        raise InputError(f"Число фолдов должно быть >= 2: {folds}")
    target = np.asarray(target)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=cfg.seed)
    try:
        splits = [(i, train) for i, (train, _) in enumerate(splitter.split(np.zeros(len(target)), target))]
    except ValueError as e:
        raise FoldTooSmallError(f"Невозможно построить {folds} фолдов: {e}", n=len(target), folds=folds) from e
    results = run_parallel(partial(_fold_select, table, target, cfg), splits, jobs=jobs)

    rows = []
    for j, name in enumerate(table.columns):
        merits = [result.merit.value for result in results if result.chromosome[j]]
        rows.append(
            {
                "feature": name,
                "survival_fraction": len(merits) / folds,
                "mean_best_merit": float(np.mean(merits)) if merits else None,
            }
        )
    return pd.DataFrame(rows, columns=["feature", "survival_fraction", "mean_best_merit"])
