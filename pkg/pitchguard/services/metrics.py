"""
Метрики регрессии и классификации и ранговый критерий для двух групп.
Неопределённые значения (0/0) возвращаются как None, а не 0.
"""
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats
from sklearn.metrics import confusion_matrix

from pitchguard.core.errors import (
    ConstantVectorError,
    DegenerateAgreementError,
    LengthMismatchError,
    UnknownLabelError,
)

# Точный перебор при n_a + n_b <= 8, включая ровно 8; начиная с 9 - нормальное приближение
EXACT_RANK_SUM_LIMIT = 8


def _pair(pred: Sequence[float], truth: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(pred, dtype=float).ravel()
    y = np.asarray(truth, dtype=float).ravel()
    if len(x) != len(y) or len(x) == 0:
        raise LengthMismatchError(f"Длины прогнозов и истинных значений: {len(x)} и {len(y)}")
    return x, y


def _check_not_constant(x: np.ndarray, y: np.ndarray) -> None:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ConstantVectorError("Метрика не определена для постоянного вектора")


def mae(pred: Sequence[float], truth: Sequence[float]) -> float:
    x, y = _pair(pred, truth)
    return float(np.mean(np.abs(x - y)))


def rmse(pred: Sequence[float], truth: Sequence[float]) -> float:
    x, y = _pair(pred, truth)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def pearson(pred: Sequence[float], truth: Sequence[float]) -> float:
    x, y = _pair(pred, truth)
    _check_not_constant(x, y)
    return float(np.clip(stats.pearsonr(x, y)[0], -1.0, 1.0))


def ccc(pred: Sequence[float], truth: Sequence[float]) -> float:
    """Коэффициент конкордации Лина с моментами по генеральной совокупности."""
    x, y = _pair(pred, truth)
    _check_not_constant(x, y)
    covariance = np.mean((x - x.mean()) * (y - y.mean()))
    return float(2 * covariance / (x.var() + y.var() + (x.mean() - y.mean()) ** 2))


def safe_metric(func, *args) -> Optional[float]:
    """Значение метрики или None, если она не определена на этих данных."""
    try:
        return func(*args)
    except (ConstantVectorError, DegenerateAgreementError):
        return None


@dataclass(frozen=True)
class ConfusionMatrix:
    """Матрица ошибок: строка - прогноз, столбец - истинный класс."""

    counts: np.ndarray
    labels: tuple

    @classmethod
    def from_labels(cls, pred: Sequence[Any], truth: Sequence[Any], labels: Optional[Sequence[Any]] = None) -> "ConfusionMatrix":
        pred, truth = list(pred), list(truth)
        if len(pred) != len(truth) or not pred:
            raise LengthMismatchError(f"Длины прогнозов и истинных меток: {len(pred)} и {len(truth)}")
        if labels is None:
            labels = sorted(set(pred) | set(truth))
        unknown = (set(pred) | set(truth)) - set(labels)
        if unknown:
            raise UnknownLabelError(f"Метки вне списка классов: {sorted(map(str, unknown))}")
        # sklearn: строки - истина, столбцы - прогноз
        counts = confusion_matrix(truth, pred, labels=list(labels)).T
        return cls(counts=counts, labels=tuple(labels))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def index(self, label: Any) -> int:
        if label not in self.labels:
            raise UnknownLabelError(f"Класс {label!r} отсутствует в матрице ошибок", label=label)
        return self.labels.index(label)


def accuracy(cm: ConfusionMatrix) -> float:
    return float(np.trace(cm.counts) / cm.total)


def kappa(cm: ConfusionMatrix) -> float:
    """(Pr(a) - Pr(e)) / (1 - Pr(e)) для любого числа классов."""
    total = cm.total
    observed = np.trace(cm.counts) / total
    expected = float(np.sum(cm.counts.sum(axis=1) * cm.counts.sum(axis=0))) / total**2
    if expected >= 1:
        raise DegenerateAgreementError("Каппа не определена: ожидаемое согласие равно 1")
    return float((observed - expected) / (1 - expected))


def precision(cm: ConfusionMatrix, positive_label: Any = 1) -> Optional[float]:
    k = cm.index(positive_label)
    predicted = cm.counts[k].sum()
    return float(cm.counts[k, k] / predicted) if predicted else None


def recall(cm: ConfusionMatrix, positive_label: Any = 1) -> Optional[float]:
    k = cm.index(positive_label)
    actual = cm.counts[:, k].sum()
    return float(cm.counts[k, k] / actual) if actual else None


@dataclass(frozen=True)
class RankSumResult:
    u: float
    z: float
    p: float


def rank_sum_test(group_a: Sequence[float], group_b: Sequence[float]) -> RankSumResult:
    """
    Критерий Манна-Уитни: средние ранги при совпадениях, дисперсия с поправкой
    на совпадения, z с поправкой на непрерывность 0.5. При n_a + n_b <= 8
    (граница 8 входит, например группы 4 и 4) двустороннее p считается полным
    перебором разбиений рангов, при n_a + n_b >= 9 берётся нормальное приближение.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise LengthMismatchError("Обе группы должны быть непустыми")
    n_a, n_b = len(a), len(b)
    n = n_a + n_b
    ranks = stats.rankdata(np.concatenate([a, b]))
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2)
    mean_u = n_a * n_b / 2

    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1)) if n > 1 else 0.0
    variance = n_a * n_b / 12 * ((n + 1) - tie_term)
    if variance <= 0:
        return RankSumResult(u=u, z=0.0, p=1.0)
    deviation = u - mean_u
    z = float(np.sign(deviation) * max(abs(deviation) - 0.5, 0.0) / np.sqrt(variance))

    if n <= EXACT_RANK_SUM_LIMIT:
        observed = abs(deviation)
        extreme = 0
        total = 0
        for chosen in combinations(range(n), n_a):
            u_perm = ranks[list(chosen)].sum() - n_a * (n_a + 1) / 2
            total += 1
            if abs(u_perm - mean_u) >= observed - 1e-9:
                extreme += 1
        return RankSumResult(u=u, z=z, p=extreme / total)

    return RankSumResult(u=u, z=z, p=float(min(1.0, 2 * stats.norm.sf(abs(z)))))


def regression_metrics(pred: Sequence[float], truth: Sequence[float]) -> dict[str, Optional[float]]:
    return {
        "rmse": rmse(pred, truth),
        "mae": mae(pred, truth),
        "pearson": safe_metric(pearson, pred, truth),
        "ccc": safe_metric(ccc, pred, truth),
    }


def classification_metrics(
    pred: Sequence[Any], truth: Sequence[Any], labels: Optional[Sequence[Any]] = None, positive_label: Any = 1
) -> dict[str, Optional[float]]:
    cm = ConfusionMatrix.from_labels(pred, truth, labels)
    return {
        "accuracy": accuracy(cm),
        "kappa": safe_metric(kappa, cm),
        "precision": precision(cm, positive_label) if positive_label in cm.labels else None,
        "recall": recall(cm, positive_label) if positive_label in cm.labels else None,
    }
