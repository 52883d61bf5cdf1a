"""Базовые модели сравнения: k ближайших соседей и гауссовский наивный Байес."""
from dataclasses import dataclass
from typing import Literal

import numpy as np
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier, KNeighborsRegressor

from pitchguard.core.errors import EmptyTrainingError, InputError


@dataclass(frozen=True)
class GnbPrediction:
    labels: np.ndarray
    posteriors: np.ndarray
    classes: np.ndarray


def _train(train: tuple) -> tuple[np.ndarray, np.ndarray]:
    x, y = train
    x = np.asarray(x, dtype=float)
    # одномерный вектор - один признак, а не одно наблюдение
    x = x.reshape(-1, 1) if x.ndim == 1 else x
    y = np.asarray(y)
    if len(y) == 0:
        raise EmptyTrainingError("Обучающая выборка пуста")
    if x.shape[0] != len(y):
        raise InputError(f"Число строк признаков ({x.shape[0]}) и меток ({len(y)}) различается")
    return x, y


def _queries(test, features: int) -> np.ndarray:
    test = np.asarray(test, dtype=float)
    return test.reshape(-1, features) if test.ndim <= 1 else test


def baseline_knn(k: int, train: tuple, test, mode: Literal["classify", "regress"] = "classify") -> np.ndarray:
    """
    Евклидовы соседи: голосование большинством (при равенстве - меньшая метка)
    или среднее значение соседей. Признаки стандартизирует вызывающий код.
    """
    if k < 1:
        raise InputError(f"k должно быть >= 1: {k}")
    x, y = _train(train)
    neighbors = min(k, len(y))
    estimator = KNeighborsClassifier(n_neighbors=neighbors) if mode == "classify" else KNeighborsRegressor(
        n_neighbors=neighbors
    )
    estimator.fit(x, y)
    return estimator.predict(_queries(test, x.shape[1]))


def baseline_gnb(train: tuple, test) -> GnbPrediction:
    """Гауссовский наивный Байес: нормальное распределение каждого признака внутри класса."""
    x, y = _train(train)
    estimator = GaussianNB().fit(x, y)
    test = _queries(test, x.shape[1])
    return GnbPrediction(
        labels=estimator.predict(test),
        posteriors=estimator.predict_proba(test),
        classes=estimator.classes_,
    )
