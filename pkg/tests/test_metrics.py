import math

import numpy as np
import pytest
from scipy import stats

from pitchguard.core.errors import (
    ConstantVectorError,
    DegenerateAgreementError,
    LengthMismatchError,
    UnknownLabelError,
)
from pitchguard.services.metrics import (
    ConfusionMatrix,
    accuracy,
    ccc,
    classification_metrics,
    kappa,
    mae,
    pearson,
    precision,
    rank_sum_test,
    recall,
    regression_metrics,
    rmse,
)


def _labels_from_counts():
    # строки - прогноз, столбцы - истина: [[40, 10], [20, 30]]
    pred = [0] * 50 + [1] * 50
    truth = [0] * 40 + [1] * 10 + [0] * 20 + [1] * 30
    return pred, truth


def test_error_metrics():
    assert mae([1, 2, 3], [2, 2, 5]) == pytest.approx(1.0)
    assert rmse([1, 2, 3], [2, 2, 5]) == pytest.approx(math.sqrt(5 / 3))


def test_ccc_penalises_shift():
    assert ccc([2, 3, 4], [1, 2, 3]) == pytest.approx(4 / 7)
    assert pearson([2, 3, 4], [1, 2, 3]) == pytest.approx(1.0)
    assert ccc([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)


def test_ccc_never_exceeds_pearson():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        x = rng.normal(size=8)
        y = 0.5 * x + rng.normal(size=8) + rng.normal()
        assert abs(ccc(x, y)) <= abs(pearson(x, y)) + 1e-12


def test_constant_vector_is_undefined():
    with pytest.raises(ConstantVectorError):
        ccc([1, 1, 1], [1, 2, 3])
    with pytest.raises(ConstantVectorError):
        pearson([1, 2, 3], [5, 5, 5])
    metrics = regression_metrics([1, 1, 1], [1, 2, 3])
    assert metrics["ccc"] is None and metrics["pearson"] is None
    assert metrics["mae"] == pytest.approx(1.0)


def test_length_mismatch():
    with pytest.raises(LengthMismatchError):
        mae([1, 2], [1])
    with pytest.raises(LengthMismatchError):
        mae([], [])
    with pytest.raises(LengthMismatchError):
        ConfusionMatrix.from_labels([0, 1], [0])


def test_confusion_matrix_orientation():
    cm = ConfusionMatrix.from_labels(*_labels_from_counts(), labels=[0, 1])
    np.testing.assert_array_equal(cm.counts, [[40, 10], [20, 30]])
    assert cm.total == 100


def test_kappa_precision_recall():
    cm = ConfusionMatrix.from_labels(*_labels_from_counts(), labels=[0, 1])
    assert accuracy(cm) == pytest.approx(0.7)
    assert kappa(cm) == pytest.approx(0.4)
    assert precision(cm, 1) == pytest.approx(0.6)
    assert recall(cm, 1) == pytest.approx(0.75)


def test_multiclass_kappa():
    cm = ConfusionMatrix(counts=np.array([[5, 0, 0], [0, 5, 0], [0, 0, 5]]), labels=("a", "b", "c"))
    assert kappa(cm) == pytest.approx(1.0)


def test_kappa_ignores_label_names():
    rng = np.random.default_rng(6)
    truth = rng.integers(0, 3, 80)
    pred = np.where(rng.random(80) < 0.6, truth, rng.integers(0, 3, 80))
    base = kappa(ConfusionMatrix.from_labels(pred.tolist(), truth.tolist()))
    renaming = {0: "severe", 1: "minor", 2: "moderate"}
    renamed = ConfusionMatrix.from_labels([renaming[p] for p in pred], [renaming[t] for t in truth])
    assert renamed.labels == ("minor", "moderate", "severe")
    assert kappa(renamed) == pytest.approx(base, abs=1e-12)


def test_precision_without_positive_predictions():
    metrics = classification_metrics([0, 0, 0, 0], [0, 1, 0, 1], labels=[0, 1])
    assert metrics["precision"] is None
    assert metrics["recall"] == pytest.approx(0.0)
    assert metrics["kappa"] == pytest.approx(0.0)


def test_degenerate_kappa():
    cm = ConfusionMatrix.from_labels([1, 1, 1], [1, 1, 1])
    with pytest.raises(DegenerateAgreementError):
        kappa(cm)
    assert classification_metrics([1, 1, 1], [1, 1, 1])["kappa"] is None


def test_unknown_label():
    with pytest.raises(UnknownLabelError):
        ConfusionMatrix.from_labels([0, 2], [0, 1], labels=[0, 1])
    cm = ConfusionMatrix.from_labels([0, 1], [0, 1])
    with pytest.raises(UnknownLabelError):
        precision(cm, "injured")


def test_rank_sum_exact_for_small_groups():
    result = rank_sum_test([1, 2, 3, 4], [5, 6, 7, 8])
    assert result.u == 0
    assert result.p == pytest.approx(2 / 70)
    assert result.z < 0


def test_rank_sum_normal_approximation_matches_scipy():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 10, size=12).astype(float)
    b = rng.integers(3, 14, size=15).astype(float)
    result = rank_sum_test(a, b)
    reference = stats.mannwhitneyu(a, b, use_continuity=True, alternative="two-sided", method="asymptotic")
    assert result.u == pytest.approx(reference.statistic)
    assert result.p == pytest.approx(reference.pvalue, rel=1e-9)


def test_rank_sum_switches_to_normal_after_eight():
    # ровно 8 наблюдений: ещё точный перебор
    exact = rank_sum_test([1.5, 2.5, 3.5, 6.5], [4.5, 5.5, 7.5, 8.5])
    normal_at_eight = stats.mannwhitneyu(
        [1.5, 2.5, 3.5, 6.5], [4.5, 5.5, 7.5, 8.5], use_continuity=True, alternative="two-sided", method="asymptotic"
    )
    assert exact.p == pytest.approx(stats.mannwhitneyu(
        [1.5, 2.5, 3.5, 6.5], [4.5, 5.5, 7.5, 8.5], alternative="two-sided", method="exact"
    ).pvalue)
    assert exact.p != pytest.approx(normal_at_eight.pvalue)
    # 9 наблюдений: нормальное приближение
    a, b = [1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0, 9.0]
    result = rank_sum_test(a, b)
    reference = stats.mannwhitneyu(a, b, use_continuity=True, alternative="two-sided", method="asymptotic")
    assert result.p == pytest.approx(reference.pvalue, rel=1e-9)
    assert result.p != pytest.approx(2 / 126)


def test_rank_sum_requires_both_groups():
    with pytest.raises(LengthMismatchError):
        rank_sum_test([], [1.0, 2.0])
