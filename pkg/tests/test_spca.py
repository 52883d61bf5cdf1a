import numpy as np
import pandas as pd
import pytest

from pitchguard.core.errors import (
    AllColumnsDegenerateError,
    InputError,
    MissingFeatureError,
    TooFewSurvivorsError,
)
from pitchguard.models.configs import CvPlan, SynthConfig
from pitchguard.services.evaluation import SpcaModel, kfold_cv
from pitchguard.services.glm import ridge_logistic_fit
from pitchguard.services.ingest import aggregate_weekly
from pitchguard.services.spca import (
    component_report,
    pca_fit,
    spca_fit,
    spca_predict,
    standardize,
    univariate_filter,
)
from pitchguard.services.synth import planted_features, planted_table, synth_generate

# Когорта с частыми травмами: около сорока недель с травмой
WEEKLY_COHORT = SynthConfig(
    subjects=30,
    season_days=140,
    hazard=0.03,
    load_sensitivity=1.0,
    gps_features=12,
    planted_features=2,
    feature_blocks=2,
    speed_samples=20,
)


def test_full_spca_equals_plain_logistic():
    table, y = planted_table(80, 4, informative=1, seed=6, shift=1.0)
    classifier = spca_fit(table, y, alpha=0.0, m=4, jobs=1)
    standardized = standardize(table)
    design = np.column_stack([np.ones(80), standardized.matrix])
    plain = ridge_logistic_fit(design, y, 0.0)
    np.testing.assert_allclose(spca_predict(classifier, table), plain.fitted, atol=1e-6)


def test_component_scores_are_uncorrelated():
    table, _ = planted_table(100, 5, informative=2, seed=1)
    standardized = standardize(table)
    pca = pca_fit(standardized.matrix, standardized.names)
    scores = pca.scores(standardized.matrix)
    correlation = np.corrcoef(scores, rowvar=False)
    off_diagonal = correlation[~np.eye(5, dtype=bool)]
    assert np.abs(off_diagonal).max() <= 1e-8
    assert np.all(np.diff(pca.eigenvalues) <= 0)
    assert pca.explained_variance().sum() == pytest.approx(1.0)


def test_loading_sign_convention():
    table, _ = planted_table(50, 4, seed=2)
    pca = pca_fit(standardize(table).matrix)
    lead = np.argmax(np.abs(pca.loadings), axis=1)
    assert np.all(pca.loadings[np.arange(4), lead] > 0)
    assert pca.names == ("x0", "x1", "x2", "x3")


def test_planted_features_survive_filter():
    table, y = planted_table(200, 8, informative=2, seed=4)
    classifier = spca_fit(table, y, alpha=0.5, m=1, jobs=1)
    assert set(classifier.pca.names) == {"x0", "x1"}
    accuracy = np.mean((spca_predict(classifier, table) >= 0.5) == y)
    assert accuracy > 0.7


def test_univariate_filter_with_zero_alpha_keeps_all():
    table, y = planted_table(40, 3, seed=9)
    np.testing.assert_array_equal(univariate_filter(standardize(table).matrix, y, 0.0, jobs=1), [0, 1, 2])


def test_too_few_survivors():
    table, y = planted_table(60, 3, seed=1)
    with pytest.raises(TooFewSurvivorsError) as excinfo:
        spca_fit(table, y, alpha=100.0, m=1, jobs=1)
    assert excinfo.value.survivors == 0


def test_constant_columns():
    table = pd.DataFrame({"a": [1.0] * 6, "b": [2.0] * 6})
    with pytest.raises(AllColumnsDegenerateError):
        standardize(table)
    table["c"] = [0.1, 0.5, 0.2, 0.9, 0.4, 0.3]
    standardized = standardize(table)
    assert standardized.names == ("c",)
    np.testing.assert_allclose(standardized.destandardize()[:, 0], table["c"])


def test_prediction_requires_training_features():
    table, y = planted_table(60, 3, seed=3)
    classifier = spca_fit(table, y, alpha=0.0, m=2, jobs=1)
    with pytest.raises(MissingFeatureError):
        spca_predict(classifier, table.drop(columns=["x1"]))
    shuffled = table[["x2", "x0", "x1"]]
    np.testing.assert_allclose(spca_predict(classifier, shuffled), spca_predict(classifier, table))


def test_invalid_arguments():
    table, y = planted_table(20, 3, seed=3)
    with pytest.raises(InputError):
        spca_fit(table, y, alpha=0.0, m=0, jobs=1)
    with pytest.raises(InputError):
        spca_fit(table, np.zeros(20), alpha=0.0, m=1, jobs=1)


def test_component_report():
    table, y = planted_table(120, 6, informative=2, seed=7, shift=2.5)
    classifier = spca_fit(table, y, alpha=0.3, m=1, jobs=1)
    report = component_report(classifier, table, y, top=3)
    assert set(report) == {"alpha", "m", "survivors", "scree", "components"}
    (component,) = report["components"]
    assert component["component"] == 1
    assert len(component["top_loadings"]) <= 3
    assert component["top_loadings"][0]["feature"] in {"x0", "x1"}
    assert component["test"] == "mann-whitney rank-sum"
    assert 0 <= component["p"] <= 1
    assert component["median_injured"] != component["median_healthy"]


def test_spca_finds_planted_signal_in_synthetic_weeks():
    cohort = synth_generate(WEEKLY_COHORT, seed=21)
    weekly = aggregate_weekly(cohort.sessions, cohort.events, "B", season_start=WEEKLY_COHORT.season_start)
    table, y = weekly.features(), weekly.labels()
    assert 10 <= y.sum() < len(y)

    classifier = spca_fit(table, y, alpha=0.5, m=1, jobs=1)
    lead = int(np.argmax(np.abs(classifier.pca.loadings[0])))
    assert classifier.pca.names[lead] in planted_features(WEEKLY_COHORT)

    report = kfold_cv(lambda: SpcaModel(0.5, 1), table, y, CvPlan(repeats=10, folds=10, seed=1), jobs=1)
    assert report.aggregate["kappa"].mean >= 0.1
