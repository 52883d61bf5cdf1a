import dataclasses
import math

import numpy as np
import pandas as pd
import pytest
from scipy import special

from pitchguard.core.errors import InputError, MissingColumnError, NotNestedError, RankDeficientError
from pitchguard.services.glm import (
    INTERCEPT,
    classical_se,
    cooks_distance,
    deviance_residuals,
    design_matrix,
    linear_fit,
    lr_test,
    omnibus_test,
    poisson_fit,
    ridge_logistic_fit,
    wald_table,
    white_robust_se,
)

X_SMALL = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
Y_SMALL = np.array([1.0, 3.0, 2.0])

COUNTS_X = np.arange(6, dtype=float)
COUNTS_Y = np.array([1.0, 1.0, 2.0, 4.0, 5.0, 9.0])


def _counts_design():
    return np.column_stack([np.ones(6), COUNTS_X])


def test_poisson_intercept_is_log_mean():
    fit = poisson_fit(np.ones((3, 1)), [1, 2, 3])
    assert fit.columns == (INTERCEPT,)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(math.log(2.0), abs=1e-8)


def test_poisson_score_equations():
    design = _counts_design()
    fit = poisson_fit(design, COUNTS_Y)
    assert fit.converged
    np.testing.assert_allclose(design.T @ (COUNTS_Y - fit.fitted), 0.0, atol=1e-6)
    assert fit.coefficients[1] > 0


def test_poisson_rejects_non_counts():
    with pytest.raises(InputError):
        poisson_fit(np.ones((2, 1)), [1.0, -1.0])
    with pytest.raises(InputError):
        poisson_fit(np.ones((2, 1)), [1.5, 2.0])


def test_deviance_residuals_square_to_deviance():
    fit = poisson_fit(_counts_design(), COUNTS_Y)
    residuals = deviance_residuals(fit)
    assert np.sum(residuals**2) == pytest.approx(fit.deviance)
    assert np.all(np.sign(residuals) == np.sign(COUNTS_Y - fit.fitted))


def test_linear_fit_and_standard_errors():
    fit = linear_fit(X_SMALL, Y_SMALL)
    np.testing.assert_allclose(fit.coefficients, [1.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(white_robust_se(fit), [math.sqrt(10.5 / 36), math.sqrt(4.5 / 36)], rtol=1e-10)
    np.testing.assert_allclose(classical_se(fit), [math.sqrt(1.25), math.sqrt(0.75)], rtol=1e-10)


def test_wald_table():
    fit = linear_fit(X_SMALL, Y_SMALL)
    table = wald_table(fit, classical_se(fit))
    assert [row["term"] for row in table] == [INTERCEPT, "x1"]
    assert table[1]["z"] == pytest.approx(0.5 / math.sqrt(0.75))
    assert 0 < table[1]["p"] < 1


def test_cooks_distance_matches_hat_matrix_form():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 10, size=12)
    design = np.column_stack([np.ones(12), x])
    y = 2.0 + 0.7 * x + rng.normal(0, 1.0, size=12)
    fit = linear_fit(design, y)

    hat = design @ np.linalg.inv(design.T @ design) @ design.T
    leverage = np.diag(hat)
    residuals = y - fit.fitted
    mse = np.sum(residuals**2) / (12 - 2)
    expected = residuals**2 * leverage / (2 * mse * (1 - leverage) ** 2)
    np.testing.assert_allclose(cooks_distance(fit, jobs=1), expected, rtol=1e-8)


def test_cooks_distance_needs_more_rows_than_columns():
    fit = linear_fit(np.array([[1.0, 0.0], [1.0, 1.0]]), [1.0, 3.0])
    with pytest.raises(InputError):
        cooks_distance(fit, jobs=1)


def test_omnibus_test_matches_chi_square_tail():
    fit = poisson_fit(_counts_design(), COUNTS_Y)
    mean = COUNTS_Y.mean()
    null_ll = np.sum(COUNTS_Y * np.log(mean) - mean - special.gammaln(COUNTS_Y + 1))
    chi2 = 2 * (fit.log_likelihood - null_ll)
    test = omnibus_test(fit)
    assert test.df == 1
    assert test.chi2 == pytest.approx(chi2, rel=1e-6)
    assert test.p == pytest.approx(special.gammaincc(0.5, chi2 / 2), rel=1e-6)


def test_lr_test_requires_nested_models():
    full = poisson_fit(_counts_design(), COUNTS_Y)
    linear = linear_fit(_counts_design(), COUNTS_Y)
    with pytest.raises(NotNestedError):
        lr_test(full, linear)
    shorter = poisson_fit(_counts_design()[:5], COUNTS_Y[:5])
    with pytest.raises(NotNestedError):
        lr_test(full, shorter)


def test_omnibus_requires_intercept():
    fit = poisson_fit(COUNTS_X[1:, None], COUNTS_Y[1:])
    with pytest.raises(NotNestedError):
        omnibus_test(fit)


def test_design_matrix_one_hot():
    frame = pd.DataFrame(
        {
            "y": [1, 0, 2, 3, 1, 0],
            "load": [10.0, 20.0, 15.0, 30.0, 12.0, 8.0],
            "position": ["mid", "def", "fwd", "mid", "def", "fwd"],
        }
    )
    design, y = design_matrix(frame, "y ~ load + position")
    assert design.columns == (INTERCEPT, "load", "position[fwd]", "position[mid]")
    assert design.groups == {"position": ("position[fwd]", "position[mid]")}
    np.testing.assert_array_equal(design.matrix[:, 2], [0, 0, 1, 0, 0, 1])
    np.testing.assert_array_equal(y, [1, 0, 2, 3, 1, 0])


def test_design_matrix_intercept_only_and_errors():
    frame = pd.DataFrame({"y": [1, 2, 3], "zero": [0.0, 0.0, 0.0]})
    design, _ = design_matrix(frame, "y ~ 1")
    assert design.columns == (INTERCEPT,)
    with pytest.raises(MissingColumnError):
        design_matrix(frame, "y ~ absent")
    with pytest.raises(RankDeficientError):
        design_matrix(frame, "y ~ zero")
    with pytest.raises(InputError):
        design_matrix(frame, "y = zero")


def test_rank_deficient_design():
    design = np.column_stack([np.ones(6), COUNTS_X, 2 * COUNTS_X])
    with pytest.raises(RankDeficientError):
        poisson_fit(design, COUNTS_Y)


def test_separated_logistic_does_not_converge():
    design = np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    fit = ridge_logistic_fit(design, y, 0.0)
    assert not fit.converged
    penalized = ridge_logistic_fit(design, y, 1.0)
    assert penalized.converged
    assert np.all(np.isfinite(penalized.coefficients))


def test_ridge_penalty_shrinks_slope():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(60)
    y = (x + rng.normal(0, 1.0, 60) > 0).astype(int)
    design = np.column_stack([np.ones(60), x])
    weak = ridge_logistic_fit(design, y, 0.01)
    strong = ridge_logistic_fit(design, y, 10.0)
    assert abs(strong.coefficients[1]) < abs(weak.coefficients[1])
    with pytest.raises(InputError):
        ridge_logistic_fit(design, y, -1.0)
    with pytest.raises(InputError):
        ridge_logistic_fit(design, y + 1, 0.0)


def test_huge_ridge_penalty_leaves_only_intercept():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((40, 2))
    y = (x[:, 0] + rng.normal(0, 1.0, 40) > 0.5).astype(int)
    fit = ridge_logistic_fit(np.column_stack([np.ones(40), x]), y, 1e8)
    assert fit.coefficients[0] == pytest.approx(special.logit(y.mean()), abs=1e-3)
    np.testing.assert_allclose(fit.coefficients[1:], 0.0, atol=1e-3)


def test_symmetric_classes_give_zero_intercept():
    x = np.array([-1.0, -1.0, 1.0, 1.0])
    y = ((x + 1) / 2).astype(int)
    fit = ridge_logistic_fit(np.column_stack([np.ones(4), x]), y, 1.0)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(0.0, abs=1e-8)
    assert fit.coefficients[1] > 0


def test_lr_test_critical_value_gives_five_percent():
    full = poisson_fit(_counts_design(), COUNTS_Y)
    reduced = poisson_fit(np.ones((6, 1)), COUNTS_Y)
    shifted = dataclasses.replace(reduced, log_likelihood=full.log_likelihood - 3.841 / 2)
    result = lr_test(full, shifted)
    assert result.df == 1
    assert result.chi2 == pytest.approx(3.841)
    assert result.p == pytest.approx(0.05, abs=1e-4)


def test_white_se_scales_with_residuals():
    rng = np.random.default_rng(12)
    design = np.column_stack([np.ones(30), rng.standard_normal(30)])
    fit = linear_fit(design, design @ [1.0, 2.0] + rng.standard_normal(30))
    base = white_robust_se(fit)
    for c in (3.0, -0.5):
        scaled = dataclasses.replace(fit, response=fit.fitted + c * (fit.response - fit.fitted))
        np.testing.assert_allclose(white_robust_se(scaled), abs(c) * base, rtol=1e-12)
