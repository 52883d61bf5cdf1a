"""
Обобщённые линейные модели: пуассоновская регрессия (log), логистическая
регрессия с L2-штрафом (logit) и линейная регрессия. Подгонка методом IRLS
с уменьшением шага, диагностика: остатки девиации, робастные ошибки Уайта,
расстояние Кука по честному leave-one-out, тест отношения правдоподобий.
"""
import logging
import re
from dataclasses import dataclass, field
from functools import partial
from typing import Literal, Optional

import numpy as np
import pandas as pd
from scipy import special, stats

from pitchguard.core.config import settings
from pitchguard.core.errors import (
    InputError,
    MissingColumnError,
    NotNestedError,
    RankDeficientError,
    RefitFailureError,
)
from pitchguard.tasks.parallel import run_parallel

logger = logging.getLogger(__name__)

INTERCEPT = "(Intercept)"
Family = Literal["poisson", "binomial", "gaussian"]


@dataclass(frozen=True)
class DesignMatrix:
    """Матрица плана n x k со столбцом свободного члена и картой one-hot групп."""

    matrix: np.ndarray
    columns: tuple[str, ...]
    groups: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def has_intercept(self) -> bool:
        return INTERCEPT in self.columns


@dataclass(frozen=True)
class GlmFit:
    family: str
    coefficients: np.ndarray
    fitted: np.ndarray
    deviance: float
    residuals: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    columns: tuple[str, ...]
    lam: float = 0.0
    design: np.ndarray = field(default=None, repr=False)
    response: np.ndarray = field(default=None, repr=False)

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        return _inverse_link(self.family, np.asarray(matrix, dtype=float) @ self.coefficients)

    def summary(self) -> dict:
        return {
            "family": self.family,
            "coefficients": dict(zip(self.columns, map(float, self.coefficients))),
            "deviance": self.deviance,
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "iterations": self.iterations,
            "lambda": self.lam,
        }


@dataclass(frozen=True)
class LrTest:
    chi2: float
    df: int
    p: float


def _parse_formula(formula: str) -> tuple[str, list[str]]:
    match = re.fullmatch(r"\s*([^~\s]+)\s*~\s*(.+?)\s*", formula)
    if not match:
        raise InputError(f"Некорректная формула: '{formula}' (ожидается 'y ~ a + b')")
    response, rhs = match.groups()
    terms = [term.strip() for term in rhs.split("+") if term.strip()]
    if terms == ["1"]:
        return response, []
    return response, [term for term in terms if term != "1"]


def design_matrix(frame: pd.DataFrame, formula: str) -> tuple[DesignMatrix, np.ndarray]:
    """
    Строит матрицу плана по формуле 'y ~ a + b' ('y ~ 1' - только свободный член).
    Нечисловые признаки кодируются one-hot, базовый уровень - лексикографически первый.
    """
    response, terms = _parse_formula(formula)
    for name in [response] + terms:
        if name not in frame.columns:
            raise MissingColumnError(f"В данных нет колонки '{name}'", name=name)

    blocks = [pd.Series(1.0, index=frame.index, name=INTERCEPT)]
    groups: dict[str, tuple[str, ...]] = {}
    for term in terms:
        column = frame[term]
        numeric = pd.to_numeric(column, errors="coerce")
        if numeric.notna().all():
            blocks.append(numeric.astype(float).rename(term))
            continue
        levels = sorted(column.astype(str).unique())
        dummies = [
            (column.astype(str) == level).astype(float).rename(f"{term}[{level}]") for level in levels[1:]
        ]
        groups[term] = tuple(d.name for d in dummies)
        blocks.extend(dummies)

    table = pd.concat(blocks, axis=1)
    zero = [name for name in table.columns if not table[name].any()]
    if zero:
        raise RankDeficientError(f"Нулевые столбцы в матрице плана: {', '.join(zero)}", columns=zero)
    y = pd.to_numeric(frame[response], errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(y)):
        raise InputError(f"Отклик '{response}' содержит нечисловые значения")
    return DesignMatrix(matrix=table.to_numpy(dtype=float), columns=tuple(table.columns), groups=groups), y


def _as_design(x: DesignMatrix | np.ndarray) -> DesignMatrix:
    if isinstance(x, DesignMatrix):
        return x
    matrix = np.atleast_2d(np.asarray(x, dtype=float))
    columns = tuple(
        INTERCEPT if j == 0 and np.all(matrix[:, 0] == 1) else f"x{j}" for j in range(matrix.shape[1])
    )
    return DesignMatrix(matrix=matrix, columns=columns)


def _inverse_link(family: str, eta: np.ndarray) -> np.ndarray:
    if family == "poisson":
        return np.exp(np.clip(eta, -700, 700))
    if family == "binomial":
        return special.expit(eta)
    return eta


def _variance(family: str, mu: np.ndarray) -> np.ndarray:
    if family == "poisson":
        return mu
    if family == "binomial":
        return mu * (1 - mu)
    return np.ones_like(mu)


def unit_deviance(family: str, y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    if family == "poisson":
        return 2 * (special.xlogy(y, y) - special.xlogy(y, mu) - (y - mu))
    if family == "binomial":
        return -2 * (special.xlogy(y, mu) + special.xlogy(1 - y, 1 - mu))
    return (y - mu) ** 2


def _log_likelihood(family: str, y: np.ndarray, mu: np.ndarray) -> float:
    if family == "poisson":
        return float(np.sum(special.xlogy(y, mu) - mu - special.gammaln(y + 1)))
    if family == "binomial":
        return float(np.sum(special.xlogy(y, mu) + special.xlogy(1 - y, 1 - mu)))
    n = len(y)
    sigma2 = np.sum((y - mu) ** 2) / n
    if sigma2 == 0:
        return float("inf")
    return float(-n / 2 * (np.log(2 * np.pi * sigma2) + 1))


def _penalty(design: DesignMatrix) -> np.ndarray:
    return np.diag([0.0 if name == INTERCEPT else 1.0 for name in design.columns])


def _check_rank(design: DesignMatrix) -> None:
    n, k = design.shape
    if n < k or np.linalg.matrix_rank(design.matrix) < k:
        raise RankDeficientError(f"Матрица плана {n}x{k} не полного ранга", columns=list(design.columns))


def _build_fit(family: str, design: DesignMatrix, y: np.ndarray, beta: np.ndarray, converged: bool,
               iterations: int, lam: float) -> GlmFit:
    mu = _inverse_link(family, design.matrix @ beta)
    unit = unit_deviance(family, y, mu)
    residuals = np.sign(y - mu) * np.sqrt(np.maximum(unit, 0))
    return GlmFit(
        family=family,
        coefficients=beta,
        fitted=mu,
        deviance=float(np.sum(residuals**2)),
        residuals=residuals,
        log_likelihood=_log_likelihood(family, y, mu),
        converged=converged,
        iterations=iterations,
        columns=design.columns,
        lam=lam,
        design=design.matrix,
        response=y,
    )


def irls(design: DesignMatrix, y: np.ndarray, family: Family, lam: float = 0.0) -> GlmFit:
    """
    IRLS для канонической связи с L2-штрафом lam*||beta_-0||^2 (свободный член не штрафуется).

    Остановка: |dD| / (|D| + 0.1) < IRLS_TOL или IRLS_MAX_ITER итераций.
    Если штрафованная девиация выросла, шаг делится пополам (до IRLS_MAX_HALVINGS раз).
    """
    x = design.matrix
    mask = np.diag(_penalty(design))
    penalty = 2 * lam * np.diag(mask)
    beta = np.zeros(x.shape[1])

    # Штрафованная девиация: D + 2*lam*||beta_-0||^2
    def objective(b: np.ndarray) -> float:
        mu = _inverse_link(family, x @ b)
        return float(np.sum(unit_deviance(family, y, mu)) + 2 * lam * np.sum(mask * b**2))

    current = objective(beta)
    converged = False
    iteration = 0
    for iteration in range(1, settings.IRLS_MAX_ITER + 1):
        eta = x @ beta
        mu = _inverse_link(family, eta)
        weights = np.maximum(_variance(family, mu), 1e-300)
        working = eta + (y - mu) / weights
        hessian = x.T @ (weights[:, None] * x) + penalty
        try:
            proposal = np.linalg.solve(hessian, x.T @ (weights * working))
        except np.linalg.LinAlgError:
            logger.warning("IRLS (%s): вырожденная система на итерации %d", family, iteration)
            break

        candidate = objective(proposal)
        halvings = 0
        while not np.isfinite(candidate) or candidate > current:
            if halvings >= settings.IRLS_MAX_HALVINGS:
                break
            proposal = (beta + proposal) / 2
            candidate = objective(proposal)
            halvings += 1

        change = abs(candidate - current) / (abs(candidate) + 0.1)
        beta, current = proposal, candidate
        if change < settings.IRLS_TOL:
            converged = True
            break

    fit = _build_fit(family, design, y, beta, converged, iteration, lam)
    if family == "binomial" and lam == 0 and np.any((fit.fitted < 1e-10) | (fit.fitted > 1 - 1e-10)):
        logger.warning("Логистическая регрессия: признаки разделения классов, коэффициенты расходятся")
        fit = _build_fit(family, design, y, beta, False, iteration, lam)
    if not fit.converged:
        logger.warning("IRLS (%s) не сошёлся за %d итераций", family, iteration)
    return fit


def poisson_fit(x: DesignMatrix | np.ndarray, y) -> GlmFit:
    """Пуассоновская регрессия с логарифмической связью."""
    design = _as_design(x)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(np.mod(y, 1) != 0):
        raise InputError("Отклик пуассоновской регрессии должен быть целым неотрицательным")
    _check_rank(design)
    return irls(design, y, "poisson")


def ridge_logistic_fit(x: DesignMatrix | np.ndarray, y, lam: float = 0.0) -> GlmFit:
    """Логистическая регрессия, максимизирует l(beta) - lam*||beta_-0||^2."""
    design = _as_design(x)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise InputError("Отклик логистической регрессии должен быть 0/1")
    if lam < 0:
        raise InputError(f"Параметр штрафа должен быть неотрицательным: {lam}")
    if lam == 0:
        _check_rank(design)
    return irls(design, y, "binomial", lam)


def linear_fit(x: DesignMatrix | np.ndarray, y) -> GlmFit:
    """Обычный МНК."""
    design = _as_design(x)
    y = np.asarray(y, dtype=float)
    _check_rank(design)
    beta = np.linalg.lstsq(design.matrix, y, rcond=None)[0]
    return _build_fit("gaussian", design, y, beta, True, 1, 0.0)


def refit(fit: GlmFit, design: DesignMatrix, y: np.ndarray) -> GlmFit:
    """Повторная подгонка той же модели (семейство, lam) на других данных."""
    if fit.family == "poisson":
        return poisson_fit(design, y)
    if fit.family == "binomial":
        return ridge_logistic_fit(design, y, fit.lam)
    return linear_fit(design, y)


def deviance_residuals(fit: GlmFit) -> np.ndarray:
    """Знаковые остатки девиации, сумма квадратов равна девиации."""
    return fit.residuals


def white_robust_se(fit: GlmFit, x: Optional[np.ndarray] = None) -> np.ndarray:
    """Ошибки Уайта: корни диагонали (X'X)^-1 X' diag(e^2) X (X'X)^-1, e = y - mu."""
    matrix = fit.design if x is None else np.asarray(x, dtype=float)
    residuals = fit.response - fit.fitted
    gram = matrix.T @ matrix
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise RankDeficientError("X'X вырождена, робастные ошибки не определены")
    bread = np.linalg.inv(gram)
    meat = matrix.T @ (residuals[:, None] ** 2 * matrix)
    return np.sqrt(np.diag(bread @ meat @ bread))


def classical_se(fit: GlmFit) -> np.ndarray:
    """Стандартные ошибки по информации Фишера (для МНК - sigma^2 (X'X)^-1)."""
    matrix = fit.design
    if fit.family == "gaussian":
        n, k = matrix.shape
        sigma2 = np.sum((fit.response - fit.fitted) ** 2) / max(n - k, 1)
        information = matrix.T @ matrix / sigma2 if sigma2 > 0 else None
    else:
        weights = _variance(fit.family, fit.fitted)
        mask = np.array([0.0 if name == INTERCEPT else 1.0 for name in fit.columns])
        information = matrix.T @ (weights[:, None] * matrix) + 2 * fit.lam * np.diag(mask)
    if information is None:
        return np.zeros(matrix.shape[1])
    try:
        return np.sqrt(np.diag(np.linalg.inv(information)))
    except np.linalg.LinAlgError as e:
        raise RankDeficientError(f"Информационная матрица вырождена: {e}") from e


def wald_table(fit: GlmFit, se: np.ndarray) -> list[dict]:
    """Коэффициенты, ошибки, z и двусторонние p-значения Вальда."""
    rows = []
    for name, beta, error in zip(fit.columns, fit.coefficients, se):
        z = float(beta / error) if error > 0 else None
        rows.append(
            {
                "term": name,
                "estimate": float(beta),
                "se": float(error),
                "z": z,
                "p": float(2 * stats.norm.sf(abs(z))) if z is not None else None,
            }
        )
    return rows


def _loo_fitted(fit: GlmFit, i: int) -> np.ndarray:
    keep = np.arange(len(fit.response)) != i
    try:
        reduced = refit(fit, DesignMatrix(matrix=fit.design[keep], columns=fit.columns), fit.response[keep])
    except Exception as e:
        raise RefitFailureError(f"Не удалось переобучить модель без наблюдения {i}: {e}", index=i) from e
    return reduced.predict(fit.design)


def cooks_distance(fit: GlmFit, jobs: Optional[int] = None) -> np.ndarray:
    """
    D_i = sum_j (Y_j - Y_j(i))^2 / (k * MSE), где Y_j(i) - прогноз модели,
    переобученной без наблюдения i, MSE = sum e^2 / (n - k).
    """
    n, k = fit.design.shape
    if n <= k:
        raise InputError(f"Расстояние Кука требует n > k ({n} <= {k})")
    mse = float(np.sum((fit.response - fit.fitted) ** 2) / (n - k))
    if mse == 0:
        raise InputError("Расстояние Кука не определено: остатки модели равны нулю")
    loo = run_parallel(partial(_loo_fitted, fit), range(n), jobs=jobs)
    return np.array([np.sum((fit.fitted - fitted) ** 2) for fitted in loo]) / (k * mse)


def lr_test(full: GlmFit, reduced: GlmFit) -> LrTest:
    """chi2 = 2(l_full - l_reduced), df = k_full - k_reduced."""
    if (
        full.family != reduced.family
        or not set(reduced.columns) <= set(full.columns)
        or len(full.response) != len(reduced.response)
    ):
        raise NotNestedError("Модели не вложены: тест отношения правдоподобий не определён")
    chi2 = 2 * (full.log_likelihood - reduced.log_likelihood)
    df = len(full.columns) - len(reduced.columns)
    p = 1.0 if chi2 <= 0 or df == 0 else float(stats.chi2.sf(chi2, df))
    return LrTest(chi2=float(max(chi2, 0.0)), df=df, p=p)


def omnibus_test(fit: GlmFit) -> LrTest:
    """Сравнение модели с моделью только со свободным членом."""
    if INTERCEPT not in fit.columns:
        raise NotNestedError("Для омнибус-теста нужна модель со свободным членом")
    design = DesignMatrix(matrix=np.ones((len(fit.response), 1)), columns=(INTERCEPT,))
    return lr_test(fit, refit(fit, design, fit.response))
