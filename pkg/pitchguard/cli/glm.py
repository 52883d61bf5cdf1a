"""Команда glm: пуассоновская, логистическая и линейная регрессия с диагностикой."""
import argparse
import logging
from pathlib import Path

import pandas as pd

from pitchguard.cli.app import RunContext
from pitchguard.services.glm import (
    INTERCEPT,
    classical_se,
    cooks_distance,
    deviance_residuals,
    design_matrix,
    linear_fit,
    omnibus_test,
    poisson_fit,
    ridge_logistic_fit,
    wald_table,
    white_robust_se,
)

logger = logging.getLogger(__name__)


def glm_command(args: argparse.Namespace, context: RunContext) -> None:
    path = Path(args.data)
    if not path.is_file():
        raise FileNotFoundError(f"Файл не найден: {path}")
    frame = pd.read_csv(path)
    design, y = design_matrix(frame, args.formula)

    if args.family == "poisson":
        fit = poisson_fit(design, y)
    elif args.family == "logistic":
        fit = ridge_logistic_fit(design, y, args.lam)
    else:
        fit = linear_fit(design, y)
    logger.info("GLM %s: n=%d, k=%d, девиация %.6g, сходимость %s", fit.family, len(y), len(fit.columns),
                fit.deviance, fit.converged)

    report = {
        "command": "glm",
        "formula": args.formula,
        "n": int(len(y)),
        "fit": fit.summary(),
        "coefficients": wald_table(fit, classical_se(fit)),
        "deviance_residuals": [float(value) for value in deviance_residuals(fit)],
    }
    if args.robust:
        report["robust_coefficients"] = wald_table(fit, white_robust_se(fit))
    if INTERCEPT in fit.columns and len(fit.columns) > 1:
        test = omnibus_test(fit)
        report["omnibus"] = {"chi2": test.chi2, "df": test.df, "p": test.p}
    if args.cooks:
        report["cooks_distance"] = [float(value) for value in cooks_distance(fit, jobs=context.jobs)]
    context.emit(report)


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("glm", parents=[common], help="обобщённая линейная модель по формуле")
    parser.add_argument("--family", choices=["poisson", "logistic", "gaussian"], required=True)
    parser.add_argument("--data", required=True, help="CSV с откликом и признаками")
    parser.add_argument("--formula", required=True, help="формула 'y ~ a + b' ('y ~ 1' - только свободный член)")
    parser.add_argument("--lambda", dest="lam", type=float, default=0.0, help="L2-штраф логистической регрессии")
    parser.add_argument("--robust", action="store_true", help="добавить робастные ошибки Уайта")
    parser.add_argument("--cooks", action="store_true", help="расстояния Кука через переобучение без наблюдения")
    parser.set_defaults(handler=glm_command)
