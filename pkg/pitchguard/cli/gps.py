"""Команды по недельным GPS-таблицам: spca, cv."""
import argparse
import datetime as dt
import logging

import numpy as np

from pitchguard.cli.app import RunContext
from pitchguard.core.errors import ConfigError
from pitchguard.models.configs import CvPlan, SpcaGrid
from pitchguard.models.gps import WeeklyFrame
from pitchguard.services.evaluation import compare_models, spca_grid
from pitchguard.services.ingest import aggregate_weekly, load_gps_csv, load_injuries_csv
from pitchguard.services.spca import component_report, spca_fit

logger = logging.getLogger(__name__)


def parse_grid(text: str, integer: bool = False) -> list:
    """
    Сетка из строки: 'a,b,c' или 'start:stop:step' (stop включается).
    """
    cast = int if integer else float
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(count)]
            return [int(round(v)) for v in values] if integer else [round(v, 12) for v in values]
        return [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"Некорректная сетка '{text}': ожидается 'a,b,c' или 'start:stop:step'") from None


def _weekly(args: argparse.Namespace, approach: str) -> WeeklyFrame:
    return aggregate_weekly(load_gps_csv(args.gps), load_injuries_csv(args.injuries), approach, args.season_start)


def _grid(args: argparse.Namespace, base: SpcaGrid) -> SpcaGrid:
    update = {}
    if args.alpha_grid:
        update["alpha_grid"] = parse_grid(args.alpha_grid)
    if args.m_grid:
        update["m_grid"] = parse_grid(args.m_grid, integer=True)
    if args.approach:
        update["approach"] = args.approach
    return SpcaGrid.model_validate({**base.model_dump(), **update})


def spca_command(args: argparse.Namespace, context: RunContext) -> None:
    plan, base = context.load(CvPlan, SpcaGrid)
    grid = _grid(args, base)
    context.configs = (plan, grid)
    weekly = _weekly(args, grid.approach)
    table, y = weekly.features(), weekly.labels()

    rows = spca_grid(table, y, grid, plan, jobs=context.jobs)
    feasible = [row for row in rows if row["kappa_mean"] is not None]
    best, components = None, None
    if feasible:
        best = max(feasible, key=lambda row: row["kappa_mean"])
        classifier = spca_fit(table, y, best["alpha"], best["m"], jobs=context.jobs)
        components = component_report(classifier, table, y)
        logger.info("SPCA: лучшая пара alpha=%g m=%d, каппа %.4f", best["alpha"], best["m"], best["kappa_mean"])
    else:
        logger.warning("SPCA: ни одна пара (alpha, m) не допустима на всех фолдах")

    context.emit(
        {
            "command": "spca",
            "approach": grid.approach,
            "weeks": len(weekly),
            "injured_weeks": int(y.sum()),
            "features": len(weekly.feature_names),
            "kappa_grid": rows,
            "best": best,
            "model": components,
        }
    )


def cv_command(args: argparse.Namespace, context: RunContext) -> None:
    plan, base = context.load(CvPlan, SpcaGrid)
    grid = _grid(args, base)
    context.configs = (plan, grid)
    weekly = _weekly(args, grid.approach)
    comparison = compare_models(
        weekly.features(), weekly.labels(), plan, spca=None if args.no_spca else grid, jobs=context.jobs
    )
    context.emit(
        {
            "command": "cv",
            "approach": grid.approach,
            "weeks": len(weekly),
            "models": {
                name: {"setting": entry["setting"], "report": entry["report"].model_dump(mode="json")}
                for name, entry in comparison.items()
            },
        }
    )


def _add_weekly_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gps", required=True, help="CSV GPS-сессий")
    parser.add_argument("--injuries", required=True, help="CSV журнала травм")
    parser.add_argument("--approach", choices=["A", "B"], default=None, help="A - только травмированные, B - все")
    parser.add_argument("--season-start", type=dt.date.fromisoformat, default=None, help="дата дня 1 сезона (YYYY-MM-DD)")
    parser.add_argument("--alpha-grid", default=None, help="сетка alpha: 'a,b,c' или 'start:stop:step'")
    parser.add_argument("--m-grid", default=None, help="сетка числа компонент")


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("spca", parents=[common], help="supervised PCA по недельной GPS-таблице")
    _add_weekly_arguments(parser)
    parser.set_defaults(handler=spca_command)

    parser = subparsers.add_parser("cv", parents=[common], help="сравнение моделей повторной кросс-валидацией")
    _add_weekly_arguments(parser)
    parser.add_argument("--no-spca", action="store_true", help="не включать SPCA в сравнение")
    parser.set_defaults(handler=cv_command)
