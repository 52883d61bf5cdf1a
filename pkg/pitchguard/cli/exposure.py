"""Команды по записям нагрузки: dtw, gram, gp-sweep."""
import argparse
import logging
from typing import Optional

import pandas as pd

from pitchguard.cli.app import RunContext, positive_float, read_column
from pitchguard.models.configs import FilterConfig, SweepConfig
from pitchguard.models.exposure import ExposureRecord
from pitchguard.models.kernel import ExposureAvg
from pitchguard.services.dtw import dtw_distance
from pitchguard.services.evaluation import sweep_frame, truncation_sweep
from pitchguard.services.ingest import (
    describe_cohort,
    fill_missing_days,
    filter_subjects,
    load_exposure_csv,
    load_injuries_csv,
    load_roster_csv,
)
from pitchguard.services.kernels import GramMatrix, dtw_rbf_from_distances, gram, pairwise_dtw, psd_probe
from pitchguard.services.storage import write_csv

logger = logging.getLogger(__name__)

GRID_COLUMNS = ["t_minus_a", "gamma", "epsilon", "ccc", "mae", "accepted", "reason", "min_variance"]


def load_cohort(
    exposure: str, injuries: Optional[str], rules: FilterConfig, roster: Optional[str] = None
) -> list[ExposureRecord]:
    """Записи нагрузки с исходами по журналу травм (без журнала - все цензурированы)."""
    records = load_exposure_csv(exposure)
    if injuries is None:
        return [fill_missing_days(r) for r in records]
    positions = load_roster_csv(roster) if roster else None
    selected = filter_subjects(records, load_injuries_csv(injuries), rules, positions)
    return [fill_missing_days(r) for r in selected]


def dtw_command(args: argparse.Namespace, context: RunContext) -> None:
    r = read_column(args.a, args.column)
    l = read_column(args.b, args.column)
    result = dtw_distance(r.to_numpy(), l.to_numpy())
    logger.info("DTW(%d, %d) = %g, длина пути %d", len(r), len(l), result.distance, len(result.path))
    if args.path_out:
        write_csv(args.path_out, pd.DataFrame(result.path, columns=["i", "j"]))
    context.emit({"command": "dtw", "distance": result.distance, "n": len(r), "m": len(l), "path_length": len(result.path)})


def gram_command(args: argparse.Namespace, context: RunContext) -> None:
    (rules,) = context.load(FilterConfig)
    records = load_cohort(args.exposure, args.injuries, rules, args.roster)
    subjects = [r.subject_id for r in records]
    if args.channel == "average":
        matrix = gram(ExposureAvg(gamma=args.gamma), records, jobs=context.jobs)
    else:
        series = [getattr(r, args.channel) for r in records]
        distances = pairwise_dtw(series, jobs=context.jobs)
        matrix = GramMatrix(entries=dtw_rbf_from_distances(distances, args.gamma))
    probe = psd_probe(matrix)
    logger.info("Матрица Грама %dx%d: min собственное значение %.3e, PSD=%s", matrix.size, matrix.size,
                probe.min_eigenvalue, probe.psd)
    frame = pd.DataFrame(matrix.entries, columns=subjects)
    frame.insert(0, "subject_id", subjects)
    context.emit_table(frame)


def _grid_frame(results: dict) -> pd.DataFrame:
    rows = []
    for a, result in results.items():
        for row in result.rows:
            rows.append(
                {
                    "t_minus_a": a,
                    "gamma": row.gamma,
                    "epsilon": row.epsilon,
                    "ccc": row.metrics.get("ccc"),
                    "mae": row.metrics.get("mae"),
                    "accepted": row.accepted,
                    "reason": row.reason,
                    "min_variance": row.min_variance,
                }
            )
    return pd.DataFrame(rows, columns=GRID_COLUMNS)


def gp_sweep_command(args: argparse.Namespace, context: RunContext) -> None:
    rules, sweep = context.load(FilterConfig, SweepConfig)
    include_censored = rules.include_censored or args.include_censored
    records = load_cohort(args.exposure, args.injuries, rules, args.roster)
    table, results = truncation_sweep(records, sweep, include_censored=include_censored, jobs=context.jobs)

    units = {}
    for a, result in results.items():
        units[str(a)] = {
            "best": result.best.model_dump(mode="json"),
            "accepted": result.accepted_count,
            "rejected": len(result.rows) - result.accepted_count,
            "best_by_metric": {name: result.rows[index].model_dump(mode="json")
                               for name, index in result.best_by_metric.items()},
        }

    if args.table:
        write_csv(args.table, sweep_frame(table))
    if args.grid:
        write_csv(args.grid, _grid_frame(results))
    context.emit(
        {
            "command": "gp-sweep",
            "cohort": describe_cohort(records),
            "include_censored": include_censored,
            "grid_size": {"gamma": int(len(sweep.gammas())), "epsilon": int(len(sweep.epsilons()))},
            "truncation": table.model_dump(mode="json")["rows"],
            "units": units,
        }
    )


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("dtw", parents=[common], help="DTW-расстояние двух рядов")
    parser.add_argument("--a", required=True, help="CSV с первым рядом")
    parser.add_argument("--b", required=True, help="CSV со вторым рядом")
    parser.add_argument("--column", default=None, help="имя колонки (по умолчанию первая)")
    parser.add_argument("--path-out", default=None, help="CSV оптимального пути (i,j)")
    parser.set_defaults(handler=dtw_command)

    parser = subparsers.add_parser("gram", parents=[common], help="матрица Грама DTW-ядра по записям нагрузки")
    parser.add_argument("--exposure", required=True)
    parser.add_argument("--injuries", default=None)
    parser.add_argument("--roster", default=None)
    parser.add_argument("--gamma", type=positive_float, required=True)
    parser.add_argument("--channel", choices=["average", "training", "match"], default="average")
    parser.set_defaults(handler=gram_command)

    parser = subparsers.add_parser("gp-sweep", parents=[common], help="перебор сетки ГП и усечение T-a")
    parser.add_argument("--exposure", required=True)
    parser.add_argument("--injuries", required=True)
    parser.add_argument("--roster", default=None)
    parser.add_argument("--include-censored", action="store_true", help="обучать на цензурированных игроках")
    parser.add_argument("--table", default=None, help="CSV t_minus_a,ccc,mae,gamma,epsilon")
    parser.add_argument("--grid", default=None, help="CSV всех строк сетки по каждому a")
    parser.set_defaults(handler=gp_sweep_command)
