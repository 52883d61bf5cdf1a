"""Служебные команды: metrics, synth, config."""
import argparse
import logging
import sys
from pathlib import Path

from pitchguard.cli.app import ALL_CONFIGS, RunContext, print_version_and_config, read_column
from pitchguard.core.errors import InputError
from pitchguard.models.configs import FilterConfig, SynthConfig
from pitchguard.models.reports import MetricRow
from pitchguard.services.ingest import describe_cohort, filter_subjects
from pitchguard.services.metrics import classification_metrics, regression_metrics
from pitchguard.services.synth import synth_generate, write_dataset

logger = logging.getLogger(__name__)


def _label(value):
    # Целочисленные метки из CSV приводим к int, чтобы positive_label=1 совпадал
    return int(value) if isinstance(value, float) and value.is_integer() else value


def metrics_command(args: argparse.Namespace, context: RunContext) -> None:
    numeric = args.task == "regress"
    pred = read_column(args.pred, args.column, numeric=numeric)
    truth = read_column(args.truth, args.column, numeric=numeric)
    if numeric:
        values = regression_metrics(pred.to_numpy(), truth.to_numpy())
    else:
        positive = int(args.positive_label) if args.positive_label.lstrip("-").isdigit() else args.positive_label
        values = classification_metrics(
            [_label(v) for v in pred.tolist()], [_label(v) for v in truth.tolist()], positive_label=positive
        )
    row = MetricRow(unit=args.unit, metrics=values)
    context.emit({"command": "metrics", "task": args.task, "n": int(len(truth)), **row.model_dump(mode="json")})


def synth_command(args: argparse.Namespace, context: RunContext) -> None:
    if context.out is None:
        raise InputError("Для synth нужен каталог --out")
    cfg, rules = context.load(SynthConfig, FilterConfig)
    seed = context.effective_seed()
    cohort = synth_generate(cfg, seed)
    files = write_dataset(cohort, context.out)
    selected = filter_subjects(cohort.records, cohort.events, rules, cohort.positions)
    context.emit(
        {
            "command": "synth",
            "files": {name: path.name for name, path in files.items()},
            "sessions": len(cohort.sessions),
            "injury_events": len(cohort.events),
            "cohort": describe_cohort(selected, cohort.events),
        },
        out=Path(context.out) / "synth.json",
    )


def config_command(args: argparse.Namespace, context: RunContext) -> None:
    configs = context.load(*ALL_CONFIGS)
    sys.stdout.write(print_version_and_config(configs, seed=context.effective_seed()))


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("metrics", parents=[common], help="метрики прогноза по двум CSV")
    parser.add_argument("--pred", required=True)
    parser.add_argument("--truth", required=True)
    parser.add_argument("--column", default=None, help="имя колонки (по умолчанию первая)")
    parser.add_argument("--task", choices=["regress", "classify"], default="regress")
    parser.add_argument("--positive-label", default="1")
    parser.add_argument("--unit", default="all", help="подпись строки метрик")
    parser.set_defaults(handler=metrics_command)

    parser = subparsers.add_parser("synth", parents=[common], help="синтетическая когорта в каталог --out")
    parser.set_defaults(handler=synth_command)

    parser = subparsers.add_parser("config", parents=[common], help="версия и итоговая конфигурация")
    parser.set_defaults(handler=config_command)
