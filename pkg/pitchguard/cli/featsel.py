"""Команда featsel: частота выживания признаков в CFS/GA по фолдам."""
import argparse
import logging
from pathlib import Path

import pandas as pd

from pitchguard.cli.app import RunContext
from pitchguard.core.errors import MissingColumnError
from pitchguard.models.configs import GaConfig
from pitchguard.services.featsel import cv_survival

logger = logging.getLogger(__name__)


def featsel_command(args: argparse.Namespace, context: RunContext) -> None:
    (cfg,) = context.load(GaConfig)
    path = Path(args.data)
    if not path.is_file():
        raise FileNotFoundError(f"Файл не найден: {path}")
    frame = pd.read_csv(path)
    if args.class_column not in frame.columns:
        raise MissingColumnError(f"{path}: отсутствует колонка класса '{args.class_column}'", name=args.class_column)

    table = frame.drop(columns=[args.class_column])
    survival = cv_survival(table, frame[args.class_column].to_numpy(), cfg, folds=args.folds, jobs=context.jobs)
    logger.info(
        "Отбор признаков: %d из %d признаков выжили хотя бы в одном фолде",
        int((survival["survival_fraction"] > 0).sum()),
        len(survival),
    )
    context.emit_table(survival)


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("featsel", parents=[common], help="отбор признаков CFS + генетический алгоритм")
    parser.add_argument("--data", required=True, help="CSV с признаками и колонкой класса")
    parser.add_argument("--class", dest="class_column", required=True, help="имя колонки класса")
    parser.add_argument("--folds", type=int, default=10, help="число фолдов кросс-валидации")
    parser.set_defaults(handler=featsel_command)
