"""
Командная строка pitchguard: разбор аргументов, настройка логирования,
общий контекст запуска и запись отчётов.

Каждая группа команд (exposure, gps, glm, featsel, tools) регистрирует
свои подкоманды через register(); обработчик получает аргументы и контекст.
"""
import argparse
import logging
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
import scipy
import sklearn
from pydantic import BaseModel

from pitchguard import __version__
from pitchguard.core.config import config_echo, load_config, render_config, settings
from pitchguard.core.errors import InputError, MalformedRowError, MissingColumnError, PitchguardError
from pitchguard.models.configs import CvPlan, FilterConfig, GaConfig, SpcaGrid, SweepConfig, SynthConfig
from pitchguard.services.storage import dumps_json, write_csv, write_json

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
ALL_CONFIGS = (SynthConfig, FilterConfig, SweepConfig, GaConfig, CvPlan, SpcaGrid)


@dataclass
class RunContext:
    """Общие параметры запуска, доступные каждой подкоманде."""

    seed: Optional[int]
    jobs: Optional[int]
    config_path: Optional[str]
    out: Optional[str]
    invocation: list[str] = field(default_factory=list)
    configs: tuple[BaseModel, ...] = ()

    def load(self, *models: type[BaseModel]) -> tuple:
        """Загружает --config моделями команды; --seed переопределяет seed конфигурации."""
        configs = load_config(self.config_path, *models)
        if self.seed is not None:
            configs = tuple(
                config.model_copy(update={"seed": self.seed}) if "seed" in type(config).model_fields else config
                for config in configs
            )
        self.configs = configs
        return configs

    def effective_seed(self) -> int:
        if self.seed is not None:
            return self.seed
        for config in self.configs:
            if "seed" in type(config).model_fields:
                return config.seed
        return settings.SEED

    def metadata(self) -> dict[str, Any]:
        """Всё, что нужно для воспроизведения отчёта."""
        return {
            "version": __version__,
            "seed": self.effective_seed(),
            "invocation": self.invocation,
            "config": config_echo(self.configs),
        }

    def emit(self, payload: dict[str, Any], out: Optional[str | Path] = None) -> None:
        """Пишет JSON-отчёт в --out (атомарно) или в stdout."""
        report = {**payload, **self.metadata()}
        target = out or self.out
        if target is None:
            sys.stdout.write(dumps_json(report))
            return
        write_json(target, report)
        logger.info("Отчёт записан: %s", target)

    def emit_table(self, frame: pd.DataFrame, out: Optional[str | Path] = None) -> None:
        """Пишет CSV и рядом <имя>.meta.json с параметрами запуска."""
        target = out or self.out
        if target is None:
            sys.stdout.write(frame.to_csv(index=False, lineterminator="\n"))
            return
        target = Path(target)
        write_csv(target, frame)
        write_json(target.with_name(target.name + ".meta.json"), self.metadata())
        logger.info("Таблица записана: %s (%d строк)", target, len(frame))


def strip_jobs(argv: Sequence[str]) -> list[str]:
    """Аргументы без --jobs: число воркеров не влияет на результат."""
    result, skip = [], False
    for arg in argv:
        if skip:
            skip = False
            continue
        if arg == "--jobs":
            skip = True
            continue
        if arg.startswith("--jobs="):
            continue
        result.append(arg)
    return result


def print_version_and_config(configs: Optional[Iterable[BaseModel]] = None, seed: Optional[int] = None) -> str:
    """
    Версия, окружение и итоговая конфигурация. Служебные строки начинаются с '#',
    поэтому весь вывод снова читается как файл конфигурации.
    """
    configs = list(configs) if configs is not None else [model() for model in ALL_CONFIGS]
    header = [
        f"# pitchguard {__version__}",
        f"# python {platform.python_version()} ({platform.system()})",
        f"# numpy {np.__version__}, scipy {scipy.__version__}, pandas {pd.__version__}, scikit-learn {sklearn.__version__}",
        f"# seed: {settings.SEED if seed is None else seed}",
    ]
    return "\n".join(header) + "\n" + render_config(configs)


def _common_flags() -> argparse.ArgumentParser:
    # SUPPRESS: флаг можно указать и до, и после имени подкоманды
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="зерно генератора случайных чисел")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="число воркеров (по умолчанию все ядра)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="файл конфигурации 'ключ = значение'")
    common.add_argument("--out", default=argparse.SUPPRESS, help="файл или каталог результата")
    common.add_argument(
        "--log-level",
        default=argparse.SUPPRESS,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="уровень логирования",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    from pitchguard.cli import exposure, featsel, glm, gps, tools

    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="pitchguard",
        description="Модели риска травм футболистов: DTW-ГП, SPCA, CFS/GA, GLM",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"pitchguard {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for group in (exposure, gps, glm, featsel, tools):
        group.register(subparsers, common)
    return parser


def setup_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Выполняет одну подкоманду.

    Returns:
        Код выхода: 0 - успех, 1 - ошибка входных данных, 2 - численный сбой
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help и --version завершаются с кодом 0, ошибки разбора - ошибка ввода
        return 0 if e.code in (0, None) else 1

    setup_logging(getattr(args, "log_level", None))
    context = RunContext(
        seed=getattr(args, "seed", None),
        jobs=getattr(args, "jobs", None),
        config_path=getattr(args, "config", None),
        out=getattr(args, "out", None),
        invocation=["pitchguard"] + strip_jobs(argv),
    )
    logger.info("Запуск: %s", " ".join(context.invocation))
    try:
        args.handler(args, context)
    except PitchguardError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except FileNotFoundError as e:
        logger.error("%s", e)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


def read_column(path: str | Path, column: Optional[str] = None, numeric: bool = True) -> pd.Series:
    """Одна колонка CSV: по имени или первая в файле."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Файл не найден: {path}")
    frame = pd.read_csv(path)
    if frame.shape[1] == 0:
        raise InputError(f"{path}: в файле нет колонок")
    if column is not None and column not in frame.columns:
        raise MissingColumnError(f"{path}: отсутствует колонка '{column}'", name=column)
    series = frame[column] if column is not None else frame.iloc[:, 0]
    if numeric:
        values = pd.to_numeric(series, errors="coerce")
        if values.isna().any():
            line = int(np.flatnonzero(values.isna().to_numpy())[0]) + 2
            raise MalformedRowError(f"{path}:{line}: нечисловое значение '{series.iloc[line - 2]}'", line=line)
        return values.astype(float)
    return series


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"ожидается положительное число: {text}")
    return value
