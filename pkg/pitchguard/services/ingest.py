"""
Загрузка, проверка и предобработка данных: записи нагрузки, журнал травм,
GPS-сессии, состав команды. Все функции чистые и не изменяют входные данные.
"""
import logging
import math
from datetime import date, timedelta
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import pandas as pd

from pitchguard.core.errors import (
    DuplicateDayError,
    EmptyWeekSetError,
    InputError,
    MalformedRowError,
    MissingColumnError,
    MissingFeatureError,
    NonPositiveResponseError,
    OutOfRangeError,
    TruncationTooDeepError,
)
from pitchguard.models.configs import FilterConfig
from pitchguard.models.exposure import (
    Censored,
    ExposureDay,
    ExposureRecord,
    Injured,
    InjuryEvent,
    SeverityCategory,
)
from pitchguard.models.gps import GpsSession, WeeklyFrame
from pitchguard.services.storage import write_csv

logger = logging.getLogger(__name__)

EXPOSURE_COLUMNS = ["subject_id", "day_index", "training_minutes", "match_minutes"]
INJURY_COLUMNS = ["subject_id", "day", "intrinsic", "days_unavailable"]
GPS_FIXED_COLUMNS = ["subject_id", "date", "duration_minutes"]
ROSTER_COLUMNS = ["subject_id", "position"]

# Границы зон скорости (доли максимальной скорости), верхняя граница не включается
SPEED_ZONE_EDGES = (0.35, 0.45, 0.55, 0.65, 0.75)


def _read_table(path: str | Path, columns: list[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Файл не найден: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [column.strip() for column in frame.columns]
    for name in columns:
        if name not in frame.columns:
            raise MissingColumnError(f"{path}: отсутствует колонка '{name}'", name=name)
    return frame


def _parse_numbers(frame: pd.DataFrame, column: str, path: str | Path, integer: bool = False,
                   minimum: Optional[float] = None) -> np.ndarray:
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if minimum is not None:
        bad |= values < minimum
    if integer:
        bad |= np.mod(np.nan_to_num(values), 1) != 0
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        # Строка 1 - заголовок
        line = row + 2
        raise MalformedRowError(
            f"{path}:{line}: некорректное значение '{frame[column].iloc[row]}' в колонке {column}",
            line=line,
            column=column,
        )
    return values.astype(int) if integer else values


def load_exposure_csv(path: str | Path) -> list[ExposureRecord]:
    """
    Загружает записи нагрузки (subject_id,day_index,training_minutes,match_minutes).

    Returns:
        По одной записи на игрока в порядке первого появления, дни отсортированы.
        Исход - Censored(последний день); травмы назначаются в filter_subjects.
    """
    frame = _read_table(path, EXPOSURE_COLUMNS)
    days = _parse_numbers(frame, "day_index", path, integer=True, minimum=1)
    training = _parse_numbers(frame, "training_minutes", path, minimum=0)
    match = _parse_numbers(frame, "match_minutes", path, minimum=0)
    subjects = frame["subject_id"].str.strip().to_numpy()

    grouped: dict[str, dict[int, ExposureDay]] = {}
    for subject, day, train_min, match_min in zip(subjects, days, training, match):
        rows = grouped.setdefault(subject, {})
        if day in rows:
            raise DuplicateDayError(
                f"{path}: день {day} игрока {subject} встречается повторно", subject=subject, day=int(day)
            )
        rows[int(day)] = ExposureDay(day_index=int(day), training_minutes=train_min, match_minutes=match_min)

    records = []
    for subject, rows in grouped.items():
        ordered = tuple(rows[day] for day in sorted(rows))
        records.append(
            ExposureRecord(
                subject_id=subject,
                days=ordered,
                outcome=Censored(last_observed_day=ordered[-1].day_index),
            )
        )
    logger.info("Загружено записей нагрузки: %d (%s)", len(records), path)
    return records


def load_injuries_csv(path: str | Path) -> list[InjuryEvent]:
    """Загружает журнал травм (subject_id,day,intrinsic,days_unavailable)."""
    frame = _read_table(path, INJURY_COLUMNS)
    days = _parse_numbers(frame, "day", path, integer=True, minimum=1)
    intrinsic = _parse_numbers(frame, "intrinsic", path, integer=True, minimum=0)
    unavailable = _parse_numbers(frame, "days_unavailable", path, integer=True, minimum=0)
    if (intrinsic > 1).any():
        row = int(np.flatnonzero(intrinsic > 1)[0])
        raise MalformedRowError(f"{path}:{row + 2}: intrinsic должен быть 0 или 1", line=row + 2, column="intrinsic")
    return [
        InjuryEvent(subject_id=subject, day=int(day), intrinsic=bool(flag), days_unavailable=int(lost))
        for subject, day, flag, lost in zip(
            frame["subject_id"].str.strip(), days, intrinsic, unavailable
        )
    ]


def load_gps_csv(path: str | Path) -> list[GpsSession]:
    """Загружает GPS-сессии (subject_id,date,duration_minutes,<признаки...>)."""
    frame = _read_table(path, GPS_FIXED_COLUMNS)
    feature_names = [column for column in frame.columns if column not in GPS_FIXED_COLUMNS]
    durations = _parse_numbers(frame, "duration_minutes", path)
    if (durations <= 0).any():
        row = int(np.flatnonzero(durations <= 0)[0])
        raise MalformedRowError(
            f"{path}:{row + 2}: длительность сессии должна быть положительной", line=row + 2, column="duration_minutes"
        )
    dates = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    if dates.isna().any():
        row = int(np.flatnonzero(dates.isna().to_numpy())[0])
        raise MalformedRowError(f"{path}:{row + 2}: дата должна быть в формате YYYY-MM-DD", line=row + 2, column="date")
    values = {name: _parse_numbers(frame, name, path) for name in feature_names}

    sessions = []
    for row, subject in enumerate(frame["subject_id"].str.strip()):
        sessions.append(
            GpsSession(
                subject_id=subject,
                date=dates.iloc[row].date(),
                duration_minutes=float(durations[row]),
                features={name: float(values[name][row]) for name in feature_names},
            )
        )
    logger.info("Загружено GPS-сессий: %d, признаков: %d (%s)", len(sessions), len(feature_names), path)
    return sessions


def load_roster_csv(path: str | Path) -> dict[str, str]:
    """Загружает состав команды (subject_id,position)."""
    frame = _read_table(path, ROSTER_COLUMNS)
    return dict(zip(frame["subject_id"].str.strip(), frame["position"].str.strip()))


def write_exposure_csv(records: list[ExposureRecord], path: str | Path) -> Path:
    rows = [
        (record.subject_id, day.day_index, day.training_minutes, day.match_minutes)
        for record in records
        for day in record.days
    ]
    return write_csv(path, pd.DataFrame(rows, columns=EXPOSURE_COLUMNS))


def write_injuries_csv(events: list[InjuryEvent], path: str | Path) -> Path:
    rows = [(e.subject_id, e.day, int(e.intrinsic), e.days_unavailable) for e in events]
    return write_csv(path, pd.DataFrame(rows, columns=INJURY_COLUMNS))


def write_gps_csv(sessions: list[GpsSession], path: str | Path) -> Path:
    feature_names = list(sessions[0].features) if sessions else []
    rows = [
        [s.subject_id, s.date.isoformat(), s.duration_minutes] + [s.features[name] for name in feature_names]
        for s in sessions
    ]
    return write_csv(path, pd.DataFrame(rows, columns=GPS_FIXED_COLUMNS + feature_names))


def write_roster_csv(positions: dict[str, str], path: str | Path) -> Path:
    return write_csv(path, pd.DataFrame(list(positions.items()), columns=ROSTER_COLUMNS))


def fill_missing_days(r: ExposureRecord) -> ExposureRecord:
    """
    Вставляет пропущенные дни 1..max с нулевой нагрузкой (выходные дни не записывались).
    Существующие дни не меняются.
    """
    present = {day.day_index: day for day in r.days}
    last = max(present)
    if len(present) == last:
        return r
    days = tuple(
        present.get(index) or ExposureDay(day_index=index, training_minutes=0.0, match_minutes=0.0)
        for index in range(1, last + 1)
    )
    return r.model_copy(update={"days": days})


def truncate_record(r: ExposureRecord, a: int) -> ExposureRecord:
    """
    Оставляет дни 1..(T - a) записи травмированного игрока, исход Injured(T) сохраняется.

    Raises:
        TruncationTooDeepError: если T - a < 2
    """
    if not isinstance(r.outcome, Injured):
        raise InputError(f"Игрок {r.subject_id} не травмирован, усечение T-a не определено", subject=r.subject_id)
    horizon = r.outcome.day_of_injury - a
    if a < 0 or horizon < 2:
        raise TruncationTooDeepError(
            f"Усечение a={a} слишком глубокое для игрока {r.subject_id} (T={r.outcome.day_of_injury})",
            subject=r.subject_id,
            a=a,
        )
    filled = fill_missing_days(r)
    return filled.model_copy(update={"days": tuple(day for day in filled.days if day.day_index <= horizon)})


def _pad_to(r: ExposureRecord, last_day: int) -> tuple[ExposureDay, ...]:
    current = r.days[-1].day_index
    padding = tuple(
        ExposureDay(day_index=index, training_minutes=0.0, match_minutes=0.0)
        for index in range(current + 1, last_day + 1)
    )
    return r.days + padding


def filter_subjects(
    records: list[ExposureRecord],
    events: list[InjuryEvent],
    rules: FilterConfig,
    positions: Optional[dict[str, str]] = None,
) -> list[ExposureRecord]:
    """
    Отбирает игроков и назначает исход по первой подходящей травме.

    Правила: исключение позиций (вратари), исключение травм в первые k дней,
    исключение игроков, чья первая травма не внутренняя, пропуск травм
    без пропущенных дней (берётся следующая травма). Игроки без травм
    цензурируются по последнему дню. Каждое исключение логируется.
    """
    positions = positions or {}
    excluded_positions = {position.lower() for position in rules.exclude_positions}
    by_subject: dict[str, list[InjuryEvent]] = {}
    for event in events:
        by_subject.setdefault(event.subject_id, []).append(event)

    result = []
    for record in records:
        subject = record.subject_id
        position = positions.get(subject, "")
        if position.lower() in excluded_positions:
            logger.info("Игрок %s исключён: позиция '%s'", subject, position)
            continue

        history = sorted(by_subject.get(subject, []), key=lambda e: e.day)
        if rules.skip_zero_day_injuries:
            skipped = [e for e in history if e.days_unavailable == 0]
            for event in skipped:
                logger.info("Игрок %s: травма в день %d без пропущенных дней пропущена", subject, event.day)
            history = [e for e in history if e.days_unavailable > 0]

        if not history:
            last_day = record.days[-1].day_index
            result.append(record.model_copy(update={"outcome": Censored(last_observed_day=last_day)}))
            continue

        first = history[0]
        if first.day <= rules.early_injury_days:
            logger.info(
                "Игрок %s исключён: травма в день %d (первые %d дней)", subject, first.day, rules.early_injury_days
            )
            continue
        if rules.exclude_nonintrinsic and not first.intrinsic:
            logger.info("Игрок %s исключён: первая травма в день %d не внутренняя", subject, first.day)
            continue

        days = record.days
        if first.day > days[-1].day_index:
            logger.info("Игрок %s: запись дополнена нулевыми днями до дня травмы %d", subject, first.day)
            days = _pad_to(record, first.day)
        result.append(record.model_copy(update={"days": days, "outcome": Injured(day_of_injury=first.day)}))

    logger.info("Отбор игроков: %d из %d", len(result), len(records))
    return result


def log_transform(y):
    """Натуральный логарифм отклика (число дней до травмы)."""
    values = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise NonPositiveResponseError("Отклик должен быть положительным для логарифмирования")
    result = np.log(values)
    return float(result) if result.ndim == 0 else result


def exp_back(z):
    """Обратное преобразование к шкале дней."""
    result = np.exp(np.asarray(z, dtype=float))
    return float(result) if result.ndim == 0 else result


def training_targets(records: list[ExposureRecord], include_censored: bool = False) -> tuple[list[ExposureRecord], np.ndarray]:
    """
    Записи и лог-цели для обучения ГП.
    Цензурированные игроки входят только при include_censored, целью служит
    день цензурирования (нижняя граница времени до травмы).
    """
    used = [r for r in records if r.injured or include_censored]
    targets = log_transform([r.response_day for r in used]) if used else np.array([])
    return used, np.atleast_1d(targets)


def bin_severity(days_unavailable: int) -> SeverityCategory:
    """0-7 дней - Transient, 8-28 - Mild, 29-83 - Moderate, от 84 - Severe."""
    if days_unavailable < 0:
        raise OutOfRangeError(f"Число пропущенных дней не может быть отрицательным: {days_unavailable}")
    if days_unavailable <= 7:
        return SeverityCategory.TRANSIENT
    if days_unavailable <= 28:
        return SeverityCategory.MILD
    if days_unavailable < 84:
        return SeverityCategory.MODERATE
    return SeverityCategory.SEVERE


def speed_zones(fractions) -> np.ndarray:
    """Номера зон скорости 1..6 для массива долей максимальной скорости."""
    values = np.asarray(fractions, dtype=float)
    if not np.all(np.isfinite(values)) or np.any((values < 0) | (values > 1)):
        raise OutOfRangeError("Доля максимальной скорости должна быть в диапазоне [0, 1]")
    return np.digitize(values, SPEED_ZONE_EDGES, right=False) + 1


def speed_zone(fraction_of_max_speed: float) -> int:
    if not math.isfinite(fraction_of_max_speed) or not 0 <= fraction_of_max_speed <= 1:
        raise OutOfRangeError(f"Доля максимальной скорости вне [0, 1]: {fraction_of_max_speed}")
    return int(speed_zones([fraction_of_max_speed])[0])


def sessions_frame(sessions: list[GpsSession]) -> tuple[pd.DataFrame, list[str]]:
    """Таблица сессий и список признаков (длительность + GPS-переменные)."""
    if not sessions:
        raise EmptyWeekSetError("Нет GPS-сессий")
    names = list(sessions[0].features)
    expected = set(names)
    for session in sessions:
        if set(session.features) != expected:
            missing = sorted(expected.symmetric_difference(session.features))
            raise MissingFeatureError(
                f"Набор признаков сессии {session.subject_id} {session.date} отличается: {', '.join(missing)}",
                name=missing[0],
            )
    frame = pd.DataFrame(
        [[s.subject_id, pd.Timestamp(s.date), s.duration_minutes] + [s.features[n] for n in names] for s in sessions],
        columns=GPS_FIXED_COLUMNS + names,
    )
    return frame, ["duration_minutes"] + names


def _iso_week_index(dates: pd.Series) -> pd.Series:
    calendar = dates.dt.isocalendar()
    return (calendar["year"].astype(int) * 100 + calendar["week"].astype(int)).astype(int)


def aggregate_weekly(
    sessions: list[GpsSession],
    events: list[InjuryEvent],
    approach: Literal["A", "B"],
    season_start: Optional[date] = None,
) -> WeeklyFrame:
    """
    Агрегирует сессии по (игрок, ISO-неделя) средним значением.

    Подход A оставляет игроков с хотя бы одной внутренней травмой и не менее
    чем двумя сессиями до неё, подход B - всех игроков. Метка injured истинна,
    если на неделю пришлась хотя бы одна внутренняя травма.

    Args:
        season_start: календарная дата дня 1 (по умолчанию - самая ранняя сессия)
    """
    if approach not in ("A", "B"):
        raise InputError(f"Неизвестный подход агрегации: {approach}")
    frame, feature_names = sessions_frame(sessions)
    start = pd.Timestamp(season_start) if season_start is not None else frame["date"].min()

    intrinsic = [e for e in events if e.intrinsic]
    injury_dates = pd.DataFrame(
        {
            "subject_id": [e.subject_id for e in intrinsic],
            "date": [start + timedelta(days=e.day - 1) for e in intrinsic],
        }
    )

    if approach == "A":
        keep = []
        for subject, group in frame.groupby("subject_id", sort=True):
            subject_injuries = injury_dates.loc[injury_dates["subject_id"] == subject, "date"]
            if subject_injuries.empty:
                logger.info("Подход A: игрок %s без внутренних травм исключён", subject)
                continue
            before = int((group["date"] < subject_injuries.min()).sum())
            if before < 2:
                logger.info("Подход A: у игрока %s меньше двух сессий до травмы (%d)", subject, before)
                continue
            keep.append(subject)
        frame = frame[frame["subject_id"].isin(keep)]

    if frame.empty:
        raise EmptyWeekSetError(f"После отбора (подход {approach}) не осталось сессий")

    frame = frame.assign(iso_week_index=_iso_week_index(frame["date"]))
    weekly = (
        frame.groupby(["subject_id", "iso_week_index"], sort=True)[feature_names]
        .mean()
        .reset_index()
    )
    injured_weeks = set()
    if not injury_dates.empty:
        injured_weeks = set(zip(injury_dates["subject_id"], _iso_week_index(pd.to_datetime(injury_dates["date"]))))
    weekly["injured"] = [
        (subject, week) in injured_weeks for subject, week in zip(weekly["subject_id"], weekly["iso_week_index"])
    ]
    logger.info(
        "Недельная таблица (подход %s): %d строк, травмированных недель %d",
        approach,
        len(weekly),
        int(weekly["injured"].sum()),
    )
    return WeeklyFrame(table=weekly, feature_names=tuple(feature_names))


def describe_cohort(records: list[ExposureRecord], events: Optional[list[InjuryEvent]] = None) -> dict:
    """
    Сводка когорты: число игроков, травмированных и цензурированных,
    распределение отклика (дней до первой травмы) и категории тяжести.
    """
    injured = [r for r in records if r.injured]
    response = np.array([r.response_day for r in injured], dtype=float)
    summary = {
        "subjects": len(records),
        "injured": len(injured),
        "censored": len(records) - len(injured),
        "response_min": float(response.min()) if len(response) else None,
        "response_max": float(response.max()) if len(response) else None,
        "response_mean": float(response.mean()) if len(response) else None,
        "response_median": float(np.median(response)) if len(response) else None,
    }
    if events is not None:
        lookup = {(e.subject_id, e.day): e for e in events}
        counts = {category.value: 0 for category in SeverityCategory}
        for record in injured:
            event = lookup.get((record.subject_id, record.response_day))
            if event is not None:
                counts[bin_severity(event.days_unavailable).value] += 1
        summary["severity"] = counts
    return summary
