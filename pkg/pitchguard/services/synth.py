"""
Синтетическая когорта для проверок и демонстраций: записи нагрузки,
журнал травм, GPS-сессии и состав команды.

Риск травмы зависит от нагрузки за последние 7 дней, признаки GPS состоят
из блоков коррелированных переменных, а выделенный блок смещается в недели травм.
"""
import logging
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from pitchguard.core.config import settings
from pitchguard.core.errors import InputError, InvalidSpecError
from pitchguard.models.configs import SynthConfig
from pitchguard.models.exposure import Censored, ExposureDay, ExposureRecord, InjuryEvent
from pitchguard.models.gps import GpsSession
from pitchguard.services.ingest import (
    speed_zones,
    write_exposure_csv,
    write_gps_csv,
    write_injuries_csv,
    write_roster_csv,
)

logger = logging.getLogger(__name__)

ZONE_FEATURES = tuple(f"DistanceZ{zone}" for zone in range(1, 7))

# Остальные GPS-переменные; длительность сессии хранится отдельно (duration_minutes)
LATENT_FEATURES = (
    "AccelerationsZone1", "AccelerationsZone2", "AccelerationsZone3", "AccelerationsZone4",
    "AccelerationsZone5", "AccelerationsZone6", "AverageMetabolicPower", "AverageSpeed",
    "HighSpeedRunning", "DecelerationsZone1", "DecelerationsZone2", "DecelerationsZone3",
    "DecelerationsZone4", "DecelerationsZone5", "DecelerationsZone6", "DistancePerMin",
    "DistanceTotal", "DurationofHI", "DynamicStressLoadZone1", "DynamicStressLoadZone2",
    "DynamicStressLoadZone3", "DynamicStressLoadZone4", "DynamicStressLoadZone5", "DynamicStressLoadZone6",
    "EnergyExpenditure.KCal.", "EquivalentMetabolicDistance", "ExplosiveDistance", "HighSpeedRunningPerMinute",
    "HMLDistance", "HMLDistancePerMinute", "HMLEfforts", "ImpactsZone1",
    "ImpactsZone2", "ImpactsZone3", "ImpactsZone4", "ImpactsZone5",
    "ImpactsZone6", "LeftAntPostImpact", "LeftAverageVertImpact", "LeftLateralImpact",
    "LeftMagnitudeImpact", "LeftVerticalImpact", "LowerSpeedLoading", "MaxSpeed",
    "MetabolicDistanceZonal", "MetabolicTimeZonal", "NumberofHighIntensityBursts", "RightAverageVertImpact",
    "RightLateralImpact", "RightMagnitudeImpact", "RightVerticalImpact", "SpeedIntensityZone1",
    "SpeedIntensityZone2", "SpeedIntensityZone3", "SpeedIntensityZone4", "SpeedIntensityZone5",
    "SpeedIntensityZone6", "Sprints", "StepBalance", "TotalLeftSteps",
    "TotalLoading", "TotalRightSteps",
)

MAX_GPS_FEATURES = len(ZONE_FEATURES) + len(LATENT_FEATURES)

OUTFIELD_POSITIONS = ("defender", "midfielder", "forward")
GOALKEEPER = "goalkeeper"

# Недельный план: 0 - понедельник; тренировки пн, вт, чт, пт, матч в субботу
TRAINING_WEEKDAYS = (0, 1, 3, 4)
MATCH_WEEKDAY = 5
TRAINING_MINUTES = 75.0
MATCH_MINUTES = 90.0
REFERENCE_WEEKLY_LOAD = len(TRAINING_WEEKDAYS) * TRAINING_MINUTES + MATCH_MINUTES
MAX_SPEED_M_S = 9.0

DATASET_FILES = {
    "exposure": "exposure.csv",
    "injuries": "injuries.csv",
    "gps": "gps.csv",
    "roster": "roster.csv",
}


@dataclass(frozen=True)
class SyntheticCohort:
    records: list[ExposureRecord]
    events: list[InjuryEvent]
    sessions: list[GpsSession]
    positions: dict[str, str]

    def __iter__(self):
        return iter((self.records, self.events, self.sessions, self.positions))


def _check_spec(cfg: SynthConfig) -> None:
    if cfg.gps_features > MAX_GPS_FEATURES:
        raise InvalidSpecError(f"gps_features не может превышать {MAX_GPS_FEATURES}: {cfg.gps_features}")
    latent = cfg.gps_features - len(ZONE_FEATURES)
    if cfg.planted_features > latent:
        raise InvalidSpecError(
            f"planted_features ({cfg.planted_features}) больше числа блочных признаков ({latent})"
        )
    if cfg.goalkeepers > cfg.subjects:
        raise InvalidSpecError(f"Вратарей ({cfg.goalkeepers}) больше, чем игроков ({cfg.subjects})")
    if cfg.min_injury_day >= cfg.season_days:
        raise InvalidSpecError(
            f"min_injury_day ({cfg.min_injury_day}) должен быть меньше длины сезона ({cfg.season_days})"
        )


def _subject_ids(count: int) -> list[str]:
    width = max(2, len(str(count)))
    return [f"P{index:0{width}d}" for index in range(1, count + 1)]


def _days_unavailable(cfg: SynthConfig, rng: np.random.Generator) -> int:
    if rng.random() < cfg.transient_fraction:
        return 0
    return max(1, int(round(np.exp(rng.normal(np.log(14.0), 0.9)))))


def _simulate_subject(cfg: SynthConfig, subject: str, rng: np.random.Generator) -> tuple[ExposureRecord, list[InjuryEvent]]:
    """Дневная нагрузка и травмы одного игрока."""
    last_day = cfg.season_days
    if rng.random() < cfg.leave_fraction:
        last_day = int(rng.integers(cfg.season_days // 2, cfg.season_days))
    multiplier = rng.uniform(0.7, 1.3)

    training = np.zeros(last_day)
    match = np.zeros(last_day)
    events = []
    unavailable_until = 0
    for day in range(1, last_day + 1):
        weekday = (cfg.season_start + timedelta(days=day - 1)).weekday()
        if day <= unavailable_until:
            continue
        if weekday in TRAINING_WEEKDAYS:
            training[day - 1] = round(float(np.clip(rng.normal(TRAINING_MINUTES * multiplier, 15.0), 20.0, 120.0)))
        elif weekday == MATCH_WEEKDAY and rng.random() < 0.8:
            match[day - 1] = float(rng.choice((90.0, 90.0, 75.0, 60.0, 30.0)))

        exposed = training[day - 1] + match[day - 1]
        if exposed <= 0 or day < cfg.min_injury_day or cfg.hazard == 0:
            continue
        weekly_load = float(np.sum(training[max(0, day - 7):day] + match[max(0, day - 7):day]))
        probability = cfg.hazard * np.exp(cfg.load_sensitivity * (weekly_load / REFERENCE_WEEKLY_LOAD - 1.0))
        if rng.random() < min(probability, 1.0):
            lost = _days_unavailable(cfg, rng)
            events.append(
                InjuryEvent(
                    subject_id=subject,
                    day=day,
                    intrinsic=bool(rng.random() < cfg.intrinsic_fraction),
                    days_unavailable=lost,
                )
            )
            unavailable_until = day + lost

    days = tuple(
        ExposureDay(day_index=index + 1, training_minutes=float(training[index]), match_minutes=float(match[index]))
        for index in range(last_day)
    )
    record = ExposureRecord(subject_id=subject, days=days, outcome=Censored(last_observed_day=last_day))
    return record, events


def _zone_distances(minutes: float, cfg: SynthConfig, rng: np.random.Generator) -> dict[str, float]:
    """Дистанции по зонам скорости из выборки мгновенных скоростей сессии."""
    fractions = rng.beta(2.0, 3.5, size=cfg.speed_samples)
    step_seconds = minutes * 60.0 / cfg.speed_samples
    metres = fractions * MAX_SPEED_M_S * step_seconds
    totals = np.bincount(speed_zones(fractions) - 1, weights=metres, minlength=len(ZONE_FEATURES))
    return {name: round(float(value), 4) for name, value in zip(ZONE_FEATURES, totals)}


@dataclass(frozen=True)
class _LatentModel:
    names: tuple[str, ...]
    blocks: np.ndarray
    locations: np.ndarray
    scales: np.ndarray
    planted: int


def _latent_model(cfg: SynthConfig, rng: np.random.Generator) -> _LatentModel:
    count = cfg.gps_features - len(ZONE_FEATURES)
    # Блок 0 - смещаемые признаки, остальные распределяются по блокам 1..B-1
    others = max(cfg.feature_blocks - 1, 1)
    blocks = np.array(
        [0 if k < cfg.planted_features or cfg.feature_blocks == 1 else 1 + (k - cfg.planted_features) % others
         for k in range(count)]
    )
    locations = rng.uniform(20.0, 500.0, size=count)
    return _LatentModel(
        names=LATENT_FEATURES[:count],
        blocks=blocks,
        locations=locations,
        scales=locations * rng.uniform(0.1, 0.25, size=count),
        planted=cfg.planted_features,
    )


def _latent_features(model: _LatentModel, cfg: SynthConfig, shifted: bool, rng: np.random.Generator) -> dict[str, float]:
    rho = cfg.block_correlation
    shared = rng.standard_normal(int(model.blocks.max()) + 1)[model.blocks]
    noise = rng.standard_normal(len(model.names))
    values = model.locations + model.scales * (np.sqrt(rho) * shared + np.sqrt(1.0 - rho) * noise)
    if shifted:
        values[: model.planted] += cfg.planted_shift * model.scales[: model.planted]
    values = np.maximum(values, 0.0)
    return {name: round(float(value), 4) for name, value in zip(model.names, values)}


def _iso_week(day) -> tuple[int, int]:
    calendar = day.isocalendar()
    return calendar[0], calendar[1]


def _sessions(
    cfg: SynthConfig,
    record: ExposureRecord,
    events: list[InjuryEvent],
    model: _LatentModel,
    rng: np.random.Generator,
) -> list[GpsSession]:
    injury_weeks = {
        _iso_week(cfg.season_start + timedelta(days=event.day - 1)) for event in events if event.intrinsic
    }
    sessions = []
    for day in record.days:
        minutes = day.training_minutes + day.match_minutes
        if minutes <= 0:
            continue
        session_date = cfg.season_start + timedelta(days=day.day_index - 1)
        features = _zone_distances(minutes, cfg, rng)
        features.update(_latent_features(model, cfg, _iso_week(session_date) in injury_weeks, rng))
        sessions.append(
            GpsSession(subject_id=record.subject_id, date=session_date, duration_minutes=minutes, features=features)
        )
    return sessions


def planted_features(cfg: SynthConfig) -> list[str]:
    """Имена признаков, смещённых в недели травм."""
    _check_spec(cfg)
    return list(LATENT_FEATURES[: cfg.planted_features])


def synth_generate(cfg: SynthConfig, seed: Optional[int] = None) -> SyntheticCohort:
    """
    Генерирует когорту, полностью определяемую конфигурацией и зерном.

    Записи нагрузки непрерывны по дням 1..последний день и имеют исход
    Censored(последний день), как после загрузки из CSV; травмы назначаются
    отбором игроков. При hazard = 0 травм нет.

    Raises:
        InvalidSpecError: несовместимые параметры конфигурации
    """
    _check_spec(cfg)
    seed = settings.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    model = _latent_model(cfg, rng)

    subjects = _subject_ids(cfg.subjects)
    positions = {
        subject: GOALKEEPER if index < cfg.goalkeepers else OUTFIELD_POSITIONS[index % len(OUTFIELD_POSITIONS)]
        for index, subject in enumerate(subjects)
    }

    records, events, sessions = [], [], []
    for subject in subjects:
        record, subject_events = _simulate_subject(cfg, subject, rng)
        records.append(record)
        events.extend(subject_events)
        sessions.extend(_sessions(cfg, record, subject_events, model, rng))

    logger.info(
        "Синтетическая когорта (seed=%d): игроков %d, травм %d, GPS-сессий %d",
        seed,
        len(records),
        len(events),
        len(sessions),
    )
    return SyntheticCohort(records=records, events=events, sessions=sessions, positions=positions)


def write_dataset(cohort: SyntheticCohort, out_dir: str | Path) -> dict[str, Path]:
    """Записывает четыре CSV-файла когорты в каталог."""
    out_dir = Path(out_dir)
    return {
        "exposure": write_exposure_csv(cohort.records, out_dir / DATASET_FILES["exposure"]),
        "injuries": write_injuries_csv(cohort.events, out_dir / DATASET_FILES["injuries"]),
        "gps": write_gps_csv(cohort.sessions, out_dir / DATASET_FILES["gps"]),
        "roster": write_roster_csv(cohort.positions, out_dir / DATASET_FILES["roster"]),
    }


def planted_table(
    n: int, p: int, informative: int = 2, seed: Optional[int] = None, shift: float = 1.5
) -> tuple[pd.DataFrame, np.ndarray]:
    """
    Небольшая таблица для проверок отбора признаков: первые `informative`
    признаков смещены в классе 1, остальные - чистый шум. Классы сбалансированы.
    """
    if n < 4 or p < 1 or not 0 <= informative <= p:
        raise InputError(f"Некорректные размеры таблицы: n={n}, p={p}, informative={informative}")
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    y = (rng.permutation(n) < n // 2).astype(int)
    values = rng.standard_normal((n, p))
    values[:, :informative] += shift * y[:, None]
    table = pd.DataFrame(values, columns=[f"x{j}" for j in range(p)])
    return table, y
