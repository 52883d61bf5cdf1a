from typing import Optional, Sequence

import pytest

from pitchguard.models.configs import SynthConfig
from pitchguard.models.exposure import Censored, ExposureDay, ExposureRecord, Injured


def make_record(
    subject: str,
    training: Sequence[float],
    match: Optional[Sequence[float]] = None,
    injury_day: Optional[int] = None,
    days: Optional[Sequence[int]] = None,
) -> ExposureRecord:
    """Запись нагрузки по спискам минут; дни по умолчанию 1..n."""
    match = match if match is not None else [0.0] * len(training)
    days = days if days is not None else range(1, len(training) + 1)
    rows = tuple(
        ExposureDay(day_index=d, training_minutes=float(t), match_minutes=float(m))
        for d, t, m in zip(days, training, match)
    )
    outcome = Injured(day_of_injury=injury_day) if injury_day else Censored(last_observed_day=rows[-1].day_index)
    return ExposureRecord(subject_id=subject, days=rows, outcome=outcome)


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture
def small_synth() -> SynthConfig:
    """Небольшая когорта с высоким риском травм для быстрых сквозных проверок."""
    return SynthConfig(
        subjects=10,
        season_days=70,
        hazard=0.03,
        load_sensitivity=1.0,
        gps_features=10,
        planted_features=2,
        feature_blocks=2,
        speed_samples=20,
    )
