from enum import Enum
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ExposureDay(BaseModel):
    """Один день записи нагрузки: минуты тренировки и матча."""

    model_config = ConfigDict(frozen=True)

    day_index: int = Field(ge=1)
    training_minutes: float = Field(ge=0, allow_inf_nan=False)
    match_minutes: float = Field(ge=0, allow_inf_nan=False)


class Injured(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["injured"] = "injured"
    day_of_injury: int = Field(ge=1)


class Censored(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["censored"] = "censored"
    last_observed_day: int = Field(ge=1)


Outcome = Annotated[Union[Injured, Censored], Field(discriminator="kind")]


class ExposureRecord(BaseModel):
    """
    Запись нагрузки одного игрока: упорядоченные по дням минуты тренировок
    и матчей и исход (травма в день T или цензурирование).
    """

    model_config = ConfigDict(frozen=True)

    subject_id: str
    days: tuple[ExposureDay, ...]
    outcome: Outcome

    # День травмы может быть позже последнего дня только у усечённой записи (T-a),
    # поэтому это условие проверяется при отборе игроков, а не здесь.
    @model_validator(mode="after")
    def _check_days(self) -> "ExposureRecord":
        indices = [day.day_index for day in self.days]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError(f"дни игрока {self.subject_id} должны строго возрастать")
        return self

    @property
    def injured(self) -> bool:
        return isinstance(self.outcome, Injured)

    @property
    def response_day(self) -> int:
        """День травмы или последний наблюдаемый день для цензурированных."""
        if isinstance(self.outcome, Injured):
            return self.outcome.day_of_injury
        return self.outcome.last_observed_day

    @property
    def day_indices(self) -> np.ndarray:
        return np.array([day.day_index for day in self.days], dtype=int)

    @property
    def training(self) -> np.ndarray:
        return np.array([day.training_minutes for day in self.days], dtype=float)

    @property
    def match(self) -> np.ndarray:
        return np.array([day.match_minutes for day in self.days], dtype=float)


class InjuryEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    subject_id: str
    day: int = Field(ge=1)
    intrinsic: bool
    days_unavailable: int = Field(ge=0)


class SeverityCategory(str, Enum):
    """Категории тяжести травмы по числу пропущенных дней."""

    TRANSIENT = "Transient"
    MILD = "Mild"
    MODERATE = "Moderate"
    SEVERE = "Severe"
