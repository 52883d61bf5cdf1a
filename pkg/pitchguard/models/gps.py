import math
import datetime as dt

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator


class GpsSession(BaseModel):
    """Одна тренировочная GPS-сессия игрока."""

    model_config = ConfigDict(frozen=True)

    subject_id: str
    date: dt.date
    duration_minutes: float = Field(gt=0, allow_inf_nan=False)
    features: dict[str, float]

    @field_validator("features")
    @classmethod
    def _finite(cls, value: dict[str, float]) -> dict[str, float]:
        for name, measurement in value.items():
            if not math.isfinite(measurement):
                raise ValueError(f"значение признака {name} не конечно")
        return value


class WeeklyFrame(BaseModel):
    """
    Недельная таблица: одна строка на пару (игрок, ISO-неделя),
    средние значения признаков и бинарная метка травмы.

    Колонки таблицы: subject_id, iso_week_index, <признаки...>, injured.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    table: pd.DataFrame
    feature_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.table)

    def features(self) -> pd.DataFrame:
        return self.table.loc[:, list(self.feature_names)]

    def matrix(self) -> np.ndarray:
        return self.features().to_numpy(dtype=float)

    def labels(self) -> np.ndarray:
        return self.table["injured"].to_numpy(dtype=int)

    def subjects(self) -> np.ndarray:
        return self.table["subject_id"].to_numpy()
