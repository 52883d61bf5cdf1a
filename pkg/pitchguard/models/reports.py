from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field

from pitchguard import __version__


class MetricRow(BaseModel):
    """
    Метрики одной единицы оценки (фолд, T-a).
    None означает неопределённое значение (например, precision без положительных прогнозов).
    """

    unit: str
    metrics: dict[str, Optional[float]]


class MetricSummary(BaseModel):
    mean: Optional[float]
    sd: Optional[float]
    n: int


def summarize(rows: list[MetricRow]) -> dict[str, MetricSummary]:
    """
    Среднее и стандартное отклонение (выборочное) по каждой метрике.
    Неопределённые значения не участвуют в агрегате.
    """
    names: list[str] = []
    for row in rows:
        for name in row.metrics:
            if name not in names:
                names.append(name)

    aggregate = {}
    for name in names:
        values = np.array([row.metrics[name] for row in rows if row.metrics.get(name) is not None], dtype=float)
        if len(values) == 0:
            aggregate[name] = MetricSummary(mean=None, sd=None, n=0)
            continue
        sd = float(np.std(values, ddof=1)) if len(values) > 1 else None
        aggregate[name] = MetricSummary(mean=float(np.mean(values)), sd=sd, n=len(values))
    return aggregate


class ModelReport(BaseModel):
    protocol: str
    config: dict[str, Any] = Field(default_factory=dict)
    rows: list[MetricRow]
    aggregate: dict[str, MetricSummary]
    seed: Optional[int] = None
    version: str = __version__
    invocation: list[str] = Field(default_factory=list)

    @classmethod
    def from_rows(
        cls,
        protocol: str,
        rows: list[MetricRow],
        config: Optional[dict[str, Any]] = None,
        seed: Optional[int] = None,
    ) -> "ModelReport":
        return cls(protocol=protocol, config=config or {}, rows=rows, aggregate=summarize(rows), seed=seed)


class GridRow(BaseModel):
    gamma: float
    epsilon: float
    metrics: dict[str, Optional[float]]
    accepted: bool
    reason: Optional[str] = None
    min_variance: Optional[float] = None


class GridSearchResult(BaseModel):
    """
    Результат перебора сетки (gamma, epsilon) в каноническом порядке сетки.
    best_index - лучшая принятая строка (макс. CCC, при равенстве меньший MAE),
    best_by_metric - лучшая принятая строка по каждой метрике отдельно.
    """

    rows: list[GridRow]
    best_index: int
    best_by_metric: dict[str, int]

    @property
    def best(self) -> GridRow:
        return self.rows[self.best_index]

    @property
    def accepted_count(self) -> int:
        return sum(1 for row in self.rows if row.accepted)


class TruncationRow(BaseModel):
    t_minus_a: int
    ccc: Optional[float]
    mae: Optional[float]
    gamma: float
    epsilon: float


class TruncationSweep(BaseModel):
    rows: list[TruncationRow]
