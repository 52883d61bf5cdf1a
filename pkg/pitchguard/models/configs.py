"""
Модели файлов конфигурации запусков (формат `ключ = значение`).
Значения по умолчанию берутся из настроек приложения (CONF.py).
Неизвестные ключи запрещены.
"""
from datetime import date
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pitchguard.core.config import settings


class SynthConfig(BaseModel):
    """Параметры синтетической когорты."""

    model_config = ConfigDict(extra="forbid")

    subjects: int = Field(default=29, ge=1)
    season_days: int = Field(default=180, ge=14)
    season_start: date = date(2014, 7, 7)
    goalkeepers: int = Field(default=0, ge=0)
    # Базовый дневной риск травмы и чувствительность к недельной нагрузке
    hazard: float = Field(default=0.004, ge=0)
    load_sensitivity: float = Field(default=2.0, ge=0)
    min_injury_day: int = Field(default=14, ge=1)
    intrinsic_fraction: float = Field(default=0.8, ge=0, le=1)
    transient_fraction: float = Field(default=0.1, ge=0, le=1)
    leave_fraction: float = Field(default=0.0, ge=0, le=1)
    gps_features: int = Field(default=68, ge=8)
    planted_features: int = Field(default=3, ge=1)
    planted_shift: float = Field(default=1.5, ge=0)
    feature_blocks: int = Field(default=8, ge=1)
    block_correlation: float = Field(default=0.8, ge=0, lt=1)
    speed_samples: int = Field(default=200, ge=10)


class FilterConfig(BaseModel):
    """Правила отбора игроков для модели первой травмы."""

    model_config = ConfigDict(extra="forbid")

    exclude_positions: list[str] = Field(default_factory=lambda: list(settings.EXCLUDE_POSITIONS))
    early_injury_days: int = Field(default=settings.EARLY_INJURY_DAYS, ge=0)
    exclude_nonintrinsic: bool = True
    skip_zero_day_injuries: bool = True
    # Цензурированные игроки участвуют в обучении ГП только при явном включении
    include_censored: bool = False


class SweepConfig(BaseModel):
    """Сетка (gamma, epsilon) и глубина усечения для гауссовского процесса."""

    model_config = ConfigDict(extra="forbid")

    gamma_min: float = Field(default=settings.GAMMA_MIN, gt=0)
    gamma_max: float = Field(default=settings.GAMMA_MAX, gt=0)
    gamma_count: int = Field(default=settings.GAMMA_COUNT, ge=1)
    gamma_grid: Optional[list[float]] = None
    epsilon_min: float = Field(default=settings.EPSILON_MIN, gt=0)
    epsilon_max: float = Field(default=settings.EPSILON_MAX, gt=0)
    epsilon_step: float = Field(default=settings.EPSILON_STEP, gt=0)
    epsilon_grid: Optional[list[float]] = None
    max_truncation: int = Field(default=settings.MAX_TRUNCATION, ge=0)
    negative_variance_tol: float = Field(default=settings.NEGATIVE_VARIANCE_TOL, ge=0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SweepConfig":
        if self.gamma_max < self.gamma_min:
            raise ValueError("gamma_max меньше gamma_min")
        if self.epsilon_max < self.epsilon_min:
            raise ValueError("epsilon_max меньше epsilon_min")
        for value in (self.gamma_grid or []) + (self.epsilon_grid or []):
            if value <= 0:
                raise ValueError("значения сетки должны быть положительными")
        return self

    def gammas(self) -> np.ndarray:
        """Логарифмическая сетка gamma (или явный список)."""
        if self.gamma_grid:
            return np.array(self.gamma_grid, dtype=float)
        return np.geomspace(self.gamma_min, self.gamma_max, self.gamma_count)

    def epsilons(self) -> np.ndarray:
        if self.epsilon_grid:
            return np.array(self.epsilon_grid, dtype=float)
        count = int(round((self.epsilon_max - self.epsilon_min) / self.epsilon_step)) + 1
        return np.linspace(self.epsilon_min, self.epsilon_max, count)


class GaConfig(BaseModel):
    """Параметры генетического алгоритма."""

    model_config = ConfigDict(extra="forbid")

    population: int = Field(default=settings.GA_POPULATION, ge=2)
    generations: int = Field(default=settings.GA_GENERATIONS, ge=0)
    crossover_p: float = Field(default=settings.GA_CROSSOVER_P, ge=0, le=1)
    mutation_p: float = Field(default=settings.GA_MUTATION_P, ge=0, le=1)
    selection: Literal["roulette"] = "roulette"
    seed: int = settings.SEED

    @model_validator(mode="after")
    def _even_population(self) -> "GaConfig":
        if self.population % 2:
            raise ValueError("размер популяции должен быть чётным")
        return self


class CvPlan(BaseModel):
    """Повторная k-кратная кросс-валидация."""

    model_config = ConfigDict(extra="forbid")

    repeats: int = Field(default=settings.CV_REPEATS, ge=1)
    folds: int = Field(default=settings.CV_FOLDS, ge=2)
    stratified: bool = settings.CV_STRATIFIED
    seed: int = settings.SEED


def _default_alphas() -> list[float]:
    return [round(0.01 * i, 2) for i in range(51)]


class SpcaGrid(BaseModel):
    """Сетка (alpha, m) для supervised PCA."""

    model_config = ConfigDict(extra="forbid")

    alpha_grid: list[float] = Field(default_factory=_default_alphas)
    m_grid: list[int] = Field(default_factory=lambda: list(range(2, 51)))
    approach: Literal["A", "B"] = "A"
