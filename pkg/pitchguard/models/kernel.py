from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field


class Constant(BaseModel):
    """k(x, x') = C."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["constant"] = "constant"
    c: float


class Rbf(BaseModel):
    """k(x, x') = exp(-sigma * ||x - x'||^2)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["rbf"] = "rbf"
    sigma: float = Field(gt=0)


class Polynomial(BaseModel):
    """k(x, x') = (sigma * x^T x')^degree, сдвига внутри скобок нет."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["polynomial"] = "polynomial"
    sigma: float = Field(gt=0)
    degree: int = Field(ge=1)


class DtwRbf(BaseModel):
    """k(x, y) = exp(-gamma * DTW(x, y)) для скалярных рядов."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["dtw_rbf"] = "dtw_rbf"
    gamma: float = Field(gt=0)


class ExposureAvg(BaseModel):
    """Среднее DTW-RBF ядер по каналам тренировок и матчей."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["exposure_avg"] = "exposure_avg"
    gamma: float = Field(gt=0)


KernelSpec = Annotated[
    Union[Constant, Rbf, Polynomial, DtwRbf, ExposureAvg],
    Field(discriminator="kind"),
]
