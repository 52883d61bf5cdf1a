from pitchguard.models.configs import CvPlan, FilterConfig, GaConfig, SpcaGrid, SweepConfig, SynthConfig
from pitchguard.models.exposure import (
    Censored,
    ExposureDay,
    ExposureRecord,
    Injured,
    InjuryEvent,
    SeverityCategory,
)
from pitchguard.models.gps import GpsSession, WeeklyFrame
from pitchguard.models.kernel import Constant, DtwRbf, ExposureAvg, KernelSpec, Polynomial, Rbf
from pitchguard.models.reports import (
    GridRow,
    GridSearchResult,
    MetricRow,
    MetricSummary,
    ModelReport,
    TruncationRow,
    TruncationSweep,
)

__all__ = [
    "Censored",
    "Constant",
    "CvPlan",
    "DtwRbf",
    "ExposureAvg",
    "ExposureDay",
    "ExposureRecord",
    "FilterConfig",
    "GaConfig",
    "GpsSession",
    "GridRow",
    "GridSearchResult",
    "Injured",
    "InjuryEvent",
    "KernelSpec",
    "MetricRow",
    "MetricSummary",
    "ModelReport",
    "Polynomial",
    "Rbf",
    "SeverityCategory",
    "SpcaGrid",
    "SweepConfig",
    "SynthConfig",
    "TruncationRow",
    "TruncationSweep",
    "WeeklyFrame",
]
