"""Pydantic data contracts for configuration sections and reports."""

from gaugelab.schemas.base import BaseSchema, FrozenSchema
from gaugelab.schemas.density import DensityConfig, ManifoldKind, ManifoldSpec, KernelKind
from gaugelab.schemas.integrator import (
    AugmentFlags,
    Direction,
    HutchinsonConfig,
    IntegratorConfig,
    IntegratorMethod,
    ProbeDist,
)
from gaugelab.schemas.remainder import RemainderConfig, RemainderKind
from gaugelab.schemas.reports import (
    CheckResult,
    ExperimentSummary,
    GaugeReport,
    IdEstimate,
    ScenarioResult,
    Verdict,
)
from gaugelab.schemas.run import GaugeSection, IdSection, RunConfig
from gaugelab.schemas.schedule import BetaKind, ScheduleConfig, ScheduleKind, Spacing, TimeGrid

__all__ = [
    "AugmentFlags",
    "BaseSchema",
    "BetaKind",
    "CheckResult",
    "DensityConfig",
    "Direction",
    "ExperimentSummary",
    "FrozenSchema",
    "GaugeReport",
    "GaugeSection",
    "HutchinsonConfig",
    "IdEstimate",
    "IdSection",
    "IntegratorConfig",
    "IntegratorMethod",
    "KernelKind",
    "ManifoldKind",
    "ManifoldSpec",
    "ProbeDist",
    "RemainderConfig",
    "RemainderKind",
    "RunConfig",
    "ScenarioResult",
    "ScheduleConfig",
    "ScheduleKind",
    "Spacing",
    "TimeGrid",
    "Verdict",
]
