"""
Report schemas.

These are the serialized outputs of the analysis modules: gauge residual
statistics, intrinsic-dimension estimates and scenario verdicts.
"""

from enum import Enum as PyEnum

from pydantic import Field, model_validator

from gaugelab.schemas.base import BaseSchema


class GaugeReport(BaseSchema):
    """Gauge condition residual statistics at one time."""

    t: float
    residual_max: float = Field(..., ge=0.0)
    residual_rms: float = Field(..., ge=0.0)
    n_points: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_order(self) -> "GaugeReport":
        # rms can exceed max by rounding when all residuals are equal
        if self.residual_rms > self.residual_max * (1.0 + 1e-12) + 1e-300:
            raise ValueError("residual_rms must not exceed residual_max")
        return self

    def csv_row(self) -> tuple[float, float, float, int]:
        return (self.t, self.residual_max, self.residual_rms, self.n_points)


class IdEstimate(BaseSchema):
    """Intrinsic dimension from the saturating singular values of one trajectory."""

    d_hat: int = Field(..., ge=0)
    slopes: list[float]
    threshold: float = Field(..., gt=0.0)
    per_sample: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_range(self) -> "IdEstimate":
        if self.d_hat > len(self.slopes):
            raise ValueError("d_hat cannot exceed the ambient dimension")
        return self


class ExperimentSummary(BaseSchema):
    """Aggregate of per-sample intrinsic-dimension estimates."""

    modal_d: int
    agreement: float = Field(..., ge=0.0, le=1.0)
    n_samples: int = Field(..., ge=1)
    conservative: bool = True
    note: str = ""
    spec: dict = Field(default_factory=dict)


class Verdict(str, PyEnum):
    PASS = "Pass"
    FAIL = "Fail"


class CheckResult(BaseSchema):
    """One checked quantity with its acceptance interval."""

    value: float
    lower: float | None = None
    upper: float | None = None

    @property
    def passed(self) -> bool:
        if self.value != self.value:  # NaN
            return False
        if self.lower is not None and self.value < self.lower:
            return False
        if self.upper is not None and self.value > self.upper:
            return False
        return True


class ScenarioResult(BaseSchema):
    """
    Outcome of one canned scenario.

    ``quantities`` holds every reported number; ``checks`` holds the subset
    with acceptance intervals. The verdict is Pass exactly when every check
    passes. Expected-fail scenarios demonstrate a negated hypothesis and are
    supposed to fail.
    """

    name: str
    quantities: dict[str, float] = Field(default_factory=dict)
    checks: dict[str, CheckResult] = Field(default_factory=dict)
    verdict: Verdict = Verdict.FAIL
    tolerance_used: float = 0.0
    expected_fail: bool = False
    notes: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def derive_verdict(self) -> "ScenarioResult":
        ok = bool(self.checks) and all(c.passed for c in self.checks.values())
        self.verdict = Verdict.PASS if ok else Verdict.FAIL
        return self

    @property
    def as_expected(self) -> bool:
        """True when the verdict matches the scenario's declared expectation."""
        return (self.verdict == Verdict.FAIL) == self.expected_fail
