"""Forward SDE schedule and checkpoint grid schemas."""

from enum import Enum as PyEnum

from pydantic import Field, field_validator, model_validator

from gaugelab.schemas.base import FrozenSchema


class ScheduleKind(str, PyEnum):
    """Forward SDE families."""

    VARIANCE_EXPLODING = "VarianceExploding"  # f = 0, g(t) = g_base**t
    LINEAR_DRIFT = "LinearDrift"  # f = -beta(t) x / 2, g = sqrt(beta(t))


class BetaKind(str, PyEnum):
    """Closed-form beta(t) families for ``LinearDrift``."""

    CONSTANT = "constant"  # beta(t) = beta_min
    LINEAR = "linear"  # beta(t) = beta_min + (beta_max - beta_min) t


class Spacing(str, PyEnum):
    LINEAR = "Linear"
    LOG_UNIFORM = "LogUniform"


class ScheduleConfig(FrozenSchema):
    """
    Forward SDE ``dx = f(x, t) dt + g(t) dw`` on ``[0, t_max]``.

    Config keys: ``schedule.kind``, ``schedule.g_base``, ``schedule.beta_kind``,
    ``schedule.beta_min``, ``schedule.beta_max``, ``schedule.t_min``.
    """

    kind: ScheduleKind = ScheduleKind.VARIANCE_EXPLODING
    g_base: float = Field(default=25.0, gt=0.0, description="g(t) = g_base**t (VarianceExploding)")
    beta_kind: BetaKind = BetaKind.CONSTANT
    beta_min: float = Field(default=0.1, ge=0.0)
    beta_max: float = Field(default=20.0, ge=0.0)
    t_min: float = Field(default=1e-3, gt=0.0, lt=1.0)
    t_max: float = Field(default=1.0, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def check_schedule(self) -> "ScheduleConfig":
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be smaller than t_max")
        if self.kind == ScheduleKind.LINEAR_DRIFT:
            # g = sqrt(beta) must stay positive on [t_min, 1]
            if self.beta_kind == BetaKind.CONSTANT:
                ok = self.beta_min > 0.0
            else:
                slope = self.beta_max - self.beta_min
                ok = min(self.beta_min + slope * self.t_min, self.beta_min + slope) > 0.0
            if not ok:
                raise ValueError("beta(t) must be positive on [t_min, 1]")
        return self


class TimeGrid(FrozenSchema):
    """Checkpoint times, strictly decreasing from 1 down to ``t_min``."""

    checkpoints: tuple[float, ...]
    spacing: Spacing = Spacing.LOG_UNIFORM

    @field_validator("checkpoints")
    @classmethod
    def check_order(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if len(v) < 2:
            raise ValueError("a time grid needs at least two checkpoints")
        if v[0] != 1.0:
            raise ValueError("first checkpoint must be 1")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("checkpoints must be strictly decreasing")
        if v[-1] <= 0.0:
            raise ValueError("checkpoints must stay above 0")
        return v

    @property
    def t_min(self) -> float:
        return self.checkpoints[-1]
