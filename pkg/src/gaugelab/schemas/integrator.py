"""Integrator configuration and augmentation flags."""

from enum import Enum as PyEnum

from pydantic import Field

from gaugelab.schemas.base import FrozenSchema


class IntegratorMethod(str, PyEnum):
    RK4_FIXED = "RK4Fixed"
    RK45_ADAPTIVE = "RK45Adaptive"
    DOP853_ADAPTIVE = "DOP853Adaptive"


class Direction(str, PyEnum):
    BACKWARD = "Backward"  # 1 -> t_min
    FORWARD = "Forward"  # t_min -> 1


class ProbeDist(str, PyEnum):
    GAUSSIAN = "Gaussian"
    RADEMACHER = "Rademacher"


class IntegratorConfig(FrozenSchema):
    """
    ODE integrator settings.

    Config keys: ``integrator.method``, ``integrator.n_steps``,
    ``integrator.rel_tol``, ``integrator.abs_tol``, ``integrator.n_checkpoints``.
    """

    method: IntegratorMethod = IntegratorMethod.RK45_ADAPTIVE
    n_steps: int = Field(default=200, ge=1, description="total RK4 steps over the time span")
    rel_tol: float = Field(default=1e-8, gt=0.0)
    abs_tol: float = Field(default=1e-10, gt=0.0)
    direction: Direction = Direction.BACKWARD
    n_checkpoints: int = Field(default=64, ge=2)

    @property
    def adaptive(self) -> bool:
        return self.method != IntegratorMethod.RK4_FIXED


class HutchinsonConfig(FrozenSchema):
    """Stochastic trace estimation for the divergence term."""

    n_probes: int = Field(default=1, ge=1)
    probe_dist: ProbeDist = ProbeDist.GAUSSIAN
    seed: int = Field(default=0, ge=0)


class AugmentFlags(FrozenSchema):
    """Quantities integrated alongside the state."""

    logdet: bool = False
    sensitivity: bool = False
    liouville: bool = False
    hutchinson: HutchinsonConfig | None = None
