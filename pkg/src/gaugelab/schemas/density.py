"""Density and manifold configuration schemas."""

from enum import Enum as PyEnum
from typing import Literal

import numpy as np
from pydantic import Field, model_validator

from gaugelab.schemas.base import FrozenSchema


class ManifoldKind(str, PyEnum):
    EMBEDDED_GAUSSIAN = "EmbeddedGaussian"
    SPHERE = "Sphere"
    TORUS = "Torus"
    SWISS_ROLL = "SwissRoll"


class KernelKind(str, PyEnum):
    """Mixture kernel around each manifold point."""

    POINT = "point"  # covariance bandwidth**2 * I
    TANGENT = "tangent"  # covariance bandwidth**2 * (tangent projector)


# Default shape parameters per manifold kind
MANIFOLD_DEFAULTS: dict[ManifoldKind, dict[str, float]] = {
    ManifoldKind.EMBEDDED_GAUSSIAN: {"variance": 1.0},
    ManifoldKind.SPHERE: {"radius": 1.0},
    ManifoldKind.TORUS: {"major_radius": 2.0, "minor_radius": 0.5},
    ManifoldKind.SWISS_ROLL: {"scale": 0.1},
}

# Dimension of the coordinate block the manifold lives in, before zero padding
_BASE_DIM = {ManifoldKind.TORUS: 3, ManifoldKind.SWISS_ROLL: 3}


class ManifoldSpec(FrozenSchema):
    """
    A data manifold and how to turn it into a mixture.

    Config keys: ``manifold.kind``, ``manifold.intrinsic_dim``,
    ``manifold.ambient_dim``, ``manifold.params``, ``manifold.n_centers``,
    ``manifold.kernel``, ``manifold.kernel_bandwidth``.
    """

    kind: ManifoldKind
    intrinsic_dim: int = Field(..., ge=1)
    ambient_dim: int = Field(..., ge=1)
    params: dict[str, float] = Field(default_factory=dict)
    n_centers: int = Field(default=512, ge=1)
    kernel: KernelKind = KernelKind.POINT
    kernel_bandwidth: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def check_dims(self) -> "ManifoldSpec":
        d, D = self.intrinsic_dim, self.ambient_dim
        if self.kind == ManifoldKind.EMBEDDED_GAUSSIAN:
            if d > D:
                raise ValueError("intrinsic_dim must not exceed ambient_dim")
        elif d >= D:
            raise ValueError("intrinsic_dim must be smaller than ambient_dim")
        if self.kind == ManifoldKind.SPHERE and D < d + 1:
            raise ValueError("a d-sphere needs ambient_dim >= d + 1")
        if self.kind in _BASE_DIM:
            if d != 2:
                raise ValueError(f"{self.kind.value} has intrinsic_dim 2")
            if D < _BASE_DIM[self.kind]:
                raise ValueError(f"{self.kind.value} needs ambient_dim >= 3")
        unknown = set(self.params) - set(MANIFOLD_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown params for {self.kind.value}: {sorted(unknown)}")
        if any(v <= 0.0 for v in self.params.values()):
            raise ValueError("shape parameters must be positive")
        return self

    def param(self, name: str) -> float:
        return float(self.params.get(name, MANIFOLD_DEFAULTS[self.kind][name]))


class DensityConfig(FrozenSchema):
    """
    Inline data density: a single Gaussian or a Gaussian mixture.

    Config keys: ``density.kind``, ``density.mean``, ``density.covariance``
    (gaussian) or ``density.weights``, ``density.means``,
    ``density.covariances`` (mixture).
    """

    kind: Literal["gaussian", "mixture"] = "gaussian"
    mean: tuple[float, ...] | None = None
    covariance: tuple[tuple[float, ...], ...] | None = None
    weights: tuple[float, ...] | None = None
    means: tuple[tuple[float, ...], ...] | None = None
    covariances: tuple[tuple[tuple[float, ...], ...], ...] | None = None

    @model_validator(mode="after")
    def check_components(self) -> "DensityConfig":
        if self.kind == "gaussian":
            if self.mean is None or self.covariance is None:
                raise ValueError("gaussian density needs mean and covariance")
            weights, means, covs = [1.0], [self.mean], [self.covariance]
        else:
            if self.weights is None or self.means is None or self.covariances is None:
                raise ValueError("mixture density needs weights, means and covariances")
            weights, means, covs = list(self.weights), list(self.means), list(self.covariances)
            if not (len(weights) == len(means) == len(covs)) or not weights:
                raise ValueError("weights, means and covariances must have equal nonzero length")
        if any(w <= 0.0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        dim = len(means[0])
        for m, c in zip(means, covs):
            c_arr = np.asarray(c, dtype=float)
            if len(m) != dim or c_arr.shape != (dim, dim):
                raise ValueError("all means and covariances must share one dimension")
            if np.max(np.abs(c_arr - c_arr.T)) > 1e-12:
                raise ValueError("covariances must be symmetric")
            if np.min(np.linalg.eigvalsh(c_arr)) < -1e-10:
                raise ValueError("covariances must be positive semidefinite")
        return self
