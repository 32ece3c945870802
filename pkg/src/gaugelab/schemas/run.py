"""
Run configuration.

A run is described by one TOML file whose top-level tables are the module
sections (``schedule``, ``density`` or ``manifold``, ``remainder``,
``integrator``, ``gauge``, ``idest``) plus ``seed`` and ``out_dir``. The
whole tree is validated before any computation starts; validation errors are
reported as dotted field paths.
"""

import tomllib
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError, model_validator

from gaugelab.core.errors import ConfigError
from gaugelab.schemas.base import BaseSchema, FrozenSchema
from gaugelab.schemas.density import DensityConfig, ManifoldSpec
from gaugelab.schemas.integrator import IntegratorConfig
from gaugelab.schemas.remainder import RemainderConfig
from gaugelab.schemas.schedule import ScheduleConfig


class GaugeSection(FrozenSchema):
    """Config keys: ``gauge.times``, ``gauge.n_mc``."""

    times: tuple[float, ...] = (1.0, 0.5, 0.1, 0.01)
    n_mc: int = Field(default=1000, ge=2)

    @model_validator(mode="after")
    def check_times(self) -> "GaugeSection":
        if not self.times or any(not 0.0 < t <= 1.0 for t in self.times):
            raise ValueError("gauge.times must lie in (0, 1]")
        return self


class IdSection(FrozenSchema):
    """Config keys: ``idest.slope_threshold``, ``idest.fit_decades``, ``idest.n_samples``."""

    slope_threshold: float = Field(default=0.5, gt=0.0)
    fit_decades: float = Field(default=1.0, gt=0.0)
    n_samples: int = Field(default=20, ge=1)


class RunConfig(BaseSchema):
    """Validated configuration for one CLI run."""

    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    density: DensityConfig | None = None
    manifold: ManifoldSpec | None = None
    remainder: RemainderConfig = Field(default_factory=RemainderConfig)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    gauge: GaugeSection = Field(default_factory=GaugeSection)
    idest: IdSection = Field(default_factory=IdSection)
    seed: int = Field(default=0, ge=0, lt=2**64)
    out_dir: Path = Path("out")

    @model_validator(mode="after")
    def check_data_source(self) -> "RunConfig":
        if self.density is not None and self.manifold is not None:
            raise ValueError("give either a density or a manifold section, not both")
        return self

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "RunConfig":
        """Validate a parsed config tree, converting errors to ``ConfigError``."""
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            paths = [".".join(str(p) for p in err["loc"]) or "<root>" for err in exc.errors()]
            details = "; ".join(
                f"{path}: {err['msg']}" for path, err in zip(paths, exc.errors())
            )
            raise ConfigError(f"invalid configuration: {details}", fields=paths) from exc

    @classmethod
    def from_toml(cls, path: Path | str | None, **overrides: Any) -> "RunConfig":
        """Load a TOML file (or defaults when ``path`` is None) and apply overrides."""
        data: dict[str, Any] = {}
        if path is not None:
            try:
                with Path(path).open("rb") as fh:
                    data = tomllib.load(fh)
            except FileNotFoundError as exc:
                raise ConfigError(f"config file not found: {path}", fields=["--config"]) from exc
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"config file is not valid TOML: {exc}", fields=["--config"]) from exc
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)
