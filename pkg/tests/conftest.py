"""Shared fixtures for the gaugelab test suite."""

import numpy as np
import pytest

from gaugelab.core.config import get_settings
from gaugelab.core.output import ResultWriter
from gaugelab.models.density import diagonal_gaussian
from gaugelab.schemas.schedule import BetaKind, ScheduleConfig, ScheduleKind


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop cached settings so environment overrides apply per test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def ve_schedule() -> ScheduleConfig:
    """VarianceExploding schedule with g(t) = 25**t and t_min = 1e-3."""
    return ScheduleConfig(g_base=25.0, t_min=1e-3)


@pytest.fixture
def linear_drift_schedule() -> ScheduleConfig:
    """LinearDrift schedule with beta rising linearly from 0.1 to 20."""
    return ScheduleConfig(
        kind=ScheduleKind.LINEAR_DRIFT, beta_kind=BetaKind.LINEAR, beta_min=0.1, beta_max=20.0, t_min=1e-3
    )


@pytest.fixture
def diag_gaussian_2d():
    """N(0, diag(2, 0.5)), the rotation-remainder example density."""
    return diagonal_gaussian([2.0, 0.5])


@pytest.fixture
def embedded_gaussian_5d():
    """N(0, diag(1, 1, 0, 0, 0)): a 2-dimensional Gaussian manifold in R^5."""
    return diagonal_gaussian([1.0, 1.0, 0.0, 0.0, 0.0])


@pytest.fixture
def writer(tmp_path) -> ResultWriter:
    return ResultWriter(tmp_path / "out")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
