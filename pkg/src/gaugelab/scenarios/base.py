"""Shared scenario plumbing: run context and check builders."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from gaugelab.core.output import ResultWriter
from gaugelab.schemas.reports import CheckResult, ScenarioResult


@dataclass(frozen=True)
class ScenarioContext:
    """Seed, output sink and thread count handed to every scenario."""

    seed: int = 0
    writer: ResultWriter | None = None
    threads: int = 1

    def write_csv(self, name: str, header: list[str], rows) -> None:
        if self.writer is not None:
            self.writer.write_csv(name, header, rows)


Scenario = Callable[[ScenarioContext], list[ScenarioResult]]


def at_most(value: float, upper: float) -> CheckResult:
    return CheckResult(value=float(value), upper=upper)


def at_least(value: float, lower: float) -> CheckResult:
    return CheckResult(value=float(value), lower=lower)


def within(value: float, lower: float, upper: float) -> CheckResult:
    return CheckResult(value=float(value), lower=lower, upper=upper)


def relative_frobenius(estimate: np.ndarray, target: np.ndarray) -> float:
    return float(np.linalg.norm(estimate - target) / np.linalg.norm(target))
