"""Canned experiments with machine-checkable verdicts."""

from gaugelab.scenarios.registry import SCENARIOS, resolve
from gaugelab.scenarios.runner import ScenarioRunner, suite_passed

__all__ = ["SCENARIOS", "ScenarioRunner", "resolve", "suite_passed"]
