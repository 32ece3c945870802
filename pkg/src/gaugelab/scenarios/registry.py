"""Scenario registry, in declaration order."""

from gaugelab.core.errors import ConfigError
from gaugelab.scenarios.base import Scenario
from gaugelab.scenarios.gauge_cases import commuting_flows, rotation_counterexample
from gaugelab.scenarios.generators import conservative_bad_generator, curl_bad_generator
from gaugelab.scenarios.id_suite import id_suite

SCENARIOS: dict[str, Scenario] = {
    "rotation_counterexample": rotation_counterexample,
    "conservative_bad_generator": conservative_bad_generator,
    "curl_bad_generator": curl_bad_generator,
    "commuting_flows": commuting_flows,
    "id_suite": id_suite,
}

# Alternate names accepted on the command line
ALIASES = {"section4": "rotation_counterexample"}


def resolve(name: str) -> list[str]:
    """Scenario names for ``name`` ("all" expands to every scenario)."""
    if name == "all":
        return list(SCENARIOS)
    name = ALIASES.get(name, name)
    if name not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {name!r}; valid names: {', '.join(['all', *SCENARIOS])}", fields=["scenario"]
        )
    return [name]
