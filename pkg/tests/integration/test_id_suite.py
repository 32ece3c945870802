"""
Acceptance runs of the intrinsic-dimension suite.

These integrate hundreds of sensitivity trajectories and are marked slow;
run them with ``pytest -m slow``.
"""

import pytest

from gaugelab.scenarios.base import ScenarioContext
from gaugelab.scenarios.id_suite import ID_CASES, id_suite, run_case


@pytest.mark.slow
class TestIdSuite:
    """Test the full manifold suite."""

    def test_every_case_as_expected(self):
        """Test each conservative case recovers its dimension and the cycle case fails."""
        results = id_suite(ScenarioContext(seed=0, threads=4))
        assert len(results) == len(ID_CASES)
        unexpected = [(r.name, r.quantities) for r in results if not r.as_expected]
        assert not unexpected, f"unexpected verdicts: {unexpected}"

    def test_non_conservative_case_notes(self, writer):
        """Test the cycle remainder case is flagged as unreliable and writes its CSV."""
        case = ID_CASES[-1]
        result = run_case(ScenarioContext(seed=0, writer=writer, threads=4), case, len(ID_CASES) - 1)
        assert result.expected_fail
        assert result.notes == ["non-conservative field: estimate unreliable"]
        assert (writer.out_dir / f"{case.name}.csv").exists()
