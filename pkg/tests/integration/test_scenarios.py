"""
Integration tests for the canned scenarios and the scenario runner.
"""

import json

import pytest

from gaugelab.core.errors import ConfigError
from gaugelab.core.output import ResultWriter
from gaugelab.scenarios import SCENARIOS, ScenarioRunner, resolve, suite_passed
from gaugelab.scenarios.base import ScenarioContext
from gaugelab.scenarios.gauge_cases import commuting_flows, rotation_counterexample
from gaugelab.scenarios.generators import conservative_bad_generator, curl_bad_generator
from gaugelab.schemas.reports import Verdict


class TestGenerators:
    """Test the bad-generator demonstrations."""

    def test_conservative_offset(self, writer):
        """Test the constant remainder offsets samples by about 2348.8."""
        [result] = conservative_bad_generator(ScenarioContext(seed=0, writer=writer))
        assert result.verdict == Verdict.PASS, result.checks
        assert result.quantities["offset_factor"] == pytest.approx(2348.8, abs=0.5)
        assert result.quantities["trace_invariance"] <= 1e-12
        assert (writer.out_dir / "conservative_bad_generator.csv").exists()

    def test_curl_deviation_exceeds_bound(self):
        """Test the curl remainder deviates by at least the analytic bound."""
        [result] = curl_bad_generator(ScenarioContext(seed=3))
        assert result.verdict == Verdict.PASS, result.checks
        assert result.quantities["deviation"] >= result.quantities["bound"]
        assert result.quantities["deviation_epsilon_zero"] == 0.0


class TestGaugeCases:
    """Test the gauge-remainder and commuting-flow cases."""

    def test_rotation_counterexample(self, writer):
        """Test the rotation remainder keeps samples and likelihoods, checked at 1000 (t, x) pairs."""
        [result] = rotation_counterexample(ScenarioContext(seed=0, writer=writer, threads=2))
        assert result.verdict == Verdict.PASS, result.checks
        assert result.quantities["residual_max"] < 1e-10
        assert result.quantities["asymmetry"] > 0.1
        assert result.quantities["gauge_pairs"] == 1000.0
        assert result.quantities["distinct_times"] == 1000.0
        lines = (writer.out_dir / "rotation_counterexample_gauge.csv").read_text().splitlines()
        assert lines[0] == "t,residual"
        assert len(lines) == 1001

    def test_commuting_flows(self):
        """Test every commuting case passes and the mixing case fails as expected."""
        results = commuting_flows(ScenarioContext(seed=0))
        by_name = {r.name: r for r in results}
        assert set(by_name) == {
            "commuting_flows",
            "commuting_flows_symmetric",
            "commuting_flows_rotation",
            "commuting_flows_mixing",
        }
        assert all(r.as_expected for r in results), [(r.name, r.checks) for r in results if not r.as_expected]
        assert by_name["commuting_flows_mixing"].verdict == Verdict.FAIL
        assert by_name["commuting_flows_mixing"].expected_fail


class TestRunner:
    """Test scenario resolution, ordering and reports."""

    def test_resolve(self):
        """Test 'all' expands in declaration order and unknown names fail."""
        assert resolve("all") == list(SCENARIOS)
        assert resolve("rotation_counterexample") == ["rotation_counterexample"]
        assert resolve("section4") == ["rotation_counterexample"]
        with pytest.raises(ConfigError, match="valid names"):
            resolve("no_such_scenario")

    def test_report_written(self, writer):
        """Test the runner writes report.json and the plot script."""
        results = ScenarioRunner(seed=0, threads=2, writer=writer).run("conservative_bad_generator")
        assert suite_passed(results)
        report = json.loads((writer.out_dir / "report.json").read_text())
        assert [r["name"] for r in report] == ["conservative_bad_generator"]
        assert report[0]["verdict"] == "Pass"
        assert (writer.out_dir / "plot.gp").exists()

    def test_deterministic_report(self, tmp_path):
        """Test two runs with the same seed give byte-identical reports."""
        texts = []
        for run in ("a", "b"):
            writer = ResultWriter(tmp_path / run)
            ScenarioRunner(seed=11, threads=2, writer=writer).run("curl_bad_generator")
            texts.append((writer.out_dir / "report.json").read_bytes())
        assert texts[0] == texts[1]

    def test_without_writer(self):
        """Test a runner without a writer only returns results."""
        results = ScenarioRunner(seed=0).run("conservative_bad_generator")
        assert len(results) == 1
