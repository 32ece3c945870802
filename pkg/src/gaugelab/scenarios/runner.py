"""
Concurrent scenario runner.

Scenarios are independent, so they run on a shared thread pool; results are
collected in declaration order, which keeps the report byte-identical for a
given seed whatever the completion order.
"""

import concurrent.futures
import logging
from collections.abc import Sequence

from gaugelab.core.output import ResultWriter
from gaugelab.scenarios.base import ScenarioContext
from gaugelab.scenarios.registry import SCENARIOS, resolve
from gaugelab.schemas.reports import ScenarioResult

logger = logging.getLogger(__name__)

GNUPLOT_TEMPLATE = """\
# Generic plot for a gaugelab CSV artifact.
# usage: gnuplot -e "file='rotation_counterexample_gauge.csv'; xcol=1; ycol=2" plot.gp
set datafile separator ','
set key autotitle columnhead
set logscale x
set grid
set terminal pngcairo size 900,600
set output file.'.png'
plot file using xcol:ycol with linespoints
"""


class ScenarioRunner:
    """
    Runs named scenarios on a thread pool and writes the suite report.

    Each scenario gets the same seed and writer; per-scenario CSVs go to the
    writer's directory next to ``report.json``.
    """

    def __init__(self, seed: int, threads: int = 1, writer: ResultWriter | None = None):
        self.seed = seed
        self.threads = threads
        self.writer = writer
        self.executor: concurrent.futures.ThreadPoolExecutor | None = None

    def _create_executor(self) -> concurrent.futures.ThreadPoolExecutor:
        if not self.executor:
            self.executor = concurrent.futures.ThreadPoolExecutor(
                max_workers=self.threads, thread_name_prefix="scenario-"
            )
            logger.info(f"Created scenario executor with {self.threads} max workers")
        return self.executor

    def _run_one(self, name: str) -> list[ScenarioResult]:
        logger.info(f"Starting scenario {name}")
        ctx = ScenarioContext(seed=self.seed, writer=self.writer, threads=self.threads)
        results = SCENARIOS[name](ctx)
        for r in results:
            status = "as expected" if r.as_expected else "UNEXPECTED"
            logger.info(f"Scenario {r.name}: {r.verdict.value} ({status})")
        return results

    def run(self, name: str = "all") -> list[ScenarioResult]:
        """Run ``name`` (or every scenario) and return results in declaration order."""
        names = resolve(name)
        executor = self._create_executor()
        try:
            futures = [executor.submit(self._run_one, n) for n in names]
            results = [r for f in futures for r in f.result()]
        finally:
            self.shutdown()
        if self.writer is not None:
            self.write_report(results)
        return results

    def write_report(self, results: Sequence[ScenarioResult]) -> None:
        self.writer.write_json("report.json", [r.model_dump(mode="json") for r in results])
        self.writer.write_text("plot.gp", GNUPLOT_TEMPLATE)

    def shutdown(self) -> None:
        if self.executor:
            self.executor.shutdown(wait=True)
            self.executor = None


def suite_passed(results: Sequence[ScenarioResult]) -> bool:
    """True when every scenario's verdict matches its expectation."""
    return all(r.as_expected for r in results)
