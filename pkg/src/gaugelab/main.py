"""
Command-line entry point.

Subcommands: ``sample``, ``likelihood``, ``gauge-check``, ``id`` and
``scenario``. Every subcommand validates the full run configuration and
builds its model before anything is written.

Exit codes: 0 success, 1 computation failure, 2 usage or configuration error.
"""

import argparse
import concurrent.futures
import logging
import sys
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from gaugelab import __version__
from gaugelab.analysis.flow import integrate, integrate_ensemble, likelihood, trajectory_header, trajectory_rows
from gaugelab.analysis.gauge import gauge_check, gauge_reports_csv
from gaugelab.analysis.idest import aggregate_json, experiment_csv, run_manifold_experiment
from gaugelab.core.config import get_settings
from gaugelab.core.errors import ConfigError, DomainError, GaugeLabError
from gaugelab.core.output import ResultWriter
from gaugelab.core.rng import derive_seed, make_generator
from gaugelab.models.density import MixtureDensity, diffuse, from_config
from gaugelab.models.fields import FieldSpec, RemainderSpec, remainder_from_config
from gaugelab.models.manifolds import manifold_density, points_header, read_points_csv, write_points_csv
from gaugelab.scenarios import ScenarioRunner, resolve, suite_passed
from gaugelab.schemas.integrator import AugmentFlags, Direction, HutchinsonConfig
from gaugelab.schemas.remainder import RemainderConfig, RemainderKind
from gaugelab.schemas.run import RunConfig
from gaugelab.schemas.schedule import ScheduleConfig

logger = logging.getLogger(__name__)

# Initial states per vectorized ensemble solve; fixed so outputs do not depend on --threads
ENSEMBLE_CHUNK = 1024


@dataclass(frozen=True)
class RunContext:
    config: RunConfig
    threads: int
    writer: ResultWriter


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="run configuration (TOML)")
    common.add_argument("--seed", type=int, default=None, help="root seed (overrides the config)")
    common.add_argument("--out", type=str, default=None, help="output directory (overrides the config)")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaugelab", description="Gauge freedom numerical lab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()

    sample = sub.add_parser("sample", parents=[common], help="draw samples with the backward ODE")
    sample.add_argument("--n", type=int, default=1000, help="number of samples")
    sample.add_argument("--trajectories", action="store_true", help="also write checkpointed trajectories")

    lik = sub.add_parser("likelihood", parents=[common], help="model log-density at given points")
    lik.add_argument("--points", type=str, required=True, help="CSV with header x0..x{D-1}")
    lik.add_argument("--trace-samples", type=int, default=0, help="Hutchinson draws (0: exact trace)")

    sub.add_parser("gauge-check", parents=[common], help="gauge condition residuals")
    sub.add_parser("id", parents=[common], help="intrinsic-dimension experiment")

    scen = sub.add_parser("scenario", parents=[common], help="run canned scenarios")
    scen.add_argument("name", help="scenario name or 'all'")
    return parser


def load_context(args: argparse.Namespace) -> RunContext:
    """Validate configuration and flags; nothing is written here."""
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be at least 1", fields=["--threads"])
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer", fields=["--seed"])
    config = RunConfig.from_toml(args.config, seed=args.seed, out_dir=args.out)
    threads = args.threads or get_settings().threads
    return RunContext(config=config, threads=threads, writer=ResultWriter(config.out_dir))


def data_density(config: RunConfig) -> MixtureDensity:
    if config.density is not None:
        return from_config(config.density)
    if config.manifold is not None:
        return manifold_density(config.manifold, derive_seed(config.seed, 0))
    raise ConfigError("config needs a density or a manifold section", fields=["density", "manifold"])


def remainder_fields(rc: RemainderConfig) -> list[str]:
    """Config paths a remainder resolution error points at."""
    if rc.kind == RemainderKind.LINEAR_MATRIX:
        return ["remainder.matrix", "remainder.generator"] if isinstance(rc.matrix, str) else ["remainder.matrix"]
    if rc.kind == RemainderKind.CONSTANT_DIRECTION:
        return ["remainder.epsilon"]
    return ["remainder.kind"]


def resolve_remainder(rc: RemainderConfig, p0: MixtureDensity, cfg: ScheduleConfig) -> RemainderSpec:
    """Resolve the remainder section; a mismatch with the data density is a config error."""
    try:
        return remainder_from_config(rc, p0, cfg)
    except DomainError as exc:
        fields = remainder_fields(rc)
        raise ConfigError(f"{fields[0]}: {exc}", fields=fields) from exc


def build_field(config: RunConfig) -> FieldSpec:
    p0 = data_density(config)
    remainder = resolve_remainder(config.remainder, p0, config.schedule)
    return FieldSpec(
        density=p0, schedule=config.schedule, remainder=remainder, negate_base=config.remainder.negate_base
    )


def cmd_sample(ctx: RunContext, n: int, with_trajectories: bool) -> int:
    if n < 0:
        raise ConfigError("--n must be nonnegative", fields=["--n"])
    config = ctx.config
    fs = build_field(config)
    cfg, icfg = config.schedule, config.integrator.model_copy(update={"direction": Direction.BACKWARD})
    p1 = diffuse(fs.density, cfg, cfg.t_max)
    x_inits = p1.sample(n, make_generator(derive_seed(config.seed, 1)))

    chunks = [x_inits[i : i + ENSEMBLE_CHUNK] for i in range(0, n, ENSEMBLE_CHUNK)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=ctx.threads) as pool:
        ends = [f.result() for f in [pool.submit(integrate_ensemble, fs, cfg, icfg, c) for c in chunks]]
    samples = np.concatenate(ends) if ends else np.zeros((0, fs.dim))
    write_points_csv(ctx.writer, "samples.csv", samples)

    if with_trajectories:
        with concurrent.futures.ThreadPoolExecutor(max_workers=ctx.threads) as pool:
            records = list(pool.map(lambda x: integrate(fs, cfg, icfg, x, AugmentFlags(logdet=True)), x_inits))
        if records:
            header = trajectory_header(records[0], with_sample_id=True)
        else:
            header = ["sample_id", "t", *points_header(fs.dim), "logdet"]
        rows = [row for i, rec in enumerate(records) for row in trajectory_rows(rec, sample_id=i)]
        ctx.writer.write_csv("trajectories.csv", header, rows)
    logger.info(f"Sampled {n} points")
    return 0


def cmd_likelihood(ctx: RunContext, points_file: str, trace_samples: int) -> int:
    if trace_samples < 0:
        raise ConfigError("--trace-samples must be nonnegative", fields=["--trace-samples"])
    config = ctx.config
    fs = build_field(config)
    try:
        points = read_points_csv(points_file)
    except (OSError, ValueError, StopIteration) as exc:
        raise ConfigError(f"cannot read points file {points_file}: {exc}", fields=["--points"]) from exc
    if points.shape[0] and points.shape[1] != fs.dim:
        raise ConfigError(f"points have dimension {points.shape[1]}, expected {fs.dim}", fields=["--points"])
    cfg = config.schedule
    hutch = HutchinsonConfig(n_probes=trace_samples, seed=derive_seed(config.seed, 2)) if trace_samples else None

    with concurrent.futures.ThreadPoolExecutor(max_workers=ctx.threads) as pool:
        model = list(pool.map(lambda x: likelihood(fs, cfg, config.integrator, x, hutch), points))
    p_min = diffuse(fs.density, cfg, cfg.t_min)
    rows = []
    for x, lp in zip(points, model):
        exact = float(p_min.log_density(x))
        rows.append([*x.tolist(), lp, exact, abs(lp - exact)])
    ctx.writer.write_csv("logp.csv", [*points_header(fs.dim), "logp_model", "logp_analytic", "abs_err"], rows)
    return 0


def cmd_gauge_check(ctx: RunContext) -> int:
    config = ctx.config
    fs = build_field(config)
    reports = gauge_check(
        fs.remainder, fs.density, config.schedule, config.gauge.times, config.gauge.n_mc, derive_seed(config.seed, 3)
    )
    gauge_reports_csv(reports, ctx.writer)
    return 0


def cmd_id(ctx: RunContext) -> int:
    config = ctx.config
    if config.manifold is None:
        raise ConfigError("the id command needs a manifold section", fields=["manifold"])
    rc = config.remainder
    result = run_manifold_experiment(
        config.manifold,
        lambda p0, cfg: resolve_remainder(rc, p0, cfg),
        n_samples=config.idest.n_samples,
        seed=config.seed,
        cfg=config.schedule,
        icfg=config.integrator,
        slope_threshold=config.idest.slope_threshold,
        fit_decades=config.idest.fit_decades,
        threads=ctx.threads,
    )
    experiment_csv(result, ctx.writer)
    aggregate_json(result, ctx.writer)
    return 0


def cmd_scenario(ctx: RunContext, name: str) -> int:
    resolve(name)
    runner = ScenarioRunner(seed=ctx.config.seed, threads=ctx.threads, writer=ctx.writer)
    results = runner.run(name)
    failed = [r.name for r in results if not r.as_expected]
    if failed:
        logger.error(f"Unexpected verdicts: {', '.join(failed)}")
    return 0 if suite_passed(results) else 1


def run(args: argparse.Namespace) -> int:
    ctx = load_context(args)
    if args.command == "sample":
        return cmd_sample(ctx, args.n, args.trajectories)
    if args.command == "likelihood":
        return cmd_likelihood(ctx, args.points, args.trace_samples)
    if args.command == "gauge-check":
        return cmd_gauge_check(ctx)
    if args.command == "id":
        return cmd_id(ctx)
    return cmd_scenario(ctx, args.name)


def main(argv: Sequence[str] | None = None) -> int:
    """CLI entry point; returns the process exit code."""
    settings = get_settings()
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as e:
        logger.error(str(e))
        return 2
    except GaugeLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
