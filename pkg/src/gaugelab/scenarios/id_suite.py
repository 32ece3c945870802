"""Intrinsic-dimension experiments on the standard manifolds."""

import logging
from dataclasses import dataclass

import numpy as np

from gaugelab.analysis.idest import experiment_csv, run_manifold_experiment
from gaugelab.core.rng import derive_seed
from gaugelab.models.density import MixtureDensity
from gaugelab.models.fields import RemainderSpec, scaled_antisymmetric
from gaugelab.scenarios.base import ScenarioContext, at_least, within
from gaugelab.schemas.density import KernelKind, ManifoldKind, ManifoldSpec
from gaugelab.schemas.reports import ScenarioResult
from gaugelab.schemas.schedule import ScheduleConfig

logger = logging.getLogger(__name__)

N_SAMPLES = 20
MIN_AGREEMENT = 0.9
BANDWIDTH = 0.1

# Antisymmetric 3-cycle on coordinates (0, 2, 3): couples one tangent and two normal directions
CYCLE_GENERATOR = np.zeros((5, 5))
for _i, _j in ((0, 2), (0, 3), (2, 3)):
    CYCLE_GENERATOR[_i, _j], CYCLE_GENERATOR[_j, _i] = 1.0, -1.0
CYCLE_SCALE = 5.0


@dataclass(frozen=True)
class IdCase:
    name: str
    spec: ManifoldSpec
    expected_fail: bool = False
    non_conservative: bool = False


def _manifold(kind: ManifoldKind, d: int, dim: int) -> ManifoldSpec:
    if kind == ManifoldKind.EMBEDDED_GAUSSIAN:
        return ManifoldSpec(kind=kind, intrinsic_dim=d, ambient_dim=dim)
    return ManifoldSpec(
        kind=kind, intrinsic_dim=d, ambient_dim=dim, kernel=KernelKind.TANGENT, kernel_bandwidth=BANDWIDTH
    )


ID_CASES: tuple[IdCase, ...] = (
    IdCase("id_gaussian_2_in_5", _manifold(ManifoldKind.EMBEDDED_GAUSSIAN, 2, 5)),
    *(IdCase(f"id_sphere_{dim // 2 - 1}_in_{dim}", _manifold(ManifoldKind.SPHERE, dim // 2 - 1, dim)) for dim in (4, 6, 8)),
    *(IdCase(f"id_torus_in_{dim}", _manifold(ManifoldKind.TORUS, 2, dim)) for dim in (3, 5)),
    *(IdCase(f"id_swiss_roll_in_{dim}", _manifold(ManifoldKind.SWISS_ROLL, 2, dim)) for dim in (3, 5)),
    IdCase(
        "id_gaussian_2_in_5_non_conservative",
        _manifold(ManifoldKind.EMBEDDED_GAUSSIAN, 2, 5),
        expected_fail=True,
        non_conservative=True,
    ),
)


def cycle_remainder(p0: MixtureDensity, cfg: ScheduleConfig) -> RemainderSpec:
    return scaled_antisymmetric(p0, cfg, CYCLE_GENERATOR, CYCLE_SCALE)


def run_case(ctx: ScenarioContext, case: IdCase, key: int) -> ScenarioResult:
    outcome = run_manifold_experiment(
        case.spec,
        cycle_remainder if case.non_conservative else None,
        n_samples=N_SAMPLES,
        seed=derive_seed(ctx.seed, key),
        threads=ctx.threads,
    )
    if ctx.writer is not None:
        experiment_csv(outcome, ctx.writer, f"{case.name}.csv")
    summary = outcome.summary
    d = case.spec.intrinsic_dim
    return ScenarioResult(
        name=case.name,
        quantities={"modal_d": float(summary.modal_d), "agreement": summary.agreement, "true_d": float(d)},
        checks={
            "modal_d": within(summary.modal_d, d, d),
            "agreement": at_least(summary.agreement, MIN_AGREEMENT),
        },
        tolerance_used=MIN_AGREEMENT,
        expected_fail=case.expected_fail,
        notes=[summary.note] if summary.note else [],
    )


def id_suite(ctx: ScenarioContext) -> list[ScenarioResult]:
    """Modal d_hat must equal the true dimension with at least 90% agreement over 20 samples."""
    return [run_case(ctx, case, key) for key, case in enumerate(ID_CASES)]
