"""
Intrinsic-dimension estimation from sensitivity trajectories.

Integrating ``dY/dt = grad f_tilde . Y`` from t = 1 down to t_min contracts
the directions normal to the data manifold like the noise amplitude, while
tangent directions saturate. Counting singular values of Y whose log-log
slope against sigma(t) stays below a threshold near t_min estimates the
manifold dimension.
"""

import logging
from collections import Counter
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from gaugelab.analysis.flow import TrajectoryRecord, integrate
from gaugelab.core.config import get_settings
from gaugelab.core.errors import DivergenceError, DomainError, EstimationError, LemmaError
from gaugelab.core.output import ResultWriter
from gaugelab.core.rng import derive_seed, make_generator
from gaugelab.models import sde
from gaugelab.models.density import MixtureDensity, diffuse
from gaugelab.models.fields import FieldSpec, RemainderSpec, conservativity_check, zero_remainder
from gaugelab.models.manifolds import manifold_density
from gaugelab.schemas.density import ManifoldSpec
from gaugelab.schemas.integrator import AugmentFlags, Direction, IntegratorConfig
from gaugelab.schemas.reports import ExperimentSummary, IdEstimate
from gaugelab.schemas.schedule import ScheduleConfig

logger = logging.getLogger(__name__)

NON_CONSERVATIVE_NOTE = "non-conservative field: estimate unreliable"

RemainderBuilder = Callable[[MixtureDensity, ScheduleConfig], RemainderSpec]


@dataclass(frozen=True, eq=False)
class SingularTrajectory:
    """Singular values of Y along a backward trajectory, times descending from 1."""

    ts: np.ndarray  # (M,)
    sv: np.ndarray  # (M, D), rows descending
    sigma: np.ndarray  # (M,) marginal noise std at each checkpoint
    mu: np.ndarray | None = None  # (M, D) eigenvalues of grad f_tilde matched to sv

    @property
    def dim(self) -> int:
        return self.sv.shape[1]


def singular_trajectories(rec: TrajectoryRecord, cfg: ScheduleConfig, tol: float = 1e-8) -> SingularTrajectory:
    """
    SVD of Y at every checkpoint of a backward sensitivity run.

    ``mu`` is recorded when every checkpoint Jacobian is symmetric to ``tol``
    (relative); it holds the Rayleigh quotients of the Jacobian on the left
    singular vectors, i.e. its eigenvalues paired with each singular value.
    """
    if rec.Y is None or rec.jacobians is None:
        raise DomainError("singular_trajectories needs a record integrated with sensitivity")
    if rec.direction != Direction.BACKWARD:
        raise DomainError("singular_trajectories needs a backward trajectory")
    if not np.all(np.isfinite(rec.Y)):
        bad = int(np.argmax(~np.all(np.isfinite(rec.Y), axis=(1, 2))))
        raise DivergenceError("non-finite sensitivity matrix", float(rec.ts[bad]))
    u, sv, _ = np.linalg.svd(rec.Y)
    jac = rec.jacobians
    asym = np.linalg.norm(jac - np.swapaxes(jac, 1, 2), axis=(1, 2))
    scale = np.maximum(1.0, np.linalg.norm(jac, axis=(1, 2)))
    mu = None
    if np.all(asym <= tol * scale):
        mu = np.einsum("mdi,mde,mei->mi", u, jac, u)
    return SingularTrajectory(
        ts=np.asarray(rec.ts, dtype=float),
        sv=sv,
        sigma=np.asarray(sde.transition_std(cfg, rec.ts), dtype=float),
        mu=mu,
    )


def lemma_check(st: SingularTrajectory, eps_index: int) -> float:
    """
    Largest relative error of ``lambda_i(t) = lambda_i(eps) exp(-2 int_t^eps mu_i)``.

    ``lambda_i = sv_i**2``; the exponent is integrated by cumulative Simpson in
    ``ln t`` over the checkpoints from ``ts[eps_index]`` down to t_min.

    Raises:
        LemmaError: when the trajectory carries no eigenvalues.
    """
    if st.mu is None:
        raise LemmaError("lemma requires conservative field")
    if not 0 <= eps_index < st.ts.size:
        raise DomainError(f"eps_index {eps_index} outside [0, {st.ts.size})")
    # ascending in time, ending at eps
    ts = st.ts[eps_index:][::-1]
    lam = st.sv[eps_index:][::-1] ** 2
    mu = st.mu[eps_index:][::-1]
    if ts.size < 2:
        return 0.0
    log_t = np.log(ts)
    integrand = mu * ts[:, None]
    if ts.size >= 3:
        cum = cumulative_simpson(integrand, x=log_t, axis=0, initial=0.0)
    else:
        cum = cumulative_trapezoid(integrand, x=log_t, axis=0, initial=0.0)
    tail = cum[-1][None, :] - cum
    predicted = lam[-1][None, :] * np.exp(-2.0 * tail)
    return float(np.max(np.abs(predicted - lam) / lam))


def fit_slopes(st: SingularTrajectory, fit_decades: float = 1.0) -> np.ndarray:
    """Least-squares slopes of ``log sv_i`` against ``log sigma`` over the last decades above t_min."""
    t_lo, t_hi = float(np.min(st.ts)), float(np.max(st.ts))
    if np.log10(t_hi / t_lo) < fit_decades - 1e-12:
        raise EstimationError(f"checkpoints span fewer than {fit_decades} decades")
    window = np.log10(st.ts) <= np.log10(t_lo) + fit_decades + 1e-12
    if np.count_nonzero(window) < 3:
        raise EstimationError("fewer than 3 checkpoints in the fitting window")
    x = np.log(st.sigma[window])
    y = np.log(st.sv[window])
    return np.polyfit(x, y, 1)[0]


def estimate_id(st: SingularTrajectory, slope_threshold: float = 0.5, fit_decades: float = 1.0) -> IdEstimate:
    """Count singular values that saturate near t_min (``|slope| < slope_threshold``)."""
    slopes = fit_slopes(st, fit_decades)
    d_hat = int(np.count_nonzero(np.abs(slopes) < slope_threshold))
    return IdEstimate(d_hat=d_hat, slopes=[float(s) for s in slopes], threshold=slope_threshold)


def commutator_norms(rec: TrajectoryRecord) -> np.ndarray:
    """``||[Y Y^T, grad f_tilde]||_F`` per checkpoint; a diagnostic only."""
    if rec.Y is None or rec.jacobians is None:
        raise DomainError("commutator_norms needs a record integrated with sensitivity")
    p = rec.Y @ np.swapaxes(rec.Y, 1, 2)
    comm = p @ rec.jacobians - rec.jacobians @ p
    return np.linalg.norm(comm, axis=(1, 2))


def modal_value(values: list[int]) -> tuple[int, float]:
    """Mode (smallest on ties) and the fraction of values equal to it."""
    if not values:
        raise EstimationError("no estimates to aggregate")
    counts = Counter(values)
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)
    return mode, top / len(values)


@dataclass(frozen=True)
class ExperimentResult:
    estimates: list[IdEstimate]
    summary: ExperimentSummary
    conservative: bool


def _estimate_one(fs: FieldSpec, cfg: ScheduleConfig, icfg: IntegratorConfig, x_init: np.ndarray,
                  slope_threshold: float, fit_decades: float, sample_id: int) -> IdEstimate:
    rec = integrate(fs, cfg, icfg, x_init, AugmentFlags(sensitivity=True))
    est = estimate_id(singular_trajectories(rec, cfg), slope_threshold, fit_decades)
    logger.debug(f"sample {sample_id}: d_hat={est.d_hat} slopes={[round(s, 3) for s in est.slopes]}")
    return est


def run_manifold_experiment(
    spec: ManifoldSpec,
    remainder: RemainderSpec | RemainderBuilder | None = None,
    n_samples: int = 20,
    seed: int = 0,
    cfg: ScheduleConfig | None = None,
    icfg: IntegratorConfig | None = None,
    slope_threshold: float = 0.5,
    fit_decades: float = 1.0,
    threads: int | None = None,
) -> ExperimentResult:
    """
    Estimate the intrinsic dimension of a manifold from ``n_samples`` trajectories.

    The data density is the manifold's closed-form mixture. Initial points are
    drawn from the diffused density at t = 1 with one random stream per
    sample, so the estimates do not depend on ``threads``.

    Args:
        spec: manifold and kernel settings.
        remainder: model remainder, or a builder taking ``(p0, cfg)``.
        n_samples: number of trajectories.
        seed: root seed for the mixture centres and the initial points.
        cfg: schedule; defaults to the VarianceExploding schedule.
        icfg: integrator settings; the direction is forced to backward.
        slope_threshold: saturation threshold passed to estimate_id.
        fit_decades: fitting window passed to estimate_id.
        threads: worker threads; defaults to the process settings.

    Returns:
        Per-sample estimates and their modal aggregate. Fields with an
        asymmetric Jacobian are flagged as unreliable.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be positive")
    settings = get_settings()
    cfg = cfg or ScheduleConfig(t_min=settings.t_min)
    icfg = (icfg or IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9)).model_copy(
        update={"direction": Direction.BACKWARD}
    )
    p0 = manifold_density(spec, derive_seed(seed, 0))
    if remainder is None:
        rem = zero_remainder()
    elif isinstance(remainder, RemainderSpec):
        rem = remainder
    else:
        rem = remainder(p0, cfg)
    fs = FieldSpec(density=p0, schedule=cfg, remainder=rem)

    p1 = diffuse(p0, cfg, cfg.t_max)
    x_inits = np.stack([p1.sample(1, make_generator(derive_seed(seed, 1, i)))[0] for i in range(n_samples)])
    conservative = all(
        conservativity_check(fs, x_inits, t).is_conservative for t in (cfg.t_max, 0.1, cfg.t_min)
    )

    with ThreadPoolExecutor(max_workers=threads or settings.threads) as pool:
        futures = [
            pool.submit(_estimate_one, fs, cfg, icfg, x_inits[i], slope_threshold, fit_decades, i)
            for i in range(n_samples)
        ]
        estimates = [f.result() for f in futures]

    per_sample = [e.d_hat for e in estimates]
    modal_d, agreement = modal_value(per_sample)
    note = "" if conservative else NON_CONSERVATIVE_NOTE
    if not conservative:
        logger.warning(f"{spec.kind.value} in D={spec.ambient_dim}: {NON_CONSERVATIVE_NOTE}")
    summary = ExperimentSummary(
        modal_d=modal_d,
        agreement=agreement,
        n_samples=n_samples,
        conservative=conservative,
        note=note,
        spec=spec.model_dump(mode="json"),
    )
    logger.info(
        f"{spec.kind.value} d={spec.intrinsic_dim} D={spec.ambient_dim}: "
        f"modal d_hat={modal_d} (agreement {agreement:.2f})"
    )
    return ExperimentResult(estimates=estimates, summary=summary, conservative=conservative)


def experiment_csv(result: ExperimentResult, writer: ResultWriter, name: str = "id_experiment.csv"):
    """Rows ``sample_id, d_hat, slope_0..``."""
    dim = len(result.estimates[0].slopes) if result.estimates else 0
    header = ["sample_id", "d_hat", *[f"slope_{i}" for i in range(dim)]]
    rows = [[i, e.d_hat, *e.slopes] for i, e in enumerate(result.estimates)]
    return writer.write_csv(name, header, rows)


def aggregate_json(result: ExperimentResult, writer: ResultWriter, name: str = "id_aggregate.json"):
    return writer.write_json(name, result.summary.model_dump(mode="json"))
