"""
Probability-flow ODE integration.

The backward ODE ``dx/dt = f_tilde(x, t)`` is solved in the reversed
variable ``tau = 1 - t`` so that the integrator always marches forward. The
state can be augmented with:

* ``logdet``: the divergence integral of the instantaneous change of
  variables, exact trace or a Hutchinson estimate with random vectors fixed per
  trajectory,
* ``sensitivity``: ``Y`` with ``dY/dt = grad f_tilde . Y`` and ``Y = I`` at the
  start, integrated jointly with x,
* ``liouville``: ``int tr grad f_tilde`` along the direction of integration,
  which equals ``log det Y``.

``logdet`` is always oriented so that ``log p(x_lower) = log p(x_upper) +
logdet`` for the two ends of the integrated interval.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import solve_ivp

from gaugelab.core.errors import DivergenceError, DomainError, StiffnessError
from gaugelab.core.output import ResultWriter
from gaugelab.core.rng import make_generator
from gaugelab.models import sde
from gaugelab.models.density import diffuse
from gaugelab.models.fields import FieldSpec, backward_field, backward_field_and_jacobian
from gaugelab.schemas.integrator import (
    AugmentFlags,
    Direction,
    HutchinsonConfig,
    IntegratorConfig,
    IntegratorMethod,
    ProbeDist,
)
from gaugelab.schemas.schedule import ScheduleConfig, TimeGrid

logger = logging.getLogger(__name__)

_SCIPY_METHOD = {
    IntegratorMethod.RK45_ADAPTIVE: "RK45",
    IntegratorMethod.DOP853_ADAPTIVE: "DOP853",
}

RHS = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Checkpointed solution of the (augmented) probability-flow ODE."""

    ts: np.ndarray  # checkpoint times in integration order
    direction: Direction
    states: np.ndarray  # (M, D)
    logdet: np.ndarray | None = None  # (M,)
    Y: np.ndarray | None = None  # (M, D, D)
    liouville: np.ndarray | None = None  # (M,)
    jacobians: np.ndarray | None = None  # (M, D, D), grad f_tilde at each checkpoint
    n_evals: int = 0

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def logdet_increment(self) -> float:
        if self.logdet is None:
            raise DomainError("trajectory was integrated without logdet")
        return float(self.logdet[-1])

    @property
    def liouville_integral(self) -> float:
        if self.liouville is None:
            raise DomainError("trajectory was integrated without liouville")
        return float(self.liouville[-1])

    @property
    def checkpoints(self) -> TimeGrid:
        ts = self.ts if self.direction == Direction.BACKWARD else self.ts[::-1]
        return TimeGrid(checkpoints=tuple(float(t) for t in ts))


def _trace_vectors(cfg: HutchinsonConfig, n: int, dim: int) -> np.ndarray:
    rng = make_generator(cfg.seed)
    if cfg.probe_dist == ProbeDist.RADEMACHER:
        return rng.integers(0, 2, size=(n, dim)).astype(float) * 2.0 - 1.0
    return rng.standard_normal((n, dim))


def _quadratic_forms(jac: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    # symmetrize first so antisymmetric parts contribute exactly zero
    sym = 0.5 * (jac + jac.T)
    return np.einsum("nd,de,ne->n", vecs, sym, vecs)


def hutchinson_trace(jac: ArrayLike | Callable[[np.ndarray], np.ndarray], n_probes: int,
                     probe_dist: ProbeDist = ProbeDist.GAUSSIAN, seed: int = 0,
                     dim: int | None = None) -> tuple[float, float]:
    """
    Skilling-Hutchinson estimate ``mean(eps^T J eps)`` with its standard error.

    ``jac`` is a matrix or a batched matrix action ``(N, D) -> (N, D)``
    (then ``dim`` is required).
    """
    if n_probes < 1:
        raise DomainError("n_probes must be at least 1")
    if callable(jac):
        if dim is None:
            raise DomainError("dim is required for a matrix action")
        vecs = _trace_vectors(HutchinsonConfig(n_probes=n_probes, probe_dist=probe_dist, seed=seed), n_probes, dim)
        forms = np.sum(vecs * jac(vecs), axis=1)
    else:
        mat = np.asarray(jac, dtype=float)
        vecs = _trace_vectors(
            HutchinsonConfig(n_probes=n_probes, probe_dist=probe_dist, seed=seed), n_probes, mat.shape[0]
        )
        forms = _quadratic_forms(mat, vecs)
    estimate = float(np.mean(forms))
    if n_probes < 2:
        return estimate, float("nan")
    return estimate, float(np.std(forms, ddof=1) / math.sqrt(n_probes))


def _rk4(rhs: RHS, y0: np.ndarray, tau_eval: np.ndarray, n_steps: int) -> tuple[np.ndarray, int]:
    """Classic RK4 with step counts per checkpoint segment proportional to its length."""
    span = tau_eval[-1] - tau_eval[0]
    out = np.empty((tau_eval.size, y0.size))
    out[0] = y0
    y = y0.copy()
    evals = 0
    for j in range(1, tau_eval.size):
        a, b = tau_eval[j - 1], tau_eval[j]
        steps = max(1, math.ceil(n_steps * (b - a) / span - 1e-9))
        h = (b - a) / steps
        for i in range(steps):
            tau = a + i * h
            k1 = rhs(tau, y)
            k2 = rhs(tau + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(tau + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(tau + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            evals += 4
        out[j] = y
    return out, evals


def _solve(rhs: RHS, y0: np.ndarray, tau_eval: np.ndarray, icfg: IntegratorConfig,
           to_time: Callable[[float], float]) -> tuple[np.ndarray, int]:
    if icfg.method == IntegratorMethod.RK4_FIXED:
        ys, evals = _rk4(rhs, y0, tau_eval, icfg.n_steps)
    else:
        sol = solve_ivp(
            rhs,
            (float(tau_eval[0]), float(tau_eval[-1])),
            y0,
            method=_SCIPY_METHOD[icfg.method],
            t_eval=tau_eval,
            rtol=icfg.rel_tol,
            atol=icfg.abs_tol,
        )
        if not sol.success:
            raise StiffnessError(f"adaptive integration failed: {sol.message}", to_time(float(sol.t[-1])))
        ys, evals = sol.y.T, int(sol.nfev)
    bad = ~np.all(np.isfinite(ys), axis=1)
    if np.any(bad):
        first = int(np.argmax(bad))
        raise DivergenceError("non-finite state", to_time(float(tau_eval[first])))
    logger.debug(f"{icfg.method.value}: {evals} field evaluations")
    return ys, evals


def _time_map(grid: TimeGrid, direction: Direction) -> tuple[np.ndarray, np.ndarray, float, Callable[[float], float]]:
    """Checkpoint times in integration order, their tau values, the sign of dt/dtau and tau -> t."""
    ts = np.asarray(grid.checkpoints, dtype=float)
    if direction == Direction.FORWARD:
        ts = ts[::-1]
    t0 = float(ts[0])
    sign = -1.0 if direction == Direction.BACKWARD else 1.0

    def to_time(tau: float) -> float:
        # rounding in t0 + sign * tau can step just outside [0, 1]
        return min(1.0, max(0.0, t0 + sign * tau))

    return ts, np.abs(ts - t0), sign, to_time


def integrate(fs: FieldSpec, cfg: ScheduleConfig, icfg: IntegratorConfig, x_init: ArrayLike,
              augment: AugmentFlags | None = None, grid: TimeGrid | None = None) -> TrajectoryRecord:
    """
    Solve the probability-flow ODE for one initial condition.

    Args:
        fs: model field.
        cfg: forward schedule (drift and diffusion).
        icfg: integrator settings; ``direction`` picks 1 -> t_min or t_min -> 1.
        x_init: initial state at the start time.
        augment: quantities integrated with the state.
        grid: checkpoints; defaults to ``icfg.n_checkpoints`` log-uniform
            points between 1 and ``cfg.t_min``.

    Returns:
        TrajectoryRecord with checkpoint values in integration order.

    Raises:
        StiffnessError: adaptive step underflow.
        DivergenceError: non-finite state.
    """
    augment = augment or AugmentFlags()
    x0 = np.asarray(x_init, dtype=float)
    dim = fs.dim
    if x0.shape != (dim,):
        raise DomainError(f"x_init has shape {x0.shape}, expected ({dim},)")
    if not np.all(np.isfinite(x0)):
        raise DomainError("x_init must be finite")
    grid = grid or sde.make_time_grid(cfg.t_min, icfg.n_checkpoints)
    ts, tau_eval, sign, to_time = _time_map(grid, icfg.direction)

    hutch = augment.hutchinson
    vecs = _trace_vectors(hutch, hutch.n_probes, dim) if hutch is not None else None
    need_jac = augment.logdet or augment.sensitivity or augment.liouville

    # state layout: x | logdet | Y (row-major) | liouville
    i_ld = dim
    i_y = i_ld + (1 if augment.logdet else 0)
    i_lv = i_y + (dim * dim if augment.sensitivity else 0)
    size = i_lv + (1 if augment.liouville else 0)

    def rhs(tau: float, y: np.ndarray) -> np.ndarray:
        t = to_time(tau)
        x = y[:dim]
        if not np.all(np.isfinite(x)):
            raise DivergenceError("non-finite state", t)
        out = np.empty(size)
        if not need_jac:
            out[:dim] = sign * backward_field(fs, cfg, x, t)
            return out
        f, jac = backward_field_and_jacobian(fs, cfg, x, t)
        out[:dim] = sign * f
        if augment.logdet:
            out[i_ld] = np.trace(jac) if vecs is None else np.mean(_quadratic_forms(jac, vecs))
        if augment.sensitivity:
            out[i_y:i_lv] = sign * (jac @ y[i_y:i_lv].reshape(dim, dim)).reshape(-1)
        if augment.liouville:
            out[i_lv] = sign * np.trace(jac)
        return out

    y0 = np.zeros(size)
    y0[:dim] = x0
    if augment.sensitivity:
        y0[i_y:i_lv] = np.eye(dim).reshape(-1)
    ys, evals = _solve(rhs, y0, tau_eval, icfg, to_time)
    ys[0] = y0

    states = ys[:, :dim].copy()
    ys_y = ys[:, i_y:i_lv].reshape(-1, dim, dim) if augment.sensitivity else None
    jacobians = None
    if augment.sensitivity:
        jacobians = np.stack(
            [backward_field_and_jacobian(fs, cfg, states[j], float(ts[j]))[1] for j in range(ts.size)]
        )
    return TrajectoryRecord(
        ts=ts,
        direction=icfg.direction,
        states=states,
        logdet=ys[:, i_ld].copy() if augment.logdet else None,
        Y=ys_y,
        liouville=ys[:, i_lv].copy() if augment.liouville else None,
        jacobians=jacobians,
        n_evals=evals,
    )


def integrate_ensemble(fs: FieldSpec, cfg: ScheduleConfig, icfg: IntegratorConfig,
                       x_inits: ArrayLike) -> np.ndarray:
    """
    End states for a batch of initial conditions, solved as one vectorized system.

    Returns:
        Array ``(N, D)`` of states at the end of the integration interval.
    """
    xs = np.atleast_2d(np.asarray(x_inits, dtype=float))
    n, dim = xs.shape
    if n == 0:
        return np.zeros((0, fs.dim))
    if dim != fs.dim:
        raise DomainError(f"initial states have dimension {dim}, expected {fs.dim}")
    grid = TimeGrid(checkpoints=(1.0, cfg.t_min))
    ts, tau_eval, sign, to_time = _time_map(grid, icfg.direction)

    def rhs(tau: float, y: np.ndarray) -> np.ndarray:
        t = to_time(tau)
        x = y.reshape(n, dim)
        if not np.all(np.isfinite(x)):
            raise DivergenceError("non-finite state", t)
        return (sign * backward_field(fs, cfg, x, t)).reshape(-1)

    ys, _ = _solve(rhs, xs.reshape(-1), tau_eval, icfg, to_time)
    return ys[-1].reshape(n, dim)


def likelihood(fs: FieldSpec, cfg: ScheduleConfig, icfg: IntegratorConfig, x0: ArrayLike,
               hutchinson: HutchinsonConfig | None = None) -> float:
    """
    Model log-density at ``(x0, t_min)`` by the instantaneous change of variables.

    Integrates forward to t = 1 accumulating the divergence integral and adds
    the analytic log-density of the diffused data mixture at t = 1.
    """
    forward = icfg.model_copy(update={"direction": Direction.FORWARD})
    rec = integrate(fs, cfg, forward, x0, AugmentFlags(logdet=True, hutchinson=hutchinson))
    p_end = diffuse(fs.density, cfg, float(rec.ts[-1]))
    return float(p_end.log_density(rec.states[-1])) + rec.logdet_increment


def liouville_check(rec: TrajectoryRecord) -> float:
    """``|log |det Y_end| - liouville_integral|``."""
    if rec.Y is None or rec.liouville is None:
        raise DomainError("liouville_check needs a record with Y and liouville")
    _, logabsdet = np.linalg.slogdet(rec.Y[-1])
    return float(abs(logabsdet - rec.liouville_integral))


def trajectory_rows(rec: TrajectoryRecord, sample_id: int | None = None) -> list[list[float]]:
    """Rows ``t, x.., logdet, sv.., liouville`` (optional columns only when present)."""
    svs = np.linalg.svd(rec.Y, compute_uv=False) if rec.Y is not None else None
    rows = []
    for j, t in enumerate(rec.ts):
        row: list[float] = [] if sample_id is None else [sample_id]
        row += [float(t), *rec.states[j].tolist()]
        row.append(float(rec.logdet[j]) if rec.logdet is not None else float("nan"))
        if svs is not None:
            row += svs[j].tolist()
        if rec.liouville is not None:
            row.append(float(rec.liouville[j]))
        rows.append(row)
    return rows


def trajectory_header(rec: TrajectoryRecord, with_sample_id: bool = False) -> list[str]:
    header = ["sample_id"] if with_sample_id else []
    header += ["t", *[f"x{i}" for i in range(rec.dim)], "logdet"]
    if rec.Y is not None:
        header += [f"sv{i}" for i in range(rec.dim)]
    if rec.liouville is not None:
        header.append("liouville")
    return header


def trajectory_csv(rec: TrajectoryRecord, writer: ResultWriter, name: str = "trajectory.csv"):
    """Write one trajectory, one row per checkpoint."""
    return writer.write_csv(name, trajectory_header(rec), trajectory_rows(rec))
