"""
Gauge condition, orthogonal decomposition and commutation checks.

A remainder r leaves the marginal evolution of the probability flow
unchanged when ``div r + r . grad log p_t = 0``. For linear fields under a
mean-zero Gaussian with precision L this is ``tr R = 0`` and
``R^T L + L R = 0``; ``decompose_linear`` splits any ``A`` into a symmetric
(conservative) part and such a gauge part.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Literal, Protocol

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import solve_sylvester

from gaugelab.core.errors import DecompositionError, DomainError
from gaugelab.core.output import ResultWriter
from gaugelab.core.rng import derive_seed, make_generator
from gaugelab.models.density import MixtureDensity, diffuse
from gaugelab.models.fields import FieldSpec, RemainderSpec, true_flow_matrix
from gaugelab.schemas.reports import GaugeReport
from gaugelab.schemas.schedule import ScheduleConfig

logger = logging.getLogger(__name__)

BatchField = Callable[[np.ndarray], np.ndarray]

# Points per Monte Carlo chunk; each chunk draws from its own derived stream
MC_CHUNK = 65_536
DECOMPOSITION_TOL = 1e-6


def gauge_residual(r: RemainderSpec, p_t: MixtureDensity, x: ArrayLike, t: float) -> np.ndarray | float:
    """``div r + r . grad log p_t`` at x (one point or a batch); divergence is analytic."""
    x = np.asarray(x, dtype=float)
    div = r.divergence(t, p_t.dim)
    res = div + np.sum(r.value(x, t) * p_t.score(x), axis=-1)
    return float(res) if np.ndim(res) == 0 else res


def _draw(p_t: MixtureDensity, n: int, seed: int) -> np.ndarray:
    """n exact draws from p_t, chunked over derived streams."""
    chunks = []
    for i, start in enumerate(range(0, n, MC_CHUNK)):
        size = min(MC_CHUNK, n - start)
        chunks.append(p_t.sample(size, make_generator(derive_seed(seed, i))))
    return np.concatenate(chunks) if chunks else np.zeros((0, p_t.dim))


def gauge_check(r: RemainderSpec, p0: MixtureDensity, cfg: ScheduleConfig, ts: Sequence[float],
                n_mc: int, seed: int) -> list[GaugeReport]:
    """Residual statistics over ``n_mc`` draws from p_t for each t."""
    if n_mc <= 0:
        raise DomainError("gauge_check needs n_mc > 0")
    reports = []
    for i, t in enumerate(ts):
        p_t = diffuse(p0, cfg, t)
        xs = _draw(p_t, n_mc, derive_seed(seed, i))
        res = np.abs(np.asarray(gauge_residual(r, p_t, xs, t)))
        reports.append(
            GaugeReport(
                t=float(t),
                residual_max=float(np.max(res)),
                residual_rms=float(np.sqrt(np.mean(res**2))),
                n_points=n_mc,
            )
        )
        logger.debug(f"gauge_check t={t:.4g}: max={reports[-1].residual_max:.3e}")
    return reports


def gauge_reports_csv(reports: Sequence[GaugeReport], writer: ResultWriter, name: str = "gauge.csv"):
    return writer.write_csv(name, ["t", "residual_max", "residual_rms", "n_points"], [r.csv_row() for r in reports])


def _mean_and_error(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = math.fsum(values.tolist()) / n
    std = float(np.sqrt(np.sum((values - mean) ** 2) / (n - 1)))
    return mean, std / math.sqrt(n)


def l2p_inner(u: BatchField, v: BatchField, p_t: MixtureDensity, n_mc: int, seed: int) -> tuple[float, float]:
    """
    Monte Carlo ``<u, v>_{L2(p_t)}`` with its standard error.

    Args:
        u, v: vectorized fields mapping ``(N, D)`` points to ``(N, D)`` values.
        p_t: sampling density.
        n_mc: number of draws (at least 2).
        seed: root of the per-chunk random streams.

    Returns:
        (estimate, std_error)
    """
    if n_mc < 2:
        raise DomainError("l2p_inner needs n_mc >= 2 for a variance estimate")
    xs = _draw(p_t, n_mc, seed)
    return _mean_and_error(np.sum(u(xs) * v(xs), axis=1))


@dataclass(frozen=True)
class ScoreMatchingSplit:
    """Both sides of ``E|s - s_theta|^2 = E|s - grad phi|^2 + E|r|^2``."""

    lhs: float
    rhs: float
    difference: float
    std_error: float


def score_matching_split(r: RemainderSpec, p_t: MixtureDensity, t: float, n_mc: int, seed: int,
                         conservative: BatchField | None = None) -> ScoreMatchingSplit:
    """
    Check the score-matching loss split on shared draws.

    The model field is ``grad phi + r`` with ``grad phi`` given by
    ``conservative`` (the true score when omitted). The per-point difference of
    both sides is ``-2 <s - grad phi, r>``, whose mean vanishes when r meets
    the gauge condition.
    """
    if n_mc < 2:
        raise DomainError("score_matching_split needs n_mc >= 2")
    xs = _draw(p_t, n_mc, seed)
    s = p_t.score(xs)
    grad_phi = s if conservative is None else conservative(xs)
    rem = r.value(xs, t)
    lhs_i = np.sum((s - grad_phi - rem) ** 2, axis=1)
    rhs_i = np.sum((s - grad_phi) ** 2, axis=1) + np.sum(rem**2, axis=1)
    lhs, _ = _mean_and_error(lhs_i)
    rhs, _ = _mean_and_error(rhs_i)
    diff, err = _mean_and_error(lhs_i - rhs_i)
    return ScoreMatchingSplit(lhs=lhs, rhs=rhs, difference=diff, std_error=err)


@dataclass(frozen=True)
class LinearDecomposition:
    """``A = S + R`` with S symmetric and R meeting the linear gauge constraints."""

    S: np.ndarray
    R: np.ndarray
    residual: float


def _constraint_system(a: np.ndarray, precision: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows acting on vec(R) (row-major) for the three linear constraints."""
    dim = a.shape[0]
    idx = np.arange(dim * dim).reshape(dim, dim)
    rows, rhs = [], []
    # A - R symmetric
    for i in range(dim):
        for j in range(i + 1, dim):
            row = np.zeros(dim * dim)
            row[idx[i, j]], row[idx[j, i]] = 1.0, -1.0
            rows.append(row)
            rhs.append(a[i, j] - a[j, i])
    # tr R = 0
    row = np.zeros(dim * dim)
    row[np.diag(idx)] = 1.0
    rows.append(row)
    rhs.append(0.0)
    # (R^T L + L R)_{ij} = sum_k R_ki L_kj + L_ik R_kj = 0, i <= j
    for i in range(dim):
        for j in range(i, dim):
            row = np.zeros(dim * dim)
            for k in range(dim):
                row[idx[k, i]] += precision[k, j]
                row[idx[k, j]] += precision[i, k]
            rows.append(row)
            rhs.append(0.0)
    return np.asarray(rows), np.asarray(rhs)


def decompose_linear(a: ArrayLike, precision: ArrayLike,
                     method: Literal["sylvester", "lstsq"] = "sylvester") -> LinearDecomposition:
    """
    Split ``A x`` into a conservative part ``S x`` and a gauge part ``R x``.

    ``lstsq`` solves the stacked constraint system for the minimum-norm R.
    ``sylvester`` writes ``R = Sigma W`` with W antisymmetric and solves
    ``Sigma W + W Sigma = A - A^T``. Both report the residual of the same
    constraint system.

    Raises:
        DomainError: if the precision is not symmetric positive definite.
        DecompositionError: if the constraint residual exceeds 1e-6.
    """
    a = np.asarray(a, dtype=float)
    lam = np.asarray(precision, dtype=float)
    dim = a.shape[0]
    if a.shape != (dim, dim) or lam.shape != (dim, dim):
        raise DomainError("A and the precision must be square matrices of equal size")
    if np.max(np.abs(lam - lam.T)) > 1e-12 or np.min(np.linalg.eigvalsh(lam)) <= 0.0:
        raise DomainError("precision must be symmetric positive definite")
    system, rhs = _constraint_system(a, lam)
    if method == "lstsq":
        vec, *_ = np.linalg.lstsq(system, rhs, rcond=None)
        r = vec.reshape(dim, dim)
    elif method == "sylvester":
        cov = np.linalg.inv(lam)
        cov = 0.5 * (cov + cov.T)
        w = solve_sylvester(cov, cov, a - a.T)
        r = cov @ (0.5 * (w - w.T))
    else:
        raise DomainError(f"unknown method {method!r}; valid: ['sylvester', 'lstsq']")
    residual = float(np.linalg.norm(system @ r.reshape(-1) - rhs))
    if residual > DECOMPOSITION_TOL:
        raise DecompositionError(f"decomposition infeasible in linear class (residual {residual:.3e})")
    return LinearDecomposition(S=a - r, R=r, residual=residual)


def trace_invariance_check(fs: FieldSpec, p_t: MixtureDensity, xs: ArrayLike, t: float) -> float:
    """``max |tr grad s_theta - tr grad^2 log p_t|`` over xs."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    _, jac = fs.value_and_jacobian(xs, t)
    hess = p_t.score_jacobian(xs)
    return float(np.max(np.abs(np.trace(jac, axis1=1, axis2=2) - np.trace(hess, axis1=1, axis2=2))))


def lie_bracket_linear(b: ArrayLike, c: ArrayLike) -> np.ndarray:
    """Matrix of ``[Bx, Cx] = (CB - BC) x``."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    return c @ b - b @ c


class TimeField(Protocol):
    def __call__(self, x: np.ndarray, t: float) -> np.ndarray: ...

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray: ...


@dataclass(frozen=True)
class LinearTimeField:
    """Time-dependent linear field ``x -> M(t) x``."""

    matrix_of_t: Callable[[float], np.ndarray]

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(x, dtype=float) @ np.asarray(self.matrix_of_t(t)).T

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(self.matrix_of_t(t), dtype=float)


def true_flow_field(p0: MixtureDensity, cfg: ScheduleConfig) -> LinearTimeField:
    """The true probability-flow field of a mean-zero Gaussian as a field-with-time."""
    return LinearTimeField(lambda t: true_flow_matrix(p0, cfg, t))


def commuting_pair(u: LinearTimeField, psi: ArrayLike, alpha: float) -> LinearTimeField:
    """v with ``alpha v = (1 - alpha) u + psi`` for a constant linear psi."""
    if alpha == 0.0:
        raise DomainError("alpha must be nonzero")
    psi = np.asarray(psi, dtype=float)
    return LinearTimeField(lambda t: ((1.0 - alpha) * u.matrix_of_t(t) + psi) / alpha)


def lifted_commutation_residual(u: TimeField, v: TimeField, alpha: float, x: ArrayLike, t: float,
                                t_range: tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    """
    ``[u, v](x, t) - d/dt (beta u - alpha v)(x, t)`` with ``beta = 1 - alpha``.

    The bracket is ``grad v . u - grad u . v``. The time derivative uses
    central differences; within one step of either end of ``t_range`` it
    falls back to a first-order one-sided difference.
    """
    x = np.asarray(x, dtype=float)
    beta = 1.0 - alpha
    bracket = v.jacobian(x, t) @ u(x, t) - u.jacobian(x, t) @ v(x, t)

    def combo(s: float) -> np.ndarray:
        return beta * u(x, s) - alpha * v(x, s)

    h = np.cbrt(np.finfo(float).eps) * max(1.0, abs(t))
    lo, hi = t_range
    if t - h >= lo and t + h <= hi:
        deriv = (combo(t + h) - combo(t - h)) / (2.0 * h)
    else:
        h = math.sqrt(np.finfo(float).eps) * max(1.0, abs(t))
        logger.debug(f"one-sided time derivative at t={t:.6g} (first order)")
        deriv = (combo(t + h) - combo(t)) / h if t + h <= hi else (combo(t) - combo(t - h)) / h
    return bracket - deriv
