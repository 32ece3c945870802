"""
Forward SDE schedule and time bookkeeping.

Two families are supported:

* ``VarianceExploding``: ``f = 0`` and ``g(t) = g_base**t``, so the transition
  variance is ``sigma^2(t) = (g_base**(2t) - 1) / (2 ln g_base)``.
* ``LinearDrift``: ``f = -beta(t) x / 2`` and ``g = sqrt(beta(t))``, with
  mean scale ``alpha(t) = exp(-B(t)/2)`` and variance ``1 - alpha(t)**2``
  where ``B`` is the integral of beta.

Every function is pure and accepts a scalar or an array of times.
"""

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate

from gaugelab.core.errors import DomainError
from gaugelab.schemas.schedule import BetaKind, ScheduleConfig, ScheduleKind, Spacing, TimeGrid


def _check_t(t: ArrayLike) -> None:
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"time outside [0, 1]: {t}")


def beta(cfg: ScheduleConfig, t: ArrayLike) -> np.ndarray | float:
    """beta(t) of the ``LinearDrift`` family."""
    if cfg.beta_kind == BetaKind.CONSTANT:
        return cfg.beta_min + 0.0 * np.asarray(t, dtype=float)
    return cfg.beta_min + (cfg.beta_max - cfg.beta_min) * np.asarray(t, dtype=float)


def beta_integral(cfg: ScheduleConfig, t: ArrayLike) -> np.ndarray | float:
    """B(t) = integral of beta over [0, t]."""
    t = np.asarray(t, dtype=float)
    if cfg.beta_kind == BetaKind.CONSTANT:
        return cfg.beta_min * t
    return cfg.beta_min * t + 0.5 * (cfg.beta_max - cfg.beta_min) * t**2


def g(cfg: ScheduleConfig, t: ArrayLike) -> np.ndarray | float:
    """Diffusion coefficient g(t)."""
    if cfg.kind == ScheduleKind.VARIANCE_EXPLODING:
        return np.power(cfg.g_base, np.asarray(t, dtype=float))
    return np.sqrt(beta(cfg, t))


def g_squared(cfg: ScheduleConfig, t: float) -> float:
    """g(t)**2 for a scalar time (hot path inside the ODE right-hand side)."""
    if cfg.kind == ScheduleKind.VARIANCE_EXPLODING:
        return math.exp(2.0 * t * math.log(cfg.g_base))
    return float(beta(cfg, t))


def noise_scale(cfg: ScheduleConfig, t: ArrayLike) -> np.ndarray | float:
    """
    Integrated squared diffusion ``int_0^t g(s)**2 ds``.

    For ``VarianceExploding`` this is the transition variance sigma^2(t),
    evaluated in closed form; for ``LinearDrift`` it is B(t).

    Raises:
        DomainError: if t lies outside [0, 1].
    """
    _check_t(t)
    t = np.asarray(t, dtype=float)
    if cfg.kind == ScheduleKind.VARIANCE_EXPLODING:
        log_g = math.log(cfg.g_base)
        if log_g == 0.0:
            out = t
        else:
            out = np.expm1(2.0 * log_g * t) / (2.0 * log_g)
    else:
        out = beta_integral(cfg, t)
    return float(out) if out.ndim == 0 else out


def quadrature_noise_scale(cfg: ScheduleConfig, t: float) -> float:
    """``noise_scale`` by adaptive quadrature of g**2; the closed-form oracle."""
    _check_t(t)
    value, _ = integrate.quad(lambda s: g_squared(cfg, s), 0.0, t, epsabs=0.0, epsrel=1e-13, limit=200)
    return float(value)


def mean_scale(cfg: ScheduleConfig, t: ArrayLike) -> np.ndarray | float:
    """alpha(t): the forward transition maps a mean m to alpha(t) m."""
    _check_t(t)
    if cfg.kind == ScheduleKind.VARIANCE_EXPLODING:
        out = np.ones_like(np.asarray(t, dtype=float))
    else:
        out = np.exp(-0.5 * beta_integral(cfg, t))
    return float(out) if np.ndim(out) == 0 else out


def transition_variance(cfg: ScheduleConfig, t: ArrayLike) -> np.ndarray | float:
    """v(t): variance the forward transition adds along every axis."""
    _check_t(t)
    if cfg.kind == ScheduleKind.VARIANCE_EXPLODING:
        return noise_scale(cfg, t)
    out = -np.expm1(-beta_integral(cfg, t))
    return float(out) if np.ndim(out) == 0 else out


def transition_std(cfg: ScheduleConfig, t: ArrayLike) -> np.ndarray | float:
    """sigma(t) = sqrt(v(t)), the noise amplitude used to regress singular values."""
    return np.sqrt(transition_variance(cfg, t))


def drift_coefficient(cfg: ScheduleConfig, t: float) -> float:
    """c(t) with f(x, t) = c(t) x, so that the drift Jacobian is c(t) I."""
    if cfg.kind == ScheduleKind.VARIANCE_EXPLODING:
        return 0.0
    return -0.5 * float(beta(cfg, t))


def drift(cfg: ScheduleConfig, x: ArrayLike, t: float) -> np.ndarray:
    """
    Drift f(x, t) for a point ``(D,)`` or a batch ``(N, D)``.

    Raises:
        DomainError: if x is not finite or t lies outside [0, 1].
    """
    _check_t(t)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("drift evaluated at a non-finite point")
    return drift_coefficient(cfg, t) * x


def make_time_grid(t_min: float, n: int, spacing: Spacing = Spacing.LOG_UNIFORM) -> TimeGrid:
    """Strictly decreasing checkpoints from 1 to ``t_min``."""
    if not 0.0 < t_min < 1.0 or n < 2:
        raise DomainError(f"cannot build a grid with t_min={t_min}, n={n}")
    if spacing == Spacing.LOG_UNIFORM:
        pts = np.geomspace(1.0, t_min, n)
    else:
        pts = np.linspace(1.0, t_min, n)
    pts[0], pts[-1] = 1.0, t_min
    return TimeGrid(checkpoints=tuple(float(p) for p in pts), spacing=spacing)
