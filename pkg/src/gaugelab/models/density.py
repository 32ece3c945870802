"""
Gaussian mixture densities with closed-form diffusion.

A ``MixtureDensity`` keeps every covariance in eigen-decomposed form
``C_k = U_k diag(lam_k) U_k^T``. The forward SDE only rescales means and maps
eigenvalues ``lam -> alpha**2 lam + v``, so diffusing a mixture is cheap and
exact. Evaluation works on one point ``(D,)`` or a batch ``(N, D)``; the
responsibilities are computed in log space with ``logsumexp``.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import logsumexp

from gaugelab.core.errors import DensityError, DomainError
from gaugelab.models import sde
from gaugelab.schemas.density import DensityConfig
from gaugelab.schemas.schedule import ScheduleConfig

_LOG_2PI = math.log(2.0 * math.pi)

SINGULAR_MESSAGE = "density not absolutely continuous; evaluate at t>0"


@dataclass(frozen=True, eq=False)
class MixtureDensity:
    """Immutable Gaussian mixture ``sum_k w_k N(m_k, U_k diag(lam_k) U_k^T)``."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, D)
    eigvecs: np.ndarray  # (K, D, D), columns are eigenvectors
    eigvals: np.ndarray  # (K, D), nonnegative

    def __post_init__(self) -> None:
        for arr in (self.weights, self.means, self.eigvecs, self.eigvals):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def covariances(self) -> np.ndarray:
        """Covariance matrices ``(K, D, D)``."""
        return np.einsum("kde,ke,kfe->kdf", self.eigvecs, self.eigvals, self.eigvecs)

    @property
    def is_degenerate(self) -> bool:
        return bool(np.min(self.eigvals) <= 0.0)

    @cached_property
    def _inv_eigvals(self) -> np.ndarray:
        if self.is_degenerate:
            raise DensityError(SINGULAR_MESSAGE)
        return 1.0 / self.eigvals

    @cached_property
    def _log_norm(self) -> np.ndarray:
        return np.log(self.weights) - 0.5 * (np.sum(np.log(self.eigvals), axis=1) + self.dim * _LOG_2PI)

    @cached_property
    def precisions(self) -> np.ndarray:
        """Precision matrices ``(K, D, D)``."""
        return np.einsum("kde,ke,kfe->kdf", self.eigvecs, self._inv_eigvals, self.eigvecs)

    @cached_property
    def max_precision(self) -> float:
        """Largest precision eigenvalue over all components."""
        return float(np.max(self._inv_eigvals))

    def transform(self, alpha: float, variance: float) -> "MixtureDensity":
        """Law of ``alpha X + sqrt(variance) Z`` for X from this mixture."""
        return MixtureDensity(
            weights=self.weights,
            means=alpha * self.means,
            eigvecs=self.eigvecs,
            eigvals=alpha**2 * self.eigvals + variance,
        )

    def convolve(self, variance: float) -> "MixtureDensity":
        """Add isotropic Gaussian noise of the given variance."""
        return self.transform(1.0, variance)

    def _points(self, x: ArrayLike) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x2 = x[None, :] if single else x
        if x2.ndim != 2 or x2.shape[1] != self.dim:
            raise DomainError(f"expected points of dimension {self.dim}, got shape {x.shape}")
        return x2, single

    def _terms(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Log densities, responsibilities and component scores for a batch."""
        inv = self._inv_eigvals
        diff = x[:, None, :] - self.means[None, :, :]
        coords = np.einsum("nkd,kde->nke", diff, self.eigvecs)
        log_comp = self._log_norm[None, :] - 0.5 * np.sum(coords**2 * inv[None], axis=2)
        log_p = logsumexp(log_comp, axis=1)
        resp = np.exp(log_comp - log_p[:, None])
        comp_scores = -np.einsum("kde,nke->nkd", self.eigvecs, coords * inv[None])
        return log_p, resp, comp_scores

    def log_density(self, x: ArrayLike) -> np.ndarray | float:
        x2, single = self._points(x)
        log_p, _, _ = self._terms(x2)
        return float(log_p[0]) if single else log_p

    def responsibilities(self, x: ArrayLike) -> np.ndarray:
        x2, single = self._points(x)
        _, resp, _ = self._terms(x2)
        return resp[0] if single else resp

    def score(self, x: ArrayLike) -> np.ndarray:
        x2, single = self._points(x)
        _, resp, comp_scores = self._terms(x2)
        s = np.einsum("nk,nkd->nd", resp, comp_scores)
        return s[0] if single else s

    def score_and_jacobian(self, x: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        """Score and Hessian of the log-density in one pass."""
        x2, single = self._points(x)
        _, resp, comp_scores = self._terms(x2)
        s = np.einsum("nk,nkd->nd", resp, comp_scores)
        hess = (
            -np.einsum("nk,kdf->ndf", resp, self.precisions)
            + np.einsum("nk,nkd,nkf->ndf", resp, comp_scores, comp_scores)
            - s[:, :, None] * s[:, None, :]
        )
        if single:
            return s[0], hess[0]
        return s, hess

    def score_jacobian(self, x: ArrayLike) -> np.ndarray:
        return self.score_and_jacobian(x)[1]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Exact draws: component choice followed by a Gaussian draw."""
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        comps = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        scaled = z * np.sqrt(self.eigvals[comps])
        return self.means[comps] + np.einsum("nde,ne->nd", self.eigvecs[comps], scaled)


def from_components(weights: ArrayLike, means: ArrayLike, covariances: ArrayLike) -> MixtureDensity:
    """
    Build a mixture from explicit covariances.

    Raises:
        DomainError: if weights do not sum to 1, shapes disagree, or a
            covariance is not symmetric positive semidefinite.
    """
    w = np.array(weights, dtype=float).reshape(-1)
    m = np.array(means, dtype=float, ndmin=2)
    c = np.asarray(covariances, dtype=float)
    if c.ndim == 2:
        c = c[None]
    if w.size == 0 or m.shape[0] != w.size or c.shape != (w.size, m.shape[1], m.shape[1]):
        raise DomainError("weights, means and covariances disagree in shape")
    if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
        raise DomainError("mixture weights must be positive and sum to 1")
    if np.max(np.abs(c - np.swapaxes(c, 1, 2))) > 1e-12:
        raise DomainError("covariances must be symmetric")
    lam, vecs = np.linalg.eigh(0.5 * (c + np.swapaxes(c, 1, 2)))
    if np.min(lam) < -1e-10:
        raise DomainError("covariances must be positive semidefinite")
    return MixtureDensity(weights=w, means=m, eigvecs=vecs, eigvals=np.clip(lam, 0.0, None))


def gaussian(mean: ArrayLike, cov: ArrayLike) -> MixtureDensity:
    """Single Gaussian N(mean, cov)."""
    return from_components([1.0], [mean], [cov])


def diagonal_gaussian(variances: ArrayLike, mean: ArrayLike | None = None) -> MixtureDensity:
    """Axis-aligned Gaussian; zero variances give a degenerate (manifold) Gaussian."""
    var = np.array(variances, dtype=float)
    if np.any(var < 0.0):
        raise DomainError("variances must be nonnegative")
    mu = np.zeros_like(var) if mean is None else np.array(mean, dtype=float)
    d = var.size
    return MixtureDensity(
        weights=np.ones(1), means=mu[None, :], eigvecs=np.eye(d)[None], eigvals=var[None, :].copy()
    )


def from_config(cfg: DensityConfig) -> MixtureDensity:
    if cfg.kind == "gaussian":
        return gaussian(cfg.mean, cfg.covariance)
    return from_components(cfg.weights, cfg.means, cfg.covariances)


def kernel_mixture(points: ArrayLike, bandwidth: float) -> MixtureDensity:
    """
    Equal-weight mixture with one isotropic kernel per point.

    Bandwidth 0 gives point masses, which become a proper density only after
    ``diffuse`` with t > 0.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0 or pts.size == 0:
        raise DomainError("kernel_mixture needs at least one point")
    if bandwidth < 0.0:
        raise DomainError("bandwidth must be nonnegative")
    n, dim = pts.shape
    return MixtureDensity(
        weights=np.full(n, 1.0 / n),
        means=pts.copy(),
        eigvecs=np.broadcast_to(np.eye(dim), (n, dim, dim)).copy(),
        eigvals=np.full((n, dim), bandwidth**2),
    )


def tangent_kernel_mixture(points: ArrayLike, tangents: ArrayLike, bandwidth: float) -> MixtureDensity:
    """
    Equal-weight mixture whose kernels spread only along the manifold.

    Component k has covariance ``bandwidth**2 * T_k T_k^T`` for the orthonormal
    tangent frame ``T_k`` (``tangents`` has shape ``(n, D, d)``), so the mixture
    stays locally d-dimensional at every noise level.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    frames = np.asarray(tangents, dtype=float)
    if pts.shape[0] == 0:
        raise DomainError("tangent_kernel_mixture needs at least one point")
    if bandwidth < 0.0:
        raise DomainError("bandwidth must be nonnegative")
    if frames.ndim != 3 or frames.shape[:2] != pts.shape:
        raise DomainError("tangents must have shape (n, D, d)")
    projectors = np.einsum("nda,nea->nde", frames, frames)
    lam, vecs = np.linalg.eigh(projectors)
    n = pts.shape[0]
    return MixtureDensity(
        weights=np.full(n, 1.0 / n),
        means=pts.copy(),
        eigvecs=vecs,
        eigvals=np.where(lam > 0.5, bandwidth**2, 0.0),
    )


def diffuse(p0: MixtureDensity, cfg: ScheduleConfig, t: float) -> MixtureDensity:
    """
    Marginal p_t of the forward SDE started from p0.

    Raises:
        DomainError: if t lies outside [0, 1].
    """
    alpha = sde.mean_scale(cfg, t)
    var = sde.transition_variance(cfg, t)
    if t == 0.0:
        return p0
    return p0.transform(alpha, var)


def log_density(p: MixtureDensity, x: ArrayLike) -> np.ndarray | float:
    """log p(x). Raises ``DensityError`` for a singular covariance."""
    return p.log_density(x)


def score(p: MixtureDensity, x: ArrayLike) -> np.ndarray:
    """grad log p(x) = sum_k gamma_k(x) (-C_k^{-1}(x - m_k))."""
    return p.score(x)


def score_jacobian(p: MixtureDensity, x: ArrayLike) -> np.ndarray:
    """Hessian of log p: sum_k gamma_k (-P_k + g_k g_k^T) - s s^T."""
    return p.score_jacobian(x)
