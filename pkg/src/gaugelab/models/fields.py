"""
Vector-field algebra.

A model field is ``s_theta = +/- grad log p_t + r`` where ``p_t`` is the
diffused data mixture and ``r`` a remainder from one of four families:

* ``Zero``
* ``ConstantDirection``: ``r(t) * eps``, the gradient of ``r(t) eps.x``
* ``LinearMatrix``: ``R_t x`` for a time callback ``t -> R_t``
* ``CurlQuadratic``: ``(0, ..., 0, eps * x_0)``, divergence free

Every remainder has an x-independent Jacobian, so Jacobians and divergences
are analytic. The backward probability-flow field is
``f(x, t) - g(t)**2 / 2 * s_theta(x, t)``.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from gaugelab.core.errors import DomainError
from gaugelab.models import sde
from gaugelab.models.density import MixtureDensity, diffuse
from gaugelab.schemas.remainder import MATRIX_ALIASES, RemainderConfig, RemainderKind
from gaugelab.schemas.schedule import ScheduleConfig

logger = logging.getLogger(__name__)

MatrixOfT = Callable[[float], np.ndarray]

# Rotation generator used by the two-dimensional gauge counterexample
ROTATION_2D = np.array([[0.0, -1.0], [1.0, 0.0]])


def _one(t: float) -> float:
    return 1.0


def _zero(t: float) -> float:
    return 0.0


R_OF_T = {"one": _one, "zero": _zero}


@dataclass(frozen=True, eq=False)
class RemainderSpec:
    """A remainder field r(x, t) with analytic Jacobian."""

    kind: RemainderKind = RemainderKind.ZERO
    r_of_t: Callable[[float], float] = _one
    epsilon: np.ndarray | float | None = None
    matrix_of_t: MatrixOfT | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind == RemainderKind.CONSTANT_DIRECTION and self.epsilon is None:
            raise DomainError("ConstantDirection needs an epsilon vector")
        if self.kind == RemainderKind.CURL_QUADRATIC and self.epsilon is None:
            raise DomainError("CurlQuadratic needs a scalar epsilon")
        if self.kind == RemainderKind.LINEAR_MATRIX and self.matrix_of_t is None:
            raise DomainError("LinearMatrix needs matrix_of_t")

    def check_dim(self, dim: int) -> None:
        if self.kind == RemainderKind.CONSTANT_DIRECTION and np.shape(self.epsilon) != (dim,):
            raise DomainError(f"epsilon has shape {np.shape(self.epsilon)}, expected ({dim},)")
        if self.kind == RemainderKind.CURL_QUADRATIC and dim < 3:
            raise DomainError("CurlQuadratic is defined for D >= 3")

    def value(self, x: ArrayLike, t: float) -> np.ndarray:
        """r(x, t) for a point ``(D,)`` or batch ``(N, D)``."""
        x = np.asarray(x, dtype=float)
        if self.kind == RemainderKind.ZERO:
            return np.zeros_like(x)
        if self.kind == RemainderKind.CONSTANT_DIRECTION:
            return np.broadcast_to(self.r_of_t(t) * np.asarray(self.epsilon), x.shape).copy()
        if self.kind == RemainderKind.LINEAR_MATRIX:
            return x @ self.matrix_of_t(t).T
        out = np.zeros_like(x)
        out[..., -1] = float(self.epsilon) * x[..., 0]
        return out

    def jacobian(self, t: float, dim: int) -> np.ndarray:
        """grad r, identical at every x."""
        if self.kind == RemainderKind.LINEAR_MATRIX:
            return np.asarray(self.matrix_of_t(t), dtype=float)
        jac = np.zeros((dim, dim))
        if self.kind == RemainderKind.CURL_QUADRATIC:
            jac[dim - 1, 0] = float(self.epsilon)
        return jac

    def divergence(self, t: float, dim: int) -> float:
        return float(np.trace(self.jacobian(t, dim)))


def zero_remainder() -> RemainderSpec:
    return RemainderSpec(kind=RemainderKind.ZERO, label="zero")


def constant_direction(epsilon: ArrayLike, r_of_t: Callable[[float], float] = _one) -> RemainderSpec:
    """r(x, t) = r(t) * epsilon; conservative with zero Jacobian."""
    return RemainderSpec(
        kind=RemainderKind.CONSTANT_DIRECTION,
        epsilon=np.array(epsilon, dtype=float),
        r_of_t=r_of_t,
        label="constant_direction",
    )


def curl_quadratic(epsilon: float) -> RemainderSpec:
    """r(x) = (0, ..., 0, epsilon * x_0)."""
    return RemainderSpec(kind=RemainderKind.CURL_QUADRATIC, epsilon=float(epsilon), label="curl_quadratic")


def linear_matrix(matrix_of_t: MatrixOfT, label: str = "linear") -> RemainderSpec:
    return RemainderSpec(kind=RemainderKind.LINEAR_MATRIX, matrix_of_t=matrix_of_t, label=label)


def constant_matrix(matrix: ArrayLike, label: str = "constant_matrix") -> RemainderSpec:
    mat = np.array(matrix, dtype=float)
    mat.setflags(write=False)
    return linear_matrix(lambda t: mat, label=label)


def _centred_gaussian_covariance(p0: MixtureDensity, what: str) -> np.ndarray:
    if p0.n_components != 1 or np.any(p0.means[0] != 0.0):
        raise DomainError(f"{what} needs a single mean-zero Gaussian")
    return p0.covariances[0]


def _check_generator(k: np.ndarray, dim: int) -> np.ndarray:
    if k.shape != (dim, dim) or np.max(np.abs(k + k.T)) > 1e-12:
        raise DomainError(f"generator must be an antisymmetric {dim}x{dim} matrix")
    return k


def gauge_rotation(p0: MixtureDensity, cfg: ScheduleConfig, generator: ArrayLike | None = None,
                   scale: float = 1.0) -> RemainderSpec:
    """
    R_t = scale * Sigma_t K for an antisymmetric K.

    For a mean-zero Gaussian this meets the gauge condition at every t:
    tr(Sigma_t K) = 0 and x^T K^T x = 0. With D = 2, a diagonal Sigma_0 and
    the default K this is ``[[0, -sigma_1^2(t)], [sigma_2^2(t), 0]]``.
    """
    cov0 = _centred_gaussian_covariance(p0, "gauge_rotation")
    dim = cov0.shape[0]
    if generator is None:
        if dim != 2:
            raise DomainError("the default generator is two-dimensional; pass one for D != 2")
        generator = ROTATION_2D
    k = _check_generator(np.array(generator, dtype=float), dim)
    eye = np.eye(dim)

    def matrix(t: float) -> np.ndarray:
        alpha = sde.mean_scale(cfg, t)
        cov_t = alpha**2 * cov0 + sde.transition_variance(cfg, t) * eye
        return scale * cov_t @ k

    return linear_matrix(matrix, label="gauge_rotation")


def scaled_antisymmetric(p0: MixtureDensity, cfg: ScheduleConfig, generator: ArrayLike,
                         scale: float = 1.0) -> RemainderSpec:
    """
    R_t = scale * ||Sigma_t^{-1}||_2 * K.

    Matches the precision scale of the score, so it competes with it near the
    data; it breaks both the gauge condition and the commutation hypothesis
    behind intrinsic-dimension estimation.
    """
    dim = p0.dim
    k = _check_generator(np.array(generator, dtype=float), dim)
    lam0 = p0.eigvals

    def matrix(t: float) -> np.ndarray:
        alpha = sde.mean_scale(cfg, t)
        lam_t = alpha**2 * lam0 + sde.transition_variance(cfg, t)
        return scale * float(np.max(1.0 / lam_t)) * k

    return linear_matrix(matrix, label="scaled_antisymmetric")


def true_flow_matrix(p0: MixtureDensity, cfg: ScheduleConfig, t: float) -> np.ndarray:
    """
    Matrix U_t of the true field in reversed time, ``u = -f + g^2/2 grad log p_t``.

    Valid for a mean-zero Gaussian, where the field is linear.
    """
    cov0 = _centred_gaussian_covariance(p0, "true_flow_matrix")
    dim = cov0.shape[0]
    cov_t = sde.mean_scale(cfg, t) ** 2 * cov0 + sde.transition_variance(cfg, t) * np.eye(dim)
    return -sde.drift_coefficient(cfg, t) * np.eye(dim) - 0.5 * sde.g_squared(cfg, t) * np.linalg.inv(cov_t)


def block_matrix(a: float, b: float, c: float, d: float, e: float) -> np.ndarray:
    """``[[a, b, 0], [c, d, 0], [0, 0, e]]``; commutes with diag(s1, s1, s2)."""
    return np.array([[a, b, 0.0], [c, d, 0.0], [0.0, 0.0, e]])


def commuting_remainder(matrix: ArrayLike, p0: MixtureDensity, cfg: ScheduleConfig,
                        alpha: float = 1.0) -> RemainderSpec:
    """
    Remainder whose reversed-time part is ``v = ((1 - alpha) u + A x) / alpha``.

    With ``[u, A x] = 0`` the lifted fields commute for this split, so the
    model flow is the true flow composed with ``exp(A)``.
    """
    if alpha == 0.0:
        raise DomainError("alpha must be nonzero")
    a_mat = np.array(matrix, dtype=float)
    beta_split = 1.0 - alpha

    def matrix_of_t(t: float) -> np.ndarray:
        v_t = (beta_split * true_flow_matrix(p0, cfg, t) + a_mat) / alpha
        return 2.0 * v_t / sde.g_squared(cfg, t)

    return linear_matrix(matrix_of_t, label="commuting")


def remainder_from_config(rc: RemainderConfig, p0: MixtureDensity, cfg: ScheduleConfig) -> RemainderSpec:
    """Resolve a remainder config section against the data density."""
    dim = p0.dim
    if rc.kind == RemainderKind.ZERO:
        spec = zero_remainder()
    elif rc.kind == RemainderKind.CONSTANT_DIRECTION:
        spec = constant_direction(rc.epsilon, R_OF_T[rc.r_of_t])
    elif rc.kind == RemainderKind.CURL_QUADRATIC:
        spec = curl_quadratic(rc.epsilon[0])
    elif isinstance(rc.matrix, str):
        if MATRIX_ALIASES.get(rc.matrix, rc.matrix) == "gauge_rotation":
            spec = gauge_rotation(p0, cfg, rc.generator, rc.scale)
        else:
            if rc.generator is None:
                raise DomainError("scaled_antisymmetric needs a generator matrix")
            spec = scaled_antisymmetric(p0, cfg, rc.generator, rc.scale)
    else:
        mat = rc.scale * np.array(rc.matrix, dtype=float)
        if mat.shape != (dim, dim):
            raise DomainError(f"remainder matrix has shape {mat.shape}, expected ({dim}, {dim})")
        spec = constant_matrix(mat)
    spec.check_dim(dim)
    return spec


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """
    Model field ``grad log p_t + r`` over a data density and schedule.

    ``negate_base`` adds ``-grad log p_t`` to the remainder, cancelling the
    score so that only the configured remainder is left.
    """

    density: MixtureDensity
    schedule: ScheduleConfig
    remainder: RemainderSpec = field(default_factory=zero_remainder)
    negate_base: bool = False

    def __post_init__(self) -> None:
        self.remainder.check_dim(self.density.dim)

    @property
    def dim(self) -> int:
        return self.density.dim

    def density_at(self, t: float) -> MixtureDensity:
        return diffuse(self.density, self.schedule, t)

    def _check(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim or x.ndim not in (1, 2):
            raise DomainError(f"expected points of dimension {self.dim}, got shape {x.shape}")
        return x

    def value_and_jacobian(self, x: ArrayLike, t: float) -> tuple[np.ndarray, np.ndarray]:
        """s_theta(x, t) and its Jacobian, from one density evaluation."""
        x = self._check(x)
        p_t = self.density_at(t)
        if self.negate_base:
            s, hess = np.zeros(x.shape), np.zeros((*x.shape[:-1], self.dim, self.dim))
        else:
            s, hess = p_t.score_and_jacobian(x)
        return s + self.remainder.value(x, t), hess + self.remainder.jacobian(t, self.dim)


def eval_field(fs: FieldSpec, x: ArrayLike, t: float) -> np.ndarray:
    """
    s_theta(x, t) = grad log p_t(x) + r(x, t); the score term is cancelled
    when ``negate_base`` is set.

    Raises:
        DomainError: on a dimension mismatch or t outside [0, 1].
    """
    x = fs._check(x)
    p_t = fs.density_at(t)
    if fs.negate_base:
        return fs.remainder.value(x, t)
    return p_t.score(x) + fs.remainder.value(x, t)


def eval_field_jacobian(fs: FieldSpec, x: ArrayLike, t: float) -> np.ndarray:
    """Analytic Jacobian: Hessian of log p_t plus the remainder Jacobian."""
    return fs.value_and_jacobian(x, t)[1]


def backward_field(fs: FieldSpec, cfg: ScheduleConfig, x: ArrayLike, t: float) -> np.ndarray:
    """f_tilde(x, t) = f(x, t) - g(t)**2 / 2 * s_theta(x, t)."""
    return sde.drift(cfg, x, t) - 0.5 * sde.g_squared(cfg, t) * eval_field(fs, x, t)


def backward_field_and_jacobian(fs: FieldSpec, cfg: ScheduleConfig, x: ArrayLike,
                                t: float) -> tuple[np.ndarray, np.ndarray]:
    """f_tilde and its Jacobian ``c(t) I - g**2/2 * grad s_theta``."""
    s, jac = fs.value_and_jacobian(x, t)
    c = sde.drift_coefficient(cfg, t)
    half_g2 = 0.5 * sde.g_squared(cfg, t)
    x = np.asarray(x, dtype=float)
    return c * x - half_g2 * s, c * np.eye(fs.dim) - half_g2 * jac


def backward_jacobian(fs: FieldSpec, cfg: ScheduleConfig, x: ArrayLike, t: float) -> np.ndarray:
    return backward_field_and_jacobian(fs, cfg, x, t)[1]


@dataclass(frozen=True)
class ConservativityReport:
    max_asymmetry: float
    is_conservative: bool


def conservativity_check(fs: FieldSpec, xs: ArrayLike, t: float, tol: float = 1e-8) -> ConservativityReport:
    """
    Largest relative Jacobian asymmetry ``||J - J^T||_F / max(1, ||J||_F)`` over xs.

    A smooth field is conservative exactly when its Jacobian is symmetric.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 0:
        raise DomainError("conservativity_check needs at least one point")
    jac = eval_field_jacobian(fs, xs, t)
    asym = np.linalg.norm(jac - np.swapaxes(jac, 1, 2), axis=(1, 2))
    scale = np.maximum(1.0, np.linalg.norm(jac, axis=(1, 2)))
    worst = float(np.max(asym / scale))
    return ConservativityReport(max_asymmetry=worst, is_conservative=worst <= tol)


def finite_difference_jacobian(func: Callable[[np.ndarray], np.ndarray], x: ArrayLike) -> np.ndarray:
    """Central differences with step ``cbrt(eps) * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    h0 = np.cbrt(np.finfo(float).eps)
    cols = []
    for i in range(x.size):
        h = h0 * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        cols.append((func(x + e) - func(x - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)
