"""
Manifold point clouds and their mixture densities.

Each manifold lives in the leading coordinates of R^D and is padded with
zeros:

* ``EmbeddedGaussian``: N(0, variance) on the first d coordinates.
* ``Sphere``: uniform on the radius-r d-sphere in the first d+1 coordinates.
* ``Torus``: area-uniform on the ring torus (major R, minor r) in R^3.
* ``SwissRoll``: ``scale * (t cos t, h, t sin t)`` with t uniform on
  [1.5 pi, 4.5 pi] and h uniform on [0, 21].
"""

import logging
import math
from pathlib import Path

import numpy as np

from gaugelab.core.errors import DomainError
from gaugelab.core.output import ResultWriter, read_matrix_csv
from gaugelab.core.rng import make_generator
from gaugelab.models.density import (
    MixtureDensity,
    diagonal_gaussian,
    kernel_mixture,
    tangent_kernel_mixture,
)
from gaugelab.schemas.density import KernelKind, ManifoldKind, ManifoldSpec

logger = logging.getLogger(__name__)


def _pad(points: np.ndarray, frames: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    n, base = points.shape
    out_pts = np.zeros((n, dim))
    out_pts[:, :base] = points
    out_frames = np.zeros((n, dim, frames.shape[2]))
    out_frames[:, :base, :] = frames
    return out_pts, out_frames


def _embedded_gaussian(spec: ManifoldSpec, n: int, rng: np.random.Generator):
    d = spec.intrinsic_dim
    coords = math.sqrt(spec.param("variance")) * rng.standard_normal((n, d))
    frames = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    return coords, frames


def _sphere(spec: ManifoldSpec, n: int, rng: np.random.Generator):
    d = spec.intrinsic_dim
    z = rng.standard_normal((n, d + 1))
    u = z / np.linalg.norm(z, axis=1, keepdims=True)
    normal_proj = np.eye(d + 1)[None] - u[:, :, None] * u[:, None, :]
    _, vecs = np.linalg.eigh(normal_proj)
    # eigenvalues are (0, 1, ..., 1); the unit ones span the tangent space
    return spec.param("radius") * u, vecs[:, :, 1:]


def _torus(spec: ManifoldSpec, n: int, rng: np.random.Generator):
    big, small = spec.param("major_radius"), spec.param("minor_radius")
    if small >= big:
        raise DomainError("torus needs minor_radius < major_radius")
    thetas: list[np.ndarray] = []
    count = 0
    while count < n:
        theta = rng.uniform(0.0, 2.0 * math.pi, size=2 * (n - count) + 8)
        keep = rng.uniform(0.0, 1.0, size=theta.size) < (big + small * np.cos(theta)) / (big + small)
        thetas.append(theta[keep])
        count += int(keep.sum())
    theta = np.concatenate(thetas)[:n]
    phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    ring = big + small * np.cos(theta)
    pts = np.stack([ring * np.cos(phi), ring * np.sin(phi), small * np.sin(theta)], axis=1)
    d_phi = np.stack([-np.sin(phi), np.cos(phi), np.zeros(n)], axis=1)
    d_theta = np.stack([-np.sin(theta) * np.cos(phi), -np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1)
    return pts, np.stack([d_phi, d_theta], axis=2)


def _swiss_roll(spec: ManifoldSpec, n: int, rng: np.random.Generator):
    scale = spec.param("scale")
    t = 1.5 * math.pi * (1.0 + 2.0 * rng.uniform(0.0, 1.0, size=n))
    h = 21.0 * rng.uniform(0.0, 1.0, size=n)
    pts = scale * np.stack([t * np.cos(t), h, t * np.sin(t)], axis=1)
    d_t = np.stack([np.cos(t) - t * np.sin(t), np.zeros(n), np.sin(t) + t * np.cos(t)], axis=1)
    d_t /= np.linalg.norm(d_t, axis=1, keepdims=True)
    d_h = np.tile([0.0, 1.0, 0.0], (n, 1))
    return pts, np.stack([d_t, d_h], axis=2)


_SAMPLERS = {
    ManifoldKind.EMBEDDED_GAUSSIAN: _embedded_gaussian,
    ManifoldKind.SPHERE: _sphere,
    ManifoldKind.TORUS: _torus,
    ManifoldKind.SWISS_ROLL: _swiss_roll,
}


def sample_manifold_with_tangents(spec: ManifoldSpec, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw ``n`` points and orthonormal tangent frames.

    Returns:
        Points ``(n, D)`` and frames ``(n, D, d)``.

    Raises:
        DomainError: if n is not positive or the kind is unsupported.
    """
    if n <= 0:
        raise DomainError("sample_manifold needs n > 0")
    sampler = _SAMPLERS.get(spec.kind)
    if sampler is None:
        raise DomainError(f"unsupported manifold kind {spec.kind!r}; valid: {[k.value for k in _SAMPLERS]}")
    pts, frames = sampler(spec, n, make_generator(seed))
    return _pad(pts, frames, spec.ambient_dim)


def sample_manifold(spec: ManifoldSpec, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. points on the manifold, reproducible from ``seed``."""
    return sample_manifold_with_tangents(spec, n, seed)[0]


def manifold_density(spec: ManifoldSpec, seed: int) -> MixtureDensity:
    """
    Closed-form data density for a manifold.

    The embedded Gaussian is represented exactly; other kinds become a
    mixture over ``n_centers`` sampled points with point or tangent kernels.
    """
    if spec.kind == ManifoldKind.EMBEDDED_GAUSSIAN:
        var = np.zeros(spec.ambient_dim)
        var[: spec.intrinsic_dim] = spec.param("variance")
        return diagonal_gaussian(var)
    pts, frames = sample_manifold_with_tangents(spec, spec.n_centers, seed)
    logger.debug(f"Built {spec.kind.value} mixture with {spec.n_centers} centers ({spec.kernel.value} kernels)")
    if spec.kernel == KernelKind.TANGENT:
        return tangent_kernel_mixture(pts, frames, spec.kernel_bandwidth)
    return kernel_mixture(pts, spec.kernel_bandwidth)


def points_header(dim: int) -> list[str]:
    return [f"x{i}" for i in range(dim)]


def write_points_csv(writer: ResultWriter, name: str, points: np.ndarray) -> Path:
    """Write points with header ``x0,...,x{D-1}``; round-trip lossless."""
    points = np.atleast_2d(points)
    return writer.write_csv(name, points_header(points.shape[1]), points.tolist())


def read_points_csv(path: Path | str) -> np.ndarray:
    return read_matrix_csv(path)
