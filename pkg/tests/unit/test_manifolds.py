"""
Unit tests for manifold samplers and manifold densities.

Tests models/manifolds.py:
- Points lie on each manifold, padded with zeros
- Tangent frames are orthonormal and tangent
- Closed-form densities for each kernel kind
- Points CSV files
"""

import numpy as np
import pytest

from gaugelab.core.errors import DomainError
from gaugelab.models.manifolds import (
    manifold_density,
    read_points_csv,
    sample_manifold,
    sample_manifold_with_tangents,
    write_points_csv,
)
from gaugelab.schemas.density import KernelKind, ManifoldKind, ManifoldSpec


def _frames_orthonormal(frames: np.ndarray) -> None:
    gram = np.einsum("nda,ndb->nab", frames, frames)
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(frames.shape[2]), gram.shape), atol=1e-12)


class TestSphere:
    """Test the d-sphere sampler."""

    def test_points_on_sphere(self):
        """Test |x| = radius in the first d+1 coordinates and zeros after."""
        spec = ManifoldSpec(kind=ManifoldKind.SPHERE, intrinsic_dim=2, ambient_dim=6, params={"radius": 1.5})
        pts, frames = sample_manifold_with_tangents(spec, 100, seed=1)
        assert pts.shape == (100, 6)
        np.testing.assert_allclose(np.linalg.norm(pts[:, :3], axis=1), 1.5, rtol=1e-12)
        np.testing.assert_array_equal(pts[:, 3:], 0.0)
        assert frames.shape == (100, 6, 2)

    def test_tangent_frames(self):
        """Test frames are orthonormal and orthogonal to the radius."""
        spec = ManifoldSpec(kind=ManifoldKind.SPHERE, intrinsic_dim=3, ambient_dim=8)
        pts, frames = sample_manifold_with_tangents(spec, 50, seed=2)
        _frames_orthonormal(frames)
        np.testing.assert_allclose(np.einsum("nd,nda->na", pts, frames), 0.0, atol=1e-12)


class TestTorusAndSwissRoll:
    """Test the two-dimensional manifolds in R^3."""

    def test_torus_equation(self):
        """Test (sqrt(x^2 + y^2) - R)^2 + z^2 = r^2."""
        spec = ManifoldSpec(kind=ManifoldKind.TORUS, intrinsic_dim=2, ambient_dim=5)
        pts, frames = sample_manifold_with_tangents(spec, 200, seed=3)
        ring = np.hypot(pts[:, 0], pts[:, 1])
        np.testing.assert_allclose((ring - 2.0) ** 2 + pts[:, 2] ** 2, 0.25, rtol=1e-10)
        np.testing.assert_array_equal(pts[:, 3:], 0.0)
        _frames_orthonormal(frames)

    def test_swiss_roll_ranges(self):
        """Test the height coordinate and the radial range of the roll."""
        spec = ManifoldSpec(kind=ManifoldKind.SWISS_ROLL, intrinsic_dim=2, ambient_dim=3)
        pts, frames = sample_manifold_with_tangents(spec, 500, seed=4)
        assert np.all((pts[:, 1] >= 0.0) & (pts[:, 1] <= 2.1))
        radius = np.hypot(pts[:, 0], pts[:, 2])
        assert np.all(radius >= 0.1 * 1.5 * np.pi - 1e-12)
        assert np.all(radius <= 0.1 * 4.5 * np.pi + 1e-12)
        _frames_orthonormal(frames)


class TestSampling:
    """Test reproducibility and errors."""

    def test_reproducible(self):
        """Test equal seeds give equal points."""
        spec = ManifoldSpec(kind=ManifoldKind.SPHERE, intrinsic_dim=1, ambient_dim=4)
        np.testing.assert_array_equal(sample_manifold(spec, 10, 7), sample_manifold(spec, 10, 7))

    def test_nonpositive_n(self):
        """Test n <= 0 raises DomainError."""
        spec = ManifoldSpec(kind=ManifoldKind.SPHERE, intrinsic_dim=1, ambient_dim=4)
        with pytest.raises(DomainError):
            sample_manifold(spec, 0, 1)


class TestManifoldDensity:
    """Test densities built from manifolds."""

    def test_embedded_gaussian_is_exact(self):
        """Test the embedded Gaussian is the degenerate diagonal Gaussian."""
        spec = ManifoldSpec(kind=ManifoldKind.EMBEDDED_GAUSSIAN, intrinsic_dim=2, ambient_dim=5)
        p = manifold_density(spec, seed=0)
        np.testing.assert_allclose(p.covariances[0], np.diag([1.0, 1.0, 0.0, 0.0, 0.0]))

    @pytest.mark.parametrize("kernel", [KernelKind.POINT, KernelKind.TANGENT])
    def test_kernel_mixture(self, kernel):
        """Test one component per centre."""
        spec = ManifoldSpec(
            kind=ManifoldKind.SPHERE, intrinsic_dim=1, ambient_dim=3, n_centers=32, kernel=kernel, kernel_bandwidth=0.1
        )
        p = manifold_density(spec, seed=0)
        assert p.n_components == 32
        assert p.is_degenerate == (kernel == KernelKind.TANGENT)


class TestPointsCsv:
    """Test the points file format."""

    def test_write_and_read(self, writer):
        """Test header and lossless values."""
        pts = np.array([[0.1, 1.0 / 3.0], [-2.5, 1e-300]])
        path = write_points_csv(writer, "pts.csv", pts)
        assert path.read_text().splitlines()[0] == "x0,x1"
        np.testing.assert_array_equal(read_points_csv(path), pts)
