"""
Unit tests for intrinsic-dimension estimation in analysis/idest.py.
"""

import numpy as np
import pytest

from gaugelab.analysis.flow import integrate
from gaugelab.analysis.idest import (
    NON_CONSERVATIVE_NOTE,
    SingularTrajectory,
    commutator_norms,
    estimate_id,
    fit_slopes,
    lemma_check,
    modal_value,
    run_manifold_experiment,
    singular_trajectories,
)
from gaugelab.core.errors import DomainError, EstimationError, LemmaError
from gaugelab.models import sde
from gaugelab.models.density import diagonal_gaussian, diffuse
from gaugelab.models.fields import FieldSpec, scaled_antisymmetric
from gaugelab.models.manifolds import manifold_density
from gaugelab.schemas.density import KernelKind, ManifoldKind, ManifoldSpec
from gaugelab.schemas.integrator import AugmentFlags, Direction, IntegratorConfig
from gaugelab.schemas.schedule import ScheduleConfig

TIGHT = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12)
DENSE = TIGHT.model_copy(update={"n_checkpoints": 256})
EMBEDDED_2_IN_5 = ManifoldSpec(kind=ManifoldKind.EMBEDDED_GAUSSIAN, intrinsic_dim=2, ambient_dim=5)


def backward_record(density, cfg, x1, liouville=False, icfg=TIGHT):
    fs = FieldSpec(density=density, schedule=cfg)
    return integrate(fs, cfg, icfg, x1, AugmentFlags(sensitivity=True, liouville=liouville))


class TestSingularTrajectories:
    """Test singular values of the sensitivity matrix."""

    def test_embedded_gaussian_values(self, embedded_gaussian_5d, ve_schedule):
        """Test tangent and normal singular values at t_min against the closed form."""
        rec = backward_record(embedded_gaussian_5d, ve_schedule, np.array([1.0, -2.0, 3.0, 0.5, -1.0]))
        st = singular_trajectories(rec, ve_schedule)
        s_min = sde.transition_variance(ve_schedule, ve_schedule.t_min)
        s_one = sde.transition_variance(ve_schedule, 1.0)
        tangent = np.sqrt((1.0 + s_min) / (1.0 + s_one))
        normal = np.sqrt(s_min / s_one)
        assert tangent == pytest.approx(0.101, abs=1e-3)
        assert normal == pytest.approx(3.22e-3, rel=1e-2)
        np.testing.assert_allclose(st.sv[-1], [tangent, tangent, normal, normal, normal], rtol=1e-5)
        np.testing.assert_allclose(st.sv[0], 1.0, rtol=1e-12)
        assert st.mu is not None
        assert np.all(np.diff(st.ts) < 0.0)

    def test_product_matches_liouville(self, embedded_gaussian_5d, ve_schedule):
        """Test prod sv = exp(liouville integral) along the trajectory."""
        rec = backward_record(embedded_gaussian_5d, ve_schedule, np.ones(5), liouville=True)
        st = singular_trajectories(rec, ve_schedule)
        np.testing.assert_allclose(np.prod(st.sv, axis=1), np.exp(rec.liouville), rtol=1e-5)

    def test_requires_backward_sensitivity(self, diag_gaussian_2d, ve_schedule):
        """Test records without Y or integrated forward are rejected."""
        fs = FieldSpec(density=diag_gaussian_2d, schedule=ve_schedule)
        with pytest.raises(DomainError):
            singular_trajectories(integrate(fs, ve_schedule, TIGHT, [1.0, 1.0]), ve_schedule)
        forward = TIGHT.model_copy(update={"direction": Direction.FORWARD})
        rec = integrate(fs, ve_schedule, forward, [0.1, 0.1], AugmentFlags(sensitivity=True))
        with pytest.raises(DomainError):
            singular_trajectories(rec, ve_schedule)

    def test_commutator_vanishes_for_diagonal_field(self, embedded_gaussian_5d, ve_schedule):
        """Test [Y Y^T, grad f] = 0 when every Jacobian is diagonal."""
        rec = backward_record(embedded_gaussian_5d, ve_schedule, np.ones(5))
        assert np.max(commutator_norms(rec)) < 1e-8


class TestLemma:
    """Test the eigenvalue evolution identity for symmetric Jacobians."""

    def test_conservative_trajectory(self, embedded_gaussian_5d, ve_schedule):
        """Test the relative error stays below 1e-3 from t = 0.1 down to t_min."""
        rec = backward_record(embedded_gaussian_5d, ve_schedule, np.array([0.3, 0.2, 1.0, -1.0, 2.0]))
        st = singular_trajectories(rec, ve_schedule)
        eps_index = int(np.argmax(st.ts <= 0.1))
        assert lemma_check(st, eps_index) < 1e-3

    @pytest.mark.parametrize("draw", [0, 1, 2])
    def test_sphere_mixture(self, ve_schedule, draw):
        """Test a tangent-kernel mixture on the 2-sphere keeps the error below 1e-2 from t = 0.1."""
        spec = ManifoldSpec(
            kind=ManifoldKind.SPHERE,
            intrinsic_dim=2,
            ambient_dim=3,
            n_centers=32,
            kernel=KernelKind.TANGENT,
            kernel_bandwidth=0.1,
        )
        p0 = manifold_density(spec, seed=11)
        x1 = diffuse(p0, ve_schedule, 1.0).sample(1, np.random.default_rng(draw))[0]
        st = singular_trajectories(backward_record(p0, ve_schedule, x1, icfg=DENSE), ve_schedule)
        assert st.mu is not None
        eps_index = int(np.argmax(st.ts <= 0.1))
        assert lemma_check(st, eps_index) < 1e-2

    def test_requires_eigenvalues(self):
        """Test a trajectory without mu raises LemmaError."""
        st = SingularTrajectory(ts=np.array([1.0, 0.1, 0.01]), sv=np.ones((3, 2)), sigma=np.ones(3))
        with pytest.raises(LemmaError, match="conservative"):
            lemma_check(st, 0)

    def test_index_range(self):
        """Test an out-of-range eps index."""
        st = SingularTrajectory(
            ts=np.array([1.0, 0.1]), sv=np.ones((2, 1)), sigma=np.ones(2), mu=np.zeros((2, 1))
        )
        with pytest.raises(DomainError):
            lemma_check(st, 2)
        assert lemma_check(st, 1) == 0.0


class TestEstimateId:
    """Test slope fitting and counting."""

    def test_embedded_gaussian(self, embedded_gaussian_5d, ve_schedule):
        """Test d_hat = 2 with normal slopes near 1 and tangent slopes near 0."""
        rec = backward_record(embedded_gaussian_5d, ve_schedule, np.array([1.0, 1.0, 1.0, 1.0, 1.0]))
        est = estimate_id(singular_trajectories(rec, ve_schedule))
        assert est.d_hat == 2
        slopes = sorted(est.slopes)
        assert max(abs(s) for s in slopes[:2]) < 0.05
        np.testing.assert_allclose(slopes[2:], 1.0, atol=1e-3)

    def test_slopes_sharpen_as_t_min_shrinks(self, embedded_gaussian_5d):
        """Test tangent slopes fall toward 0 while normal slopes stay at 1 for t_min in 1e-2, 1e-3, 1e-4."""
        tangent, normal = [], []
        for t_min in (1e-2, 1e-3, 1e-4):
            cfg = ScheduleConfig(g_base=25.0, t_min=t_min)
            rec = backward_record(embedded_gaussian_5d, cfg, np.array([1.0, -1.0, 0.5, 2.0, -0.5]))
            slopes = sorted(estimate_id(singular_trajectories(rec, cfg)).slopes)
            tangent.append(max(abs(s) for s in slopes[:2]))
            normal.append(min(slopes[2:]))
        assert tangent[0] > tangent[1] > tangent[2]
        assert tangent[2] < 5e-3
        assert normal[2] >= normal[0] - 1e-6
        np.testing.assert_allclose(normal, 1.0, atol=1e-3)

    def test_full_rank(self, ve_schedule):
        """Test a full-rank Gaussian in D = 3 gives d_hat = 3."""
        rec = backward_record(diagonal_gaussian([1.0, 2.0, 0.5]), ve_schedule, np.ones(3))
        assert estimate_id(singular_trajectories(rec, ve_schedule)).d_hat == 3

    @pytest.mark.parametrize("variance", [0.25, 4.0])
    def test_invariant_to_data_scale(self, ve_schedule, variance):
        """Test rescaling the data leaves d_hat unchanged."""
        p0 = diagonal_gaussian([variance, variance, 0.0, 0.0, 0.0])
        rec = backward_record(p0, ve_schedule, np.ones(5))
        assert estimate_id(singular_trajectories(rec, ve_schedule)).d_hat == 2

    def test_threshold_monotone(self, embedded_gaussian_5d, ve_schedule):
        """Test d_hat never decreases as the threshold grows."""
        rec = backward_record(embedded_gaussian_5d, ve_schedule, np.ones(5))
        st = singular_trajectories(rec, ve_schedule)
        counts = [estimate_id(st, threshold).d_hat for threshold in (1e-5, 0.1, 0.5, 0.9, 1.5)]
        assert counts == sorted(counts)
        assert counts[0] == 0
        assert counts[-1] == 5

    def test_short_span(self):
        """Test EstimationError when the checkpoints cover less than the fitting window."""
        ts = np.geomspace(1.0, 0.5, 6)
        st = SingularTrajectory(ts=ts, sv=np.ones((6, 2)), sigma=np.sqrt(ts))
        with pytest.raises(EstimationError):
            fit_slopes(st, 1.0)

    def test_sparse_window(self):
        """Test EstimationError with fewer than three checkpoints in the window."""
        ts = np.array([1.0, 0.5, 0.1, 0.001])
        st = SingularTrajectory(ts=ts, sv=np.ones((4, 2)), sigma=np.sqrt(ts))
        with pytest.raises(EstimationError):
            fit_slopes(st, 1.0)

    def test_exact_power_law(self):
        """Test slopes of synthetic power laws are recovered exactly."""
        ts = np.geomspace(1.0, 1e-3, 30)
        sigma = np.sqrt(ts)
        sv = np.stack([np.ones_like(ts), sigma, sigma**2], axis=1)
        slopes = fit_slopes(SingularTrajectory(ts=ts, sv=sv, sigma=sigma))
        np.testing.assert_allclose(slopes, [0.0, 1.0, 2.0], atol=1e-10)


class TestModalValue:
    """Test aggregation of per-sample estimates."""

    def test_ties_pick_smallest(self):
        """Test ties resolve to the smallest value."""
        assert modal_value([3, 2, 3, 2]) == (2, 0.5)

    def test_agreement(self):
        """Test the agreement fraction."""
        assert modal_value([2, 2, 2, 1]) == (2, 0.75)

    def test_empty(self):
        """Test an empty list raises EstimationError."""
        with pytest.raises(EstimationError):
            modal_value([])


class TestRunManifoldExperiment:
    """Test the multi-sample experiment driver."""

    def test_embedded_gaussian(self, ve_schedule):
        """Test every sample recovers d = 2 on the embedded Gaussian."""
        result = run_manifold_experiment(EMBEDDED_2_IN_5, n_samples=4, seed=1, cfg=ve_schedule, threads=2)
        assert result.summary.modal_d == 2
        assert result.summary.agreement == 1.0
        assert result.conservative
        assert result.summary.note == ""

    def test_independent_of_threads(self, ve_schedule):
        """Test per-sample slopes do not depend on the worker count."""
        one = run_manifold_experiment(EMBEDDED_2_IN_5, n_samples=3, seed=5, cfg=ve_schedule, threads=1)
        many = run_manifold_experiment(EMBEDDED_2_IN_5, n_samples=3, seed=5, cfg=ve_schedule, threads=3)
        assert [e.slopes for e in one.estimates] == [e.slopes for e in many.estimates]

    def test_non_conservative_flagged(self, ve_schedule):
        """Test an antisymmetric remainder marks the aggregate unreliable."""
        k = np.zeros((5, 5))
        k[0, 2], k[2, 0] = 1.0, -1.0

        def builder(p0, cfg):
            return scaled_antisymmetric(p0, cfg, k, 5.0)

        result = run_manifold_experiment(EMBEDDED_2_IN_5, builder, n_samples=2, seed=0, cfg=ve_schedule)
        assert not result.conservative
        assert result.summary.note == NON_CONSERVATIVE_NOTE

    def test_rejects_zero_samples(self):
        """Test n_samples must be positive."""
        with pytest.raises(DomainError):
            run_manifold_experiment(EMBEDDED_2_IN_5, n_samples=0)
