"""
End-to-end tests of the gaugelab command line.
"""

import csv
import json

import numpy as np
import pytest

from gaugelab.main import build_parser, main

GAUSSIAN_CONFIG = """
seed = 4

[schedule]
kind = "VarianceExploding"
g_base = 25.0
t_min = 0.001

[density]
kind = "gaussian"
mean = [0.0, 0.0]
covariance = [[2.0, 0.0], [0.0, 0.5]]

[remainder]
kind = "LinearMatrix"
matrix = "gauge_rotation"

[gauge]
times = [1.0, 0.1]
n_mc = 50
"""

GAUSSIAN_REMAINDER = 'kind = "LinearMatrix"\nmatrix = "gauge_rotation"'

MANIFOLD_CONFIG = """
[manifold]
kind = "EmbeddedGaussian"
intrinsic_dim = 2
ambient_dim = 5

[integrator]
rel_tol = 1e-6
abs_tol = 1e-9

[idest]
n_samples = 3
"""


def read_rows(path):
    with path.open() as fh:
        return list(csv.reader(fh))


@pytest.fixture
def gaussian_config(tmp_path):
    path = tmp_path / "gaussian.toml"
    path.write_text(GAUSSIAN_CONFIG)
    return path


class TestParser:
    """Test argument parsing."""

    def test_common_flags(self):
        """Test shared flags are accepted after every subcommand."""
        args = build_parser().parse_args(["sample", "--n", "5", "--seed", "3", "--threads", "2"])
        assert (args.command, args.n, args.seed, args.threads) == ("sample", 5, 3, 2)

    def test_missing_subcommand(self):
        """Test argparse exits with usage status 2."""
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([])
        assert exc.value.code == 2


class TestExitCodes:
    """Test configuration failures exit with 2 before writing anything."""

    def test_unknown_scenario(self, tmp_path):
        """Test an unknown scenario name."""
        out = tmp_path / "out"
        assert main(["scenario", "nope", "--out", str(out)]) == 2
        assert not out.exists()

    def test_invalid_config(self, tmp_path):
        """Test a config with an out-of-range field."""
        path = tmp_path / "bad.toml"
        path.write_text("[schedule]\nt_min = 2.0\n")
        out = tmp_path / "out"
        assert main(["sample", "--config", str(path), "--out", str(out)]) == 2
        assert not out.exists()

    def test_missing_config(self, tmp_path):
        """Test a config path that does not exist."""
        assert main(["gauge-check", "--config", str(tmp_path / "none.toml")]) == 2

    def test_bad_threads(self, gaussian_config, tmp_path):
        """Test --threads 0."""
        assert main(["sample", "--config", str(gaussian_config), "--threads", "0", "--out", str(tmp_path)]) == 2

    @pytest.mark.parametrize(
        "remainder",
        [
            'kind = "LinearMatrix"\nmatrix = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]',
            'kind = "LinearMatrix"\nmatrix = "scaled_antisymmetric"',
            'kind = "CurlQuadratic"\nepsilon = [0.5]',
        ],
        ids=["matrix_shape", "missing_generator", "curl_in_2d"],
    )
    def test_remainder_mismatch(self, tmp_path, caplog, remainder):
        """Test a remainder that does not fit the density is a configuration error."""
        path = tmp_path / "bad.toml"
        path.write_text(GAUSSIAN_CONFIG.replace(GAUSSIAN_REMAINDER, remainder))
        out = tmp_path / "out"
        assert main(["sample", "--config", str(path), "--n", "3", "--out", str(out)]) == 2
        assert not out.exists()
        assert "remainder." in caplog.text


class TestSample:
    """Test the sample subcommand."""

    def test_zero_samples(self, gaussian_config, tmp_path):
        """Test --n 0 writes a header-only samples.csv."""
        out = tmp_path / "out"
        assert main(["sample", "--config", str(gaussian_config), "--n", "0", "--out", str(out)]) == 0
        assert read_rows(out / "samples.csv") == [["x0", "x1"]]

    def test_sample_covariance(self, gaussian_config, tmp_path):
        """Test samples under the gauge remainder match the diffused covariance."""
        out = tmp_path / "out"
        assert main(["sample", "--config", str(gaussian_config), "--n", "4000", "--out", str(out)]) == 0
        samples = np.array(read_rows(out / "samples.csv")[1:], dtype=float)
        assert samples.shape == (4000, 2)
        target = np.diag([2.0, 0.5]) + 1.003e-3 * np.eye(2)
        err = np.linalg.norm(np.cov(samples.T) - target) / np.linalg.norm(target)
        assert err < 0.1

    def test_independent_of_threads(self, gaussian_config, tmp_path):
        """Test outputs are identical for one and several threads."""
        texts = []
        for threads in ("1", "3"):
            out = tmp_path / threads
            args = ["sample", "--config", str(gaussian_config), "--n", "2100", "--threads", threads]
            assert main([*args, "--out", str(out)]) == 0
            texts.append((out / "samples.csv").read_bytes())
        assert texts[0] == texts[1]

    def test_trajectories(self, gaussian_config, tmp_path):
        """Test --trajectories writes one block of checkpoints per sample."""
        out = tmp_path / "out"
        assert main(["sample", "--config", str(gaussian_config), "--n", "2", "--trajectories", "--out", str(out)]) == 0
        rows = read_rows(out / "trajectories.csv")
        assert rows[0] == ["sample_id", "t", "x0", "x1", "logdet"]
        assert {r[0] for r in rows[1:]} == {"0", "1"}
        logdets = np.array([r[-1] for r in rows[1:]], dtype=float)
        assert np.all(np.isfinite(logdets))
        assert logdets[0] == 0.0


class TestLikelihood:
    """Test the likelihood subcommand."""

    def test_matches_analytic(self, gaussian_config, tmp_path):
        """Test logp_model against the analytic log-density."""
        points = tmp_path / "points.csv"
        points.write_text("x0,x1\n0.0,0.0\n1.0,-0.5\n-2.0,0.3\n")
        out = tmp_path / "out"
        assert main(["likelihood", "--config", str(gaussian_config), "--points", str(points), "--out", str(out)]) == 0
        rows = read_rows(out / "logp.csv")
        assert rows[0] == ["x0", "x1", "logp_model", "logp_analytic", "abs_err"]
        assert len(rows) == 4
        assert max(float(r[-1]) for r in rows[1:]) < 1e-4

    def test_wrong_dimension(self, gaussian_config, tmp_path):
        """Test points of the wrong dimension are a configuration error."""
        points = tmp_path / "points.csv"
        points.write_text("x0,x1,x2\n0.0,0.0,0.0\n")
        assert main(["likelihood", "--config", str(gaussian_config), "--points", str(points),
                     "--out", str(tmp_path / "out")]) == 2


class TestGaugeCheck:
    """Test the gauge-check subcommand."""

    def test_rotation_residuals(self, gaussian_config, tmp_path):
        """Test the rotation remainder reports near-zero residuals at every time."""
        out = tmp_path / "out"
        assert main(["gauge-check", "--config", str(gaussian_config), "--out", str(out)]) == 0
        rows = read_rows(out / "gauge.csv")
        assert rows[0] == ["t", "residual_max", "residual_rms", "n_points"]
        assert [float(r[0]) for r in rows[1:]] == [1.0, 0.1]
        assert all(float(r[1]) < 1e-10 for r in rows[1:])

    def test_section4_matrix_name(self, tmp_path):
        """Test the section4 matrix name resolves to the rotation remainder."""
        path = tmp_path / "section4.toml"
        path.write_text(GAUSSIAN_CONFIG.replace('matrix = "gauge_rotation"', 'matrix = "section4"'))
        out = tmp_path / "out"
        assert main(["gauge-check", "--config", str(path), "--out", str(out)]) == 0
        rows = read_rows(out / "gauge.csv")
        assert all(float(r[1]) < 1e-10 for r in rows[1:])


class TestIdCommand:
    """Test the id subcommand on a small experiment."""

    def test_embedded_gaussian(self, tmp_path):
        """Test a three-sample run writes per-sample rows and the aggregate."""
        path = tmp_path / "manifold.toml"
        path.write_text(MANIFOLD_CONFIG)
        out = tmp_path / "out"
        assert main(["id", "--config", str(path), "--out", str(out), "--threads", "2"]) == 0
        rows = read_rows(out / "id_experiment.csv")
        assert rows[0][:2] == ["sample_id", "d_hat"]
        assert len(rows) == 4
        aggregate = json.loads((out / "id_aggregate.json").read_text())
        assert aggregate["modal_d"] == 2
        assert aggregate["conservative"] is True

    def test_requires_manifold(self, gaussian_config, tmp_path):
        """Test the id command rejects a plain density config."""
        assert main(["id", "--config", str(gaussian_config), "--out", str(tmp_path / "out")]) == 2


class TestScenarioCommand:
    """Test the scenario subcommand."""

    def test_single_scenario(self, tmp_path):
        """Test a passing scenario exits 0 and writes its report."""
        out = tmp_path / "out"
        assert main(["scenario", "conservative_bad_generator", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report[0]["name"] == "conservative_bad_generator"
