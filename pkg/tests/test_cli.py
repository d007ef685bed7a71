import json
import subprocess
import sys

import numpy as np
import pytest

from tchak.measures import uniform_grid_measure


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "tchak.cli", *args],
        cwd=cwd,
        capture_output=True,
        text=True,
    )


@pytest.fixture
def workdir(tmp_path):
    sys_path = tmp_path / "sys.json"
    sys_path.write_text(json.dumps({"family": "monomial", "n": 4, "params": {}}))
    mu = uniform_grid_measure(-1.0, 1.0, 801, midpoint=True)
    mu_path = tmp_path / "grid.csv"
    mu.to_csv(mu_path)
    return tmp_path


class TestQuadratureCommand:
    def test_writes_rule_with_residual(self, workdir):
        res = run_cli(["quadrature", "--system", "sys.json", "--measure", "grid.csv"], workdir)
        assert res.returncode == 0, res.stderr
        artifact = json.loads((workdir / "rule.json").read_text())
        assert artifact["version"]
        assert "residual" in artifact["rule"]
        assert len(artifact["rule"]["weights"]) <= 4

    def test_deterministic_artifacts(self, workdir):
        run_cli(["quadrature", "--system", "sys.json", "--measure", "grid.csv", "--out", "a.json"], workdir)
        run_cli(["quadrature", "--system", "sys.json", "--measure", "grid.csv", "--out", "b.json"], workdir)
        assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()

    def test_verify_roundtrip(self, workdir):
        run_cli(["quadrature", "--system", "sys.json", "--measure", "grid.csv"], workdir)
        res = run_cli(
            ["verify", "--rule", "rule.json", "--system", "sys.json", "--measure", "grid.csv"],
            workdir,
        )
        assert res.returncode == 0, res.stderr
        assert "verified" in res.stderr

    def test_malformed_csv_reports_line(self, workdir):
        (workdir / "bad.csv").write_text("0.0,1.0\noops,1.0\n")
        res = run_cli(["quadrature", "--system", "sys.json", "--measure", "bad.csv"], workdir)
        assert res.returncode == 1
        assert "bad.csv:2" in res.stderr


class TestFunctionalCommand:
    def test_infeasible_exits_two_with_certificate(self, workdir):
        x = np.geomspace(1.0, 100.0, 60)
        payload = {
            "system": {
                "family": "matrix",
                "n": 2,
                "params": {"entries": np.vstack([1.0 / x, np.ones(60)]).tolist()},
            },
            "points": list(range(60)),
            "l_values": [1.0, 0.0],
        }
        (workdir / "func.json").write_text(json.dumps(payload))
        res = run_cli(["functional", "--input", "func.json", "--out", "cert.json"], workdir)
        assert res.returncode == 2
        artifact = json.loads((workdir / "cert.json").read_text())
        assert artifact["status"] == "infeasible"
        assert len(artifact["certificate"]) == 2

    def test_feasible_functional(self, workdir):
        payload = {
            "system": {"family": "monomial", "n": 2, "params": {}},
            "points": [0.0, 0.5, 1.0],
            "l_values": [1.0, 0.5],
        }
        (workdir / "func.json").write_text(json.dumps(payload))
        res = run_cli(["functional", "--input", "func.json", "--out", "rule.json"], workdir)
        assert res.returncode == 0, res.stderr

    def test_matrix_system_points_implied(self, workdir):
        payload = {
            "system": {"family": "matrix", "n": 2, "params": {"entries": [[1.0, 1.0, 1.0], [0.0, 0.5, 1.0]]}},
            "l_values": [1.0, 0.5],
        }
        (workdir / "func.json").write_text(json.dumps(payload))
        res = run_cli(["functional", "--input", "func.json", "--out", "rule.json"], workdir)
        assert res.returncode == 0, res.stderr


class TestFrameTune:
    def test_tune_to_csv_target(self, workdir):
        (workdir / "fam.csv").write_text("1.0,0.0\n0.0,1.0\n1.0,1.0\n")
        (workdir / "target.csv").write_text("2.0,0.0\n0.0,2.0\n")
        res = run_cli(
            ["frame", "tune", "--family", "fam.csv", "--target", "target.csv", "--out", "tuned.json"],
            workdir,
        )
        assert res.returncode == 0, res.stderr
        artifact = json.loads((workdir / "tuned.json").read_text())
        assert artifact["status"] == "feasible"
        assert artifact["operator_defect"] <= 1e-9


class TestFrameCommands:
    def test_scale_nonscalable_exits_two(self, workdir):
        (workdir / "fam.csv").write_text("1.0,0.0\n1.0,1.0\n")
        res = run_cli(["frame", "scale", "--family", "fam.csv", "--out", "cert.json"], workdir)
        assert res.returncode == 2
        artifact = json.loads((workdir / "cert.json").read_text())
        assert artifact["status"] == "infeasible"

    def test_scale_feasible(self, workdir):
        (workdir / "fam.csv").write_text("1.0,0.0\n0.0,1.0\n")
        res = run_cli(["frame", "scale", "--family", "fam.csv", "--out", "w.json"], workdir)
        assert res.returncode == 0, res.stderr
        artifact = json.loads((workdir / "w.json").read_text())
        assert artifact["status"] == "feasible"

    def test_subsample(self, workdir):
        rng = np.random.default_rng(0)
        vecs = rng.standard_normal((20, 3))
        (workdir / "fam.csv").write_text("\n".join(",".join(repr(float(v)) for v in row) for row in vecs))
        res = run_cli(["frame", "subsample", "--family", "fam.csv", "--out", "sub.json"], workdir)
        assert res.returncode == 0, res.stderr
        artifact = json.loads((workdir / "sub.json").read_text())
        assert len(artifact["support"]) <= 6
        assert artifact["operator_defect"] <= 1e-10


class TestDoptCommand:
    def test_design_artifact(self, workdir):
        rng = np.random.default_rng(1)
        v = rng.standard_normal((3, 60))
        s = (v / 60) @ v.T
        eig, basis = np.linalg.eigh(s)
        v = (basis * eig**-0.5) @ basis.T @ v
        (workdir / "fam.csv").write_text("\n".join(",".join(repr(float(x)) for x in col) for col in v.T))
        res = run_cli(
            ["dopt", "--family", "fam.csv", "--epsilon", "1e-8", "--seed", "7", "--out", "d.json"],
            workdir,
        )
        assert res.returncode == 0, res.stderr
        artifact = json.loads((workdir / "d.json").read_text())
        assert artifact["converged"]
        assert artifact["det"] >= 1 - 1e-6
        assert "mu" in artifact


class TestWidthsCommands:
    def test_mc_csv_and_plot(self, workdir):
        res = run_cli(
            [
                "widths", "mc", "--grid", "300", "--n-values", "4,16",
                "--trials", "40", "--out", "mc.csv", "--plot",
            ],
            workdir,
        )
        assert res.returncode == 0, res.stderr
        lines = (workdir / "mc.csv").read_text().strip().splitlines()
        assert lines[0] == "n,mean_error,bound,passed"
        assert len(lines) == 3
        assert (workdir / "mc.png").exists()

    def test_tail_csv(self, workdir):
        res = run_cli(
            ["widths", "tail", "--grid", "256", "--n-range", "2:4", "--tail-length", "12", "--out", "t.csv"],
            workdir,
        )
        assert res.returncode == 0, res.stderr
        lines = (workdir / "t.csv").read_text().strip().splitlines()
        assert len(lines) == 4

    def test_kolmogorov_csv(self, workdir):
        res = run_cli(["widths", "kolmogorov", "--grid", "60", "--samples", "6"], workdir)
        assert res.returncode == 0, res.stderr
        assert (workdir / "kolmogorov.csv").exists()


class TestExitCodes:
    def test_usage_error_is_one(self, workdir):
        res = run_cli(["quadrature", "--no-such-flag"], workdir)
        assert res.returncode == 1

    def test_missing_file_is_one(self, workdir):
        res = run_cli(["quadrature", "--system", "nope.json", "--measure", "grid.csv"], workdir)
        assert res.returncode == 1
