"""Command-line interface: verbs, exit codes, manifests, reproducibility."""

import json

import numpy as np
import pytest

from koszulflow import geometry as geo
from koszulflow import registry as reg
from koszulflow.cli import main, write_potential_snapshot
from koszulflow.grid import PeriodicGrid, ScalarField
from koszulflow.io import read_snapshot


def write_config(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(*argv):
    return main(list(argv))


class TestExamples:
    def test_lists_all_names(self, capsys):
        assert run("examples") == 0
        out = capsys.readouterr().out
        for name in ("flat", "sin1d", "bump2d", "rough1d", "twist2d"):
            assert name in out


class TestCurvature:
    def test_flat_report_is_all_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "c.cfg", "example = flat\nn_samples = 50\n")
        out_dir = tmp_path / "out"
        assert run("curvature", "--config", cfg, "--out", str(out_dir), "--seed", "0") == 0
        report = dict(
            line.split(": ", 1)
            for line in (out_dir / "report.txt").read_text().splitlines()
        )
        for key in ("hessian_defect", "torsion_norm", "sup_gamma_mixed", "sup_beta", "sup_q"):
            assert abs(float(report[key])) <= 1e-12
        assert (out_dir / "manifest.json").exists()

    def test_sin1d_probe_at_origin(self, tmp_path):
        cfg = write_config(tmp_path, "c.cfg", "example = sin1d\nsizes = 512\n")
        out_dir = tmp_path / "out"
        assert run("curvature", "--config", cfg, "--out", str(out_dir), "--probe", "0") == 0
        report = dict(
            line.split(": ", 1)
            for line in (out_dir / "report.txt").read_text().splitlines()
        )
        assert float(report["beta_00@probe"]) == pytest.approx(0.25, abs=1e-4)
        assert float(report["q_0000@probe"]) == pytest.approx(-0.25, abs=1e-3)

    def test_twist2d_reports_not_applicable(self, tmp_path):
        cfg = write_config(tmp_path, "c.cfg", "example = twist2d\n")
        out_dir = tmp_path / "out"
        assert run("curvature", "--config", cfg, "--out", str(out_dir)) == 0
        text = (out_dir / "report.txt").read_text()
        report = dict(line.split(": ", 1) for line in text.splitlines())
        assert report["sup_q"] == "not applicable (non-Hessian input)"
        assert float(report["hessian_defect"]) == pytest.approx(0.3, abs=2e-3)
        assert float(report["torsion_norm"]) >= 0.01

    def test_snapshots_written_when_requested(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.cfg", "example = sin1d\nsizes = 128\nsnapshots = true\n"
        )
        out_dir = tmp_path / "out"
        assert run("curvature", "--config", cfg, "--out", str(out_dir)) == 0
        grid, comps, _, _ = read_snapshot(str(out_dir / "metric.hfld"))
        g = geo.metric_from_potential(reg.build_example("sin1d", sizes=(128,)))
        assert np.array_equal(comps[..., 0], g.component(0, 0))


class TestFlowRun:
    def test_writes_outputs_and_is_byte_identical(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "f.cfg",
            "example = sin1d\nsizes = 128\nT = 0.02\ndiag_stride = 20\n",
        )
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run("flow-run", "--config", cfg, "--out", str(out1)) == 0
        assert run("flow-run", "--config", cfg, "--out", str(out2)) == 0
        csv1 = (out1 / "diagnostics.csv").read_bytes()
        csv2 = (out2 / "diagnostics.csv").read_bytes()
        assert csv1 == csv2
        header = csv1.decode().splitlines()[0]
        assert header == "t,sup_q,t_sup_q,lambda_min,lambda_max,var_det,drift_g00,sup_phi,dt"
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["outcome"] == "ok"
        assert manifest["config"]["example"] == "sin1d"
        assert "koszulflow" in manifest["versions"]

    def test_final_snapshot_round_trips(self, tmp_path):
        cfg = write_config(tmp_path, "f.cfg", "example = flat\nT = 0.1\n")
        out_dir = tmp_path / "out"
        assert run("flow-run", "--config", cfg, "--out", str(out_dir)) == 0
        grid, comps, t, _ = read_snapshot(str(out_dir / "final_metric.hfld"))
        assert t == 0.1
        g0 = geo.metric_from_potential(reg.build_example("flat"))
        assert np.array_equal(comps, g0.components)  # flat is stationary

    def test_blowup_exit_code_and_manifest(self, tmp_path):
        # dt_min above the stability bound with no halving budget forces the
        # blow-up path deterministically
        cfg = write_config(
            tmp_path,
            "f.cfg",
            "example = sin1d\nsizes = 128\nT = 1.0\ndt_min = 0.5\nmax_halvings = 0\nscheme = euler\nsigma = 1.0\n",
        )
        out_dir = tmp_path / "out"
        assert run("flow-run", "--config", cfg, "--out", str(out_dir)) == 3
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["outcome"] == "blowup"
        assert manifest["last_valid_t"] == 0.0
        assert (out_dir / "diagnostics.csv").exists()


class TestFlowCompare:
    def test_reports_discrepancy(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.cfg", "example = sin1d\nsizes = 128\nT = 0.01\ndt = 1e-4\n"
        )
        out_dir = tmp_path / "out"
        assert run("flow-compare", "--config", cfg, "--out", str(out_dir)) == 0
        report = dict(
            line.split(": ", 1)
            for line in (out_dir / "compare.txt").read_text().splitlines()
        )
        assert float(report["discrepancy"]) <= 1e-4


class TestA2Check:
    def test_flat_zero_gauge_unbounded(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "a.cfg", "example = flat\ntheta = 0.5\ngauge = zero\n")
        assert run("a2-check", "--config", cfg) == 0
        assert "S_max: unbounded" in capsys.readouterr().out

    def test_sin1d_bounded_with_witness(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "a.cfg", "example = sin1d\ntheta = 0.1\ngauge = zero\nS = 1.0\n"
        )
        out_dir = tmp_path / "out"
        assert run("a2-check", "--config", cfg, "--out", str(out_dir)) == 0
        report = dict(
            line.split(": ", 1) for line in (out_dir / "a2.txt").read_text().splitlines()
        )
        assert float(report["S_max"]) == pytest.approx(6.834, abs=0.05)
        assert float(report["margin_at_S"]) > 0
        assert "witness_node" in report

    def test_logdet_gauge_family_unbounded(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "a.cfg", "example = sin1d\ntheta = 0.5\ngauge = logdet\n")
        assert run("a2-check", "--config", cfg) == 0
        assert "S_max: unbounded" in capsys.readouterr().out


class TestSmoothingProbe:
    def test_probe_csv_is_reproducible(self, tmp_path):
        cfg = write_config(
            tmp_path, "p.cfg", "example = rough1d\nt_samples = 0.001,0.005,0.02\n"
        )
        out1, out2 = tmp_path / "p1", tmp_path / "p2"
        assert run("smoothing-probe", "--config", cfg, "--out", str(out1)) == 0
        assert run("smoothing-probe", "--config", cfg, "--out", str(out2)) == 0
        assert (out1 / "probe.csv").read_bytes() == (out2 / "probe.csv").read_bytes()
        lines = (out1 / "probe.csv").read_text().splitlines()
        assert lines[0] == "t,sup_q,t_sup_q"
        assert len(lines) == 4


class TestErrorPaths:
    def test_unknown_key_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, "b.cfg", "example = flat\nwat = 1\n")
        assert run("curvature", "--config", cfg, "--out", str(tmp_path / "o")) == 2

    def test_unknown_example_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, "b.cfg", "example = nope\n")
        assert run("curvature", "--config", cfg, "--out", str(tmp_path / "o")) == 2

    def test_missing_input_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, "b.cfg", "T = 1.0\n")
        assert run("flow-run", "--config", cfg, "--out", str(tmp_path / "o")) == 2

    def test_bad_scheme_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, "b.cfg", "example = flat\nT = 1.0\nscheme = rk9\n")
        assert run("flow-run", "--config", cfg, "--out", str(tmp_path / "o")) == 2

    def test_negative_t_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, "b.cfg", "example = flat\nT = -1.0\n")
        assert run("flow-run", "--config", cfg, "--out", str(tmp_path / "o")) == 2

    def test_nonconvex_potential_input_exits_4(self, tmp_path):
        grid = PeriodicGrid((128,), (2 * np.pi,))
        pm = geo.PotentialMetric(
            grid, np.eye(1), ScalarField.from_function(grid, lambda x: -0.5 * np.sin(x))
        )
        # deepen the well beyond convexity by hand-editing the snapshot data
        snap = tmp_path / "bad_psi.hfld"
        bad = geo.PotentialMetric(grid, np.eye(1), pm.psi * 20.0)
        write_potential_snapshot(str(snap), bad)
        cfg = write_config(tmp_path, "b.cfg", f"potential = {snap}\nT = 1.0\n")
        assert run("flow-run", "--config", cfg, "--out", str(tmp_path / "o")) == 4


class TestPotentialInput:
    def test_potential_snapshot_round_trips_through_cli(self, tmp_path):
        pm = reg.build_example("sin1d", sizes=(128,))
        snap = tmp_path / "sin.hfld"
        write_potential_snapshot(str(snap), pm)
        cfg = write_config(tmp_path, "p.cfg", f"potential = {snap}\n")
        out_dir = tmp_path / "out"
        assert run("curvature", "--config", cfg, "--out", str(out_dir), "--probe", "0") == 0
        report = dict(
            line.split(": ", 1)
            for line in (out_dir / "report.txt").read_text().splitlines()
        )
        assert float(report["beta_00@probe"]) == pytest.approx(0.25, abs=1e-3)
