import json
import math
import os

import pytest

from hopflab.cli import main


def read(path):
    with open(path) as fh:
        return fh.read()


class TestBounds:
    def test_prints_sqrt3_kappa(self, capsys):
        assert main(["bounds", "--a", "1", "--alpha", "0", "--sigma", "1"]) == 0
        out = capsys.readouterr().out
        line = [ln for ln in out.splitlines() if ln.startswith("kappa")][0]
        val = float(line.split("=")[1])
        assert val == pytest.approx(math.sqrt(3.0), abs=1e-12)

    def test_validation_error_exit_code(self, capsys):
        assert main(["bounds", "--a", "-1"]) == 1


class TestSimulate:
    def test_byte_identical_reruns(self, tmp_path):
        args = ["simulate", "--seed", "7", "--T", "2", "--out"]
        assert main(args + [str(tmp_path / "r1")]) == 0
        assert main(args + [str(tmp_path / "r2")]) == 0
        b1 = (tmp_path / "r1" / "trajectory.csv").read_bytes()
        b2 = (tmp_path / "r2" / "trajectory.csv").read_bytes()
        assert b1 == b2

    def test_config_hash_stamp(self, tmp_path):
        assert main(["simulate", "--seed", "1", "--T", "1", "--out", str(tmp_path)]) == 0
        first = read(tmp_path / "trajectory.csv").splitlines()[0]
        assert first.startswith("# config=")
        cfg = json.loads(read(tmp_path / "config_simulate.json"))
        assert first.split("=")[1] == cfg["config_hash"]


class TestConfigResolution:
    def test_file_then_flag_override(self, tmp_path, capsys):
        cfg = {"a": 2.0, "alpha": 0.0, "sigma": 1.0}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["bounds", "--config", str(cfg_path)]) == 0
        out1 = capsys.readouterr().out
        k1 = float([ln for ln in out1.splitlines() if ln.startswith("kappa")][0].split("=")[1])
        assert k1 == pytest.approx(2 * math.sqrt(3.0), abs=1e-12)
        assert main(["bounds", "--config", str(cfg_path), "--a", "1"]) == 0
        out2 = capsys.readouterr().out
        k2 = float([ln for ln in out2.splitlines() if ln.startswith("kappa")][0].split("=")[1])
        assert k2 == pytest.approx(math.sqrt(3.0), abs=1e-12)

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"bogus": 1}))
        assert main(["bounds", "--config", str(cfg_path)]) == 1

    def test_unknown_flag_exits_one(self, capsys):
        assert main(["bounds", "--bogus", "1"]) == 1

    def test_unknown_subcommand_exits_one(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_numeric_failure_exits_two(self, tmp_path, capsys):
        # an initial state beyond the blow-up guard trips the diagnostic
        assert main(["simulate", "--x0", "1e9", "--T", "1",
                     "--out", str(tmp_path)]) == 2


class TestOutputs:
    def test_density_table(self, tmp_path):
        assert main(["density", "--alpha", "1", "--n", "50", "--out", str(tmp_path)]) == 0
        lines = read(tmp_path / "density.csv").splitlines()
        assert lines[1] == "s,density"
        assert len(lines) == 2 + 50

    def test_ftle_csv(self, tmp_path):
        assert main(["ftle", "--n", "20", "--T", "1", "--seed", "3",
                     "--out", str(tmp_path)]) == 0
        lines = read(tmp_path / "ftle.csv").splitlines()
        assert lines[1] == "seed,T,ftle_sup,ftle_inf"
        assert len(lines) == 2 + 20

    def test_pullback_outputs(self, tmp_path):
        assert main(["pullback", "--T", "5", "--n", "30", "--alpha", "-1",
                     "--checkpoints", "1,5", "--out", str(tmp_path)]) == 0
        dlines = read(tmp_path / "pullback_diameters.csv").splitlines()
        assert dlines[1] == "checkpoint_T,diameter"
        assert len(dlines) == 2 + 2
        clines = read(tmp_path / "pullback_cloud.csv").splitlines()
        assert clines[1] == "x,y"
        assert len(clines) == 2 + 30

    def test_lyapunov_summary(self, tmp_path, capsys):
        assert main(["lyapunov", "--T", "50", "--burn-in", "5", "--seed", "2",
                     "--out", str(tmp_path)]) == 0
        lines = read(tmp_path / "lyapunov.csv").splitlines()
        assert lines[1] == "kind,value,ci,T,n"
        kinds = {ln.split(",")[0] for ln in lines[2:]}
        assert kinds == {"top", "sum"}

    def test_sweep_outputs(self, tmp_path):
        assert main(["sweep", "--grid", "0:2:2,-1:-1:1", "--cell-T", "20",
                     "--cell-seeds", "1", "--burn-in", "2", "--threads", "1",
                     "--no-refine", "--out", str(tmp_path)]) == 0
        slines = read(tmp_path / "sweep.csv").splitlines()
        assert slines[1] == "alpha,b,lambda_top,ci,certified"
        assert len(slines) == 2 + 2
        assert (tmp_path / "contour.csv").exists()

    def test_sweep_requires_grid(self, capsys):
        assert main(["sweep"]) == 1


@pytest.mark.slow
class TestVerify:
    def test_exit_zero_on_correct_build(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "all checks passed" in out
        assert "FAIL" not in out
        # the normalization erratum is part of the verify log
        assert "displayed normalizer exceeds" in out
