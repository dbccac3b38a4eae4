import json
import os

import numpy as np
import pytest

from gfl.cli import main
from gfl.losses import QuantileLoss
from gfl.solver import FusedLassoProblem, solve


def write_config(tmp_path, cfg):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def small_config(**over):
    cfg = {
        "experiment": "pointwise",
        "signal": {"values": [0.0, 2.0], "lengths": [16, 16]},
        "noise": {"kind": "gaussian", "scale": 1.0},
        "loss": {"kind": "square"},
        "lambda": {"rule": "sqrt_n_over_k"},
        "delta": 0.05,
        "replications": 10,
        "seed": 11,
        "monitor": "interior",
    }
    cfg.update(over)
    return cfg


class TestSolveCommand:
    def test_roundtrip(self, tmp_path):
        y = [0.0, 0.0, 10.0]
        inp = tmp_path / "y.csv"
        inp.write_text("\n".join(str(v) for v in y) + "\n")
        out = tmp_path / "out"
        rc = main(
            [
                "solve", "--input", str(inp), "--lambda", "1.0",
                "--loss", "quantile", "--tau", "0.5", "--out-dir", str(out),
            ]
        )
        assert rc == 0
        lines = (out / "solution.csv").read_text().splitlines()
        assert lines[0].startswith("# version=")
        assert "config_hash=" in lines[0]
        assert lines[1] == "i,y,theta_hat,z"
        theta = [float(row.split(",")[2]) for row in lines[2:]]
        ref = solve(FusedLassoProblem(np.asarray(y), 1.0, QuantileLoss(0.5)))
        assert np.allclose(theta, ref.theta_hat)
        meta = json.loads((out / "solution.json").read_text())
        assert meta["kkt_residual"] <= 1e-9
        assert meta["version"] and meta["config_hash"]

    def test_bad_input_exit_2(self, tmp_path):
        inp = tmp_path / "y.csv"
        inp.write_text("1.0\nnot-a-number\n")
        assert main(["solve", "--input", str(inp), "--lambda", "1.0"]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["solve", "--input", str(tmp_path / "absent.csv"), "--lambda", "1"]) == 2


class TestBoundsCommand:
    def test_csv_format(self, tmp_path):
        out = tmp_path / "b"
        rc = main(
            [
                "bounds",
                "--signal-values", "0,1",
                "--signal-lengths", "8,8",
                "--sigma", "1.0",
                "--delta", "0.05",
                "--lambda", "4.0",
                "--growth-L", "0.5",
                "--out-dir", str(out),
            ]
        )
        assert rc == 0
        lines = (out / "bounds.csv").read_text().splitlines()
        assert lines[1] == "i,k,d,B,B_improved,B_quantile,applicable"
        assert len(lines) == 2 + 16
        first = lines[2].split(",")
        assert first[0] == "1" and first[1] == "1" and first[2] == "1"
        assert float(first[3]) > 0
        meta = json.loads((out / "bounds.json").read_text())
        assert meta["n"] == 16 and meta["K"] == 2

    def test_delta_out_of_range_exit_3(self, tmp_path):
        rc = main(
            [
                "bounds",
                "--signal-values", "0,1",
                "--signal-lengths", "8,8",
                "--delta", "0.5",
                "--lambda", "4.0",
                "--out-dir", str(tmp_path / "b"),
            ]
        )
        assert rc == 3

    def test_bad_signal_exit_2(self, tmp_path):
        rc = main(
            [
                "bounds",
                "--signal-values", "0,zero",
                "--signal-lengths", "8,8",
                "--delta", "0.05",
                "--lambda", "4.0",
                "--out-dir", str(tmp_path / "b"),
            ]
        )
        assert rc == 2


class TestLilCommand:
    def test_outputs(self, tmp_path):
        out = tmp_path / "lil"
        rc = main(
            [
                "lil", "--sigma", "1.0", "--delta", "0.1",
                "--horizon", "256", "--paths", "50", "--seed", "3",
                "--out-dir", str(out),
            ]
        )
        assert rc == 0
        meta = json.loads((out / "lil.json").read_text())
        assert meta["within_bound"] is True
        lines = (out / "lil.csv").read_text().splitlines()
        assert len(lines) > 3


class TestSimulateCommand:
    def test_byte_determinism(self, tmp_path):
        cfg = write_config(tmp_path, small_config())
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["simulate", "--config", cfg, "--out-dir", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--out-dir", str(out2)]) == 0
        for name in os.listdir(out1):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_override_changes_output(self, tmp_path):
        cfg = write_config(tmp_path, small_config())
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--out-dir", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--seed", "999", "--out-dir", str(out2)]) == 0
        assert (out1 / "summary.json").read_bytes() != (out2 / "summary.json").read_bytes()

    def test_unknown_key_exit_2(self, tmp_path):
        cfg = write_config(tmp_path, small_config(extra_knob=1))
        assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path / "x")]) == 2

    def test_bad_json_exit_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["simulate", "--config", str(path), "--out-dir", str(tmp_path / "x")]) == 2

    def test_delta_out_of_range_exit_3(self, tmp_path):
        cfg = write_config(tmp_path, small_config(delta=0.5))
        assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path / "x")]) == 3

    def test_no_temp_files_left(self, tmp_path):
        cfg = write_config(tmp_path, small_config())
        out = tmp_path / "clean"
        assert main(["simulate", "--config", cfg, "--out-dir", str(out)]) == 0
        leftovers = [f for f in os.listdir(out) if f.startswith(".tmp-") or f.endswith("~")]
        assert leftovers == []
        names = set(os.listdir(out))
        assert {"summary.json", "per_index.csv"} <= names
