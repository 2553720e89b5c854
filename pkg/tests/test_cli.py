"""
tests/test_cli.py
=================
End-to-end runs of the command-line subcommands on tiny grids.
"""

import logging
import sys
from pathlib import Path

# Ensure project root is importable
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(_PROJECT_ROOT))

import numpy as np
import pandas as pd
import pytest

from app.errors import ConfigError
from app.experiments.config import dump_config, load_config, resolve_config
from app.main import main

ROLLOUT_ARGS = ["rollout", "--N", "60", "--L", "3", "--trials", "2", "--noise-var", "0", "--seed", "7"]


def _run(args, out):
    return main([*args, "--out", str(out)])


class TestRolloutCommand:
    def test_header_and_values(self, tmp_path):
        assert _run(ROLLOUT_ARGS, tmp_path) == 0
        path = tmp_path / "rollout_N60.csv"
        assert path.read_text().splitlines()[0] == "step,seed,L,y_pred,y_clean"
        df = pd.read_csv(path)
        assert len(df) == 2 * 61
        np.testing.assert_allclose(df["y_pred"], df["y_clean"], atol=1e-6)
        assert (tmp_path / "config.txt").is_file()

    def test_rerun_is_byte_identical(self, tmp_path):
        assert _run(ROLLOUT_ARGS, tmp_path / "a") == 0
        assert _run(ROLLOUT_ARGS, tmp_path / "b") == 0
        first = (tmp_path / "a" / "rollout_N60.csv").read_bytes()
        assert first == (tmp_path / "b" / "rollout_N60.csv").read_bytes()

    def test_snapshot_reloads(self, tmp_path):
        assert _run(ROLLOUT_ARGS, tmp_path) == 0
        expected = resolve_config(
            "rollout",
            overrides={"N": (60,), "L": (3,), "trials": 2, "noise_var": 0.0, "seed": 7, "out": tmp_path},
        )
        assert load_config(tmp_path / "config.txt") == expected


class TestConfigErrors:
    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("depth = 3\n")
        assert main(["singvals", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_invalid_value(self, tmp_path):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("trials = -1\n")
        assert main(["singvals", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_unparsable_value(self, tmp_path):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("noise_var = lots\n")
        with pytest.raises(ConfigError, match="noise_var"):
            resolve_config("depth-sweep", cfg)

    def test_missing_file(self, tmp_path):
        assert main(["singvals", "--config", str(tmp_path / "nope.txt"), "--out", str(tmp_path)]) == 2

    def test_experiment_mismatch(self, tmp_path):
        cfg = resolve_config("lqr", overrides={"out": tmp_path})
        path = dump_config(cfg, tmp_path / "lqr.txt")
        with pytest.raises(ConfigError):
            resolve_config("singvals", path)

    def test_bad_flag_exits_with_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["rollout", "--L", "two", "--out", str(tmp_path)])
        assert exc.value.code == 2

    def test_file_then_flags(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("trials = 4\nL = 2,3\n")
        resolved = resolve_config("singvals", cfg, {"trials": 9})
        assert resolved.trials == 9
        assert resolved.L == (2, 3)


class TestOtherCommands:
    def test_depth_sweep(self, tmp_path):
        args = ["depth-sweep", "--L", "2,3", "--N", "60", "--noise-var", "0.1", "--trials", "2"]
        assert _run(args + ["--strategy", "smooth"], tmp_path) == 0
        df = pd.read_csv(tmp_path / "depth_sweep_var0.1.csv")
        assert list(df.columns) == ["L", "N", "strategy", "mean_rmse", "std_rmse"]
        assert list(df["L"]) == [2, 3]
        assert set(df["strategy"]) == {"smooth"}

    def test_singvals(self, tmp_path):
        assert _run(["singvals", "--L", "2", "--N", "50,100", "--trials", "3"], tmp_path) == 0
        df = pd.read_csv(tmp_path / "singvals_L2.csv")
        assert {"epsilon_N", "scale_bound", "median_inv_sigma"} <= set(df.columns)
        assert list(df["N"]) == [50, 100]

    def test_hw_events(self, tmp_path):
        assert _run(["hw-events", "--L", "2,3", "--N", "10,100", "--trials", "5"], tmp_path) == 0
        df = pd.read_csv(tmp_path / "hw_events.csv")
        assert len(df) == 4
        assert df["joint_freq"].between(0, 1).all()

    def test_lqr(self, tmp_path):
        assert _run(["lqr", "--L", "5", "--N", "120", "--noise-var", "0.1", "--input-noise-var", "0.1"], tmp_path) == 0
        for name in ("lqr_data.csv", "lqr_deviation.csv", "lqr_tracking.csv", "lqr_summary.csv"):
            assert (tmp_path / name).is_file()
        summary = pd.read_csv(tmp_path / "lqr_summary.csv")
        assert list(summary["L"]) == [5]
        tracking = pd.read_csv(tmp_path / "lqr_tracking.csv")
        assert len(tracking) == 400


class TestReproducibility:
    @pytest.mark.parametrize(
        "args, names",
        [
            (
                ["depth-sweep", "--L", "2,3", "--N", "60", "--noise-var", "0.1", "--trials", "2"],
                ["depth_sweep_var0.1.csv"],
            ),
            (["singvals", "--L", "2", "--N", "50,100", "--trials", "3"], ["singvals_L2.csv"]),
            (["hw-events", "--L", "2", "--N", "10,100", "--trials", "5"], ["hw_events.csv"]),
            (
                ["lqr", "--L", "5", "--N", "120", "--noise-var", "0.1", "--input-noise-var", "0.1"],
                ["lqr_data.csv", "lqr_deviation.csv", "lqr_tracking.csv", "lqr_summary.csv"],
            ),
        ],
    )
    def test_rerun_is_byte_identical(self, tmp_path, args, names):
        assert _run(args, tmp_path / "a") == 0
        assert _run(args, tmp_path / "b") == 0
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


class TestLogging:
    def test_repeated_runs_do_not_stack_handlers(self, tmp_path):
        root = logging.getLogger()
        assert _run(ROLLOUT_ARGS, tmp_path / "a") == 0
        count = len(root.handlers)
        assert _run(ROLLOUT_ARGS, tmp_path / "b") == 0
        assert len(root.handlers) == count
