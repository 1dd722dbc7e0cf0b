import json

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import random_scattering

from milac_sim import ScatteringMatrix
from milac_sim.cli import main
from milac_sim.experiments import (
    SWEEP_HEADER,
    TRACE_HEADER,
    rebuild_scattering_from_branch_csv,
    save_matrix,
)


@pytest.fixture
def runner():
    return CliRunner()


FAST = ["--tol", "1e-4", "--inner-iters", "20", "--max-outer", "60"]


def run_cli(runner, args, env=None):
    return runner.invoke(main, args, env=env, catch_exceptions=False)


class TestConvergenceCommand:
    def test_writes_csv(self, runner, tmp_path):
        out = tmp_path / "trace.csv"
        result = run_cli(
            runner,
            ["convergence", "--k", "2", "--l", "4", "--snr-db-list", "0,10",
             "--realizations", "1", "--seed", "7", "--out", str(out), *FAST],
        )
        assert result.exit_code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# milac-sim v1 ")
        assert lines[1] == TRACE_HEADER
        config = json.loads(lines[0].split("# milac-sim v1 ", 1)[1])["config"]
        assert config["base_seed"] == 7 and config["k"] == 2

    def test_byte_identical_across_threads(self, runner, tmp_path):
        args = ["convergence", "--k", "2", "--l", "4", "--snr-db-list", "10",
                "--realizations", "2", "--seed", "3", *FAST]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(runner, args + ["--out", str(out1)], env={"MILAC_SIM_THREADS": "1"}).exit_code == 0
        assert run_cli(runner, args + ["--out", str(out2)], env={"MILAC_SIM_THREADS": "4"}).exit_code == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestSweepCommands:
    def test_snr_sweep(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        result = run_cli(
            runner,
            ["snr-sweep", "--k", "2", "--l", "4", "--snr-db-list", "0,10",
             "--realizations", "1", "--digital-budget", "quarter", "--out", str(out), *FAST],
        )
        assert result.exit_code == 0
        assert out.read_text().splitlines()[1] == SWEEP_HEADER

    def test_array_sweep_with_absolute_budget(self, runner, tmp_path):
        out = tmp_path / "arr.csv"
        result = run_cli(
            runner,
            ["array-sweep", "--k", "2", "--l-list", "2,4", "--snr-db", "10",
             "--realizations", "1", "--digital-budget", "absolute:2.5", "--out", str(out), *FAST],
        )
        assert result.exit_code == 0
        rows = [l for l in out.read_text().splitlines() if l and not l.startswith("#")][1:]
        assert [int(float(r.split(",")[0])) for r in rows] == [2, 4]

    def test_invalid_config_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["array-sweep", "--k", "4", "--l-list", "2", "--realizations", "1",
             "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 2

    def test_bad_budget_flag_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["snr-sweep", "--digital-budget", "half", "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 2

    def test_variant_flag_accepted(self, runner, tmp_path):
        out = tmp_path / "v.csv"
        result = run_cli(
            runner,
            ["convergence", "--k", "1", "--l", "2", "--snr-db-list", "0",
             "--realizations", "1", "--variant", "literal", "--out", str(out), *FAST],
        )
        assert result.exit_code == 0
        config = json.loads(out.read_text().splitlines()[0].split("# milac-sim v1 ", 1)[1])
        assert config["config"]["optimizer"]["surrogate_variant"] == "paper_literal"


class TestSynthesizeCommand:
    def test_round_trip(self, runner, tmp_path, rng):
        theta = random_scattering(rng, 2, 2)
        mat_path = tmp_path / "theta.mat"
        save_matrix(mat_path, theta)
        out = tmp_path / "branches.csv"
        result = run_cli(runner, ["synthesize", str(mat_path), "--z0", "50", "--out", str(out)])
        assert result.exit_code == 0
        rebuilt = rebuild_scattering_from_branch_csv(out.read_text(), 50.0, k=2)
        assert np.linalg.norm(rebuilt.theta - theta.theta) <= 1e-8 * theta.n

    def test_unrealizable_exits_3(self, runner, tmp_path):
        theta = ScatteringMatrix(-np.eye(4, dtype=complex), k=2, l=2)
        mat_path = tmp_path / "minus_i.mat"
        save_matrix(mat_path, theta)
        result = runner.invoke(
            main, ["synthesize", str(mat_path), "--out", str(tmp_path / "y.csv")]
        )
        assert result.exit_code == 3

    def test_missing_file_exits_1(self, runner, tmp_path):
        result = runner.invoke(
            main, ["synthesize", str(tmp_path / "nope.mat"), "--out", str(tmp_path / "z.csv")]
        )
        assert result.exit_code == 1
