import numpy as np
import pytest

from conftest import random_scattering

from milac_sim import OptimizerConfig, ScatteringMatrix, SusceptanceMatrix
from milac_sim.errors import InvalidConfig, MalformedFile, NoFiniteRealization
from milac_sim.experiments import (
    SWEEP_HEADER,
    TRACE_HEADER,
    ExperimentConfig,
    load_matrix,
    parse_branch_csv,
    parse_matrix_text,
    rebuild_scattering_from_branch_csv,
    render_matrix_text,
    resolve_threads,
    run_array_sweep,
    run_convergence,
    run_snr_sweep,
    save_matrix,
    synthesize_csv,
)

FAST = OptimizerConfig(inner_iterations=20, max_outer_iterations=60)


def small_cfg(**kw):
    base = dict(k=2, l=4, realizations=2, base_seed=5, optimizer=FAST)
    base.update(kw)
    return ExperimentConfig(**base)


def data_rows(csv_text):
    return [
        line
        for line in csv_text.splitlines()
        if line and not line.startswith("#") and line not in (TRACE_HEADER, SWEEP_HEADER)
    ]


class TestConfigValidation:
    def test_counts_positive(self):
        with pytest.raises(InvalidConfig):
            ExperimentConfig(k=0)
        with pytest.raises(InvalidConfig):
            ExperimentConfig(realizations=0)

    def test_channel_model_checked(self):
        with pytest.raises(InvalidConfig):
            ExperimentConfig(channel_model="rician")

    def test_absolute_budget_needs_watts(self):
        with pytest.raises(InvalidConfig):
            ExperimentConfig(digital_budget_mode="absolute")

    def test_empty_snr_list_rejected_by_commands(self):
        with pytest.raises(InvalidConfig):
            run_convergence(small_cfg(snr_db_list=()))
        with pytest.raises(InvalidConfig):
            run_snr_sweep(small_cfg(snr_db_list=()))

    def test_array_sweep_needs_l_at_least_k(self):
        with pytest.raises(InvalidConfig):
            run_array_sweep(small_cfg(k=4, l_list=(2,), snr_db=10.0))
        with pytest.raises(InvalidConfig):
            run_array_sweep(small_cfg(l_list=()))

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("MILAC_SIM_THREADS", "3")
        assert resolve_threads(10) == 3
        assert resolve_threads(2) == 2
        monkeypatch.setenv("MILAC_SIM_THREADS", "zero")
        with pytest.raises(InvalidConfig):
            resolve_threads(4)
        monkeypatch.setenv("MILAC_SIM_THREADS", "0")
        with pytest.raises(InvalidConfig):
            resolve_threads(4)


class TestConvergenceCommand:
    def test_schema_and_monotonicity(self):
        csv_text = run_convergence(small_cfg(snr_db_list=(0.0, 10.0), realizations=1))
        lines = csv_text.splitlines()
        assert lines[0].startswith("# milac-sim v1 ")
        assert lines[1] == TRACE_HEADER
        traces = [l for l in lines if l.startswith("# trace ")]
        assert len(traces) == 2
        rows = data_rows(csv_text)
        rates = np.array([float(r.split(",")[1]) for r in rows])
        iters = np.array([int(r.split(",")[0]) for r in rows])
        starts = np.where(iters == 0)[0]
        for a, b in zip(starts, list(starts[1:]) + [len(rates)]):
            assert np.all(np.diff(rates[a:b]) >= -1e-7)

    def test_final_relative_change_below_tolerance(self):
        csv_text = run_convergence(small_cfg(snr_db_list=(10.0,), realizations=1))
        rows = data_rows(csv_text)
        last, prev = float(rows[-1].split(",")[1]), float(rows[-2].split(",")[1])
        assert abs(last - prev) <= 1e-4 * max(1.0, prev)

    def test_determinism_across_thread_counts(self, monkeypatch):
        cfg = small_cfg(snr_db_list=(0.0, 10.0))
        monkeypatch.setenv("MILAC_SIM_THREADS", "1")
        first = run_convergence(cfg)
        monkeypatch.setenv("MILAC_SIM_THREADS", "4")
        second = run_convergence(cfg)
        assert first == second


class TestSweepCommands:
    def test_snr_sweep_schema(self):
        csv_text = run_snr_sweep(small_cfg(snr_db_list=(0.0, 10.0)))
        lines = csv_text.splitlines()
        assert lines[1] == SWEEP_HEADER
        rows = data_rows(csv_text)
        assert [float(r.split(",")[0]) for r in rows] == [0.0, 10.0]
        assert all(int(r.split(",")[-1]) == 2 for r in rows)

    def test_orthogonal_sweep_emits_per_realization_gaps(self):
        csv_text = run_snr_sweep(small_cfg(l=6, channel_model="orthogonal", snr_db_list=(10.0,)))
        gap_lines = [l for l in csv_text.splitlines() if l.startswith("# rel_gap ")]
        assert len(gap_lines) == 2  # one per realization
        values = [float(l.split("value=")[1]) for l in gap_lines]
        assert all(v <= 0.02 for v in values)

    def test_array_sweep_schema(self):
        csv_text = run_array_sweep(small_cfg(l_list=(2, 4), snr_db=10.0))
        rows = data_rows(csv_text)
        assert [int(float(r.split(",")[0])) for r in rows] == [2, 4]

    def test_rates_nonnegative_and_ordered(self):
        csv_text = run_snr_sweep(small_cfg(snr_db_list=(0.0, 10.0)))
        for row in data_rows(csv_text):
            cells = row.split(",")
            milac, digital = float(cells[1]), float(cells[2])
            assert milac >= 0.0 and digital >= 0.0
            assert milac <= digital * (1 + 1e-6)


class TestMatrixFiles:
    def test_scattering_round_trip(self, rng, tmp_path):
        theta = random_scattering(rng, 2, 3)
        path = tmp_path / "theta.mat"
        save_matrix(path, theta)
        loaded = load_matrix(path)
        assert isinstance(loaded, ScatteringMatrix)
        assert np.array_equal(loaded.theta, theta.theta)
        assert (loaded.k, loaded.l) == (2, 3)

    def test_susceptance_round_trip(self, rng, tmp_path):
        b = rng.normal(size=(4, 4))
        mat = SusceptanceMatrix((b + b.T) / 2)
        path = tmp_path / "b.mat"
        save_matrix(path, mat)
        loaded = load_matrix(path)
        assert isinstance(loaded, SusceptanceMatrix)
        assert np.array_equal(loaded.b, mat.b)

    def test_malformed_rejected(self):
        with pytest.raises(MalformedFile):
            parse_matrix_text("not a matrix file")
        with pytest.raises(MalformedFile):
            parse_matrix_text("MILAC-MAT v1\nscattering 1 1\n1.0 0.0\n")  # 1 of 4 entries
        with pytest.raises(MalformedFile):
            parse_matrix_text("MILAC-MAT v1\nwhatever 2\n")


class TestSynthesize:
    def test_identity_gives_zero_branches(self):
        theta = ScatteringMatrix(np.eye(4, dtype=complex), k=2, l=2)
        csv_text = synthesize_csv(theta, 50.0)
        branch = parse_branch_csv(csv_text)
        assert np.allclose(branch, 0.0)

    def test_minus_identity_unrealizable(self):
        theta = ScatteringMatrix(-np.eye(4, dtype=complex), k=2, l=2)
        with pytest.raises(NoFiniteRealization):
            synthesize_csv(theta, 50.0)

    def test_round_trip_through_branches(self, rng):
        theta = random_scattering(rng, 2, 4)
        csv_text = synthesize_csv(theta, 50.0)
        rebuilt = rebuild_scattering_from_branch_csv(csv_text, 50.0, k=2)
        assert np.linalg.norm(rebuilt.theta - theta.theta) <= 1e-8 * theta.n
