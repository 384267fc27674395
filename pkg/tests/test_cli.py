import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from sbgd.cli import (
    ConfigError,
    ExperimentConfig,
    config_from_mapping,
    emit_trajectory_csv,
    load_config,
    main,
    read_trajectory_csv,
    run_experiment,
    run_sweep,
)
from sbgd.core import SBGDParams
from sbgd.objectives import paper_objective, reference_minimum
from sbgd.solver import run_basic


def write_config(tmp_path, **kw):
    cfg = {"objective": "paper-f", "variant": "basic", "J": 10, "L": 3.0,
           "init": "uniform-random", "seed": 4, "repeats": 1, "out": str(tmp_path / "out")}
    cfg.update(kw)
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


class TestConfig:
    def test_flat_keys(self, tmp_path):
        cfg = load_config(write_config(tmp_path, **{"lambda": 0.3, "sweep.p": [1, 2]}))
        assert cfg.params.lam == 0.3 and cfg.params.L == 3.0
        assert cfg.sweep == {"p": [1, 2]}

    def test_nested_sweep(self):
        cfg = config_from_mapping({"objective": "signal-s", "sweep": {"J": [5, 6]}})
        assert cfg.sweep == {"J": [5, 6]}

    def test_estimate_L(self):
        cfg = config_from_mapping({"objective": "paper-f", "L": "estimate"})
        assert cfg.estimate_L and cfg.params.L is None
        p = cfg.replicate_params(2)
        assert p.seed == 2 and p.L > 0 and not p.L_exact

    @pytest.mark.parametrize("raw, field", [
        ({"objective": "nope"}, "objective"),
        ({}, "objective"),
        ({"objective": "paper-f", "gamma": 1.5}, "params"),
        ({"objective": "paper-f", "colour": 1}, "colour"),
        ({"objective": "paper-f", "L": "guess"}, "L"),
        ({"objective": "paper-f", "repeats": 0}, "repeats"),
        ({"objective": "paper-f", "sweep.q": [1, -2]}, "sweep.q"),
        ({"objective": "paper-f", "sweep.lam": [0.1]}, "sweep.lam"),
    ])
    def test_errors_name_the_field(self, raw, field):
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            config_from_mapping(raw)

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        cfg = config_from_mapping({"objective": "paper-f", "J": 3, "L": 3.0, "out": str(blocker / "sub")})
        with pytest.raises(ConfigError, match="out"):
            run_experiment(cfg)


class TestExperiment:
    def test_replicates_write_files(self, tmp_path):
        cfg = load_config(write_config(tmp_path, repeats=3))
        results = run_experiment(cfg)
        out = tmp_path / "out"
        assert len(list(out.glob("trajectory_*.csv"))) == 3
        assert (out / "summary.csv").exists()
        assert [r.seed for r in results] == [4, 5, 6]

    def test_basic_trajectory_shape(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        (res,) = run_experiment(cfg)
        assert len(res.trajectory) - 1 <= 10 * 10
        assert int(res.trajectory[-1].active.sum()) == 1

    def test_byte_identical_reruns(self, tmp_path):
        path = write_config(tmp_path, repeats=2)
        run_experiment(load_config(path))
        first = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
        run_experiment(load_config(path))
        second = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
        assert first == second

    def test_summary_deviation_matches_csv(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        run_experiment(cfg)
        out = tmp_path / "out"
        with open(out / "summary.csv") as fh:
            (row,) = list(csv.DictReader(fh))
        traj = read_trajectory_csv(next(out.glob("trajectory_*.csv")))
        last = traj["iteration"] == traj["iteration"].max()
        sol = traj["x"][last & (traj["is_heaviest"] == 1)][0]
        oracle = reference_minimum(paper_objective())
        assert float(row["deviation_from_oracle"]) == float(np.linalg.norm(sol - oracle.argmin))
        assert float(row["solution_0"]) == sol[0]


class TestCSV:
    def result(self, J=10, iters=5):
        return run_basic(SBGDParams(J=J, L=3.0, seed=1, max_iterations=iters), paper_objective())

    def test_row_count(self, tmp_path):
        path = emit_trajectory_csv(self.result(), tmp_path / "t.csv")
        rows = path.read_text().splitlines()
        assert len(rows) == 1 + 6 * 10
        assert rows[0] == "iteration,agent_id,active,mass,f_value,x_0,is_minimizer,is_heaviest"

    def test_round_trip(self, tmp_path):
        res = self.result(J=7, iters=4)
        traj = read_trajectory_csv(emit_trajectory_csv(res, tmp_path / "t.csv"))
        pos = np.concatenate([r.positions for r in res.trajectory])
        mass = np.concatenate([r.masses for r in res.trajectory])
        np.testing.assert_array_equal(traj["x"], pos)
        np.testing.assert_array_equal(traj["mass"], mass)
        assert traj["is_minimizer"].sum() == len(res.trajectory)

    def test_initial_record_always_present(self, tmp_path):
        res = run_basic(SBGDParams(J=2, L=3.0, seed=1), paper_objective())
        rows = emit_trajectory_csv(res, tmp_path / "t.csv").read_text().splitlines()
        assert len(rows) >= 1 + 2


class TestSweep:
    def test_product_size_and_order(self, tmp_path):
        cfg = config_from_mapping({"objective": "paper-f", "L": 3.0, "init": "left-cluster",
                                   "sweep.p": [2, 1], "sweep.q": [2, 1], "sweep.J": [20, 10],
                                   "out": str(tmp_path)})
        report = run_sweep(cfg)
        keys = [(r.q, r.J, r.p) for r in report.rows]
        assert len(keys) == 8 and keys == sorted(keys)
        assert (tmp_path / "sweep.csv").exists()

    def test_two_rows(self, tmp_path):
        cfg = config_from_mapping({"objective": "paper-f", "L": 3.0, "sweep.J": [10, 20],
                                   "out": str(tmp_path)})
        report = run_sweep(cfg)
        assert len(report.rows) == 2
        assert all(r.mean_deviation >= r.min_deviation >= 0 for r in report.rows)

    def test_deterministic(self, tmp_path):
        cfg = config_from_mapping({"objective": "paper-f", "L": 3.0, "repeats": 2,
                                   "sweep.J": [6, 8], "out": str(tmp_path)})
        assert run_sweep(cfg).rows == run_sweep(cfg).rows

    def test_left_cluster_improves_with_more_agents(self, tmp_path):
        cfg = config_from_mapping({"objective": "paper-f", "L": 3.0, "init": "left-cluster",
                                   "sweep.J": [10, 20], "out": str(tmp_path)})
        ten, twenty = run_sweep(cfg).rows
        assert twenty.mean_deviation < ten.mean_deviation

    def test_tolerance_needs_few_iterations(self, tmp_path):
        cfg = config_from_mapping({"objective": "paper-f", "variant": "tolerance", "L": 24.0,
                                   "init": "equidistant", "sweep.J": [10, 20, 50, 100, 1000],
                                   "out": str(tmp_path)})
        assert all(r.iterations_mean <= 6 for r in run_sweep(cfg).rows)


class TestMain:
    def test_run(self, tmp_path, capsys):
        assert main(["run", "--config", str(write_config(tmp_path)), "--seed", "9",
                     "--out", str(tmp_path / "o2")]) == 0
        assert "seed=9" in capsys.readouterr().out
        assert (tmp_path / "o2" / "trajectory_000_seed9.csv").exists()

    def test_baseline_forces_variant(self, tmp_path, capsys):
        assert main(["baseline", "--config", str(write_config(tmp_path))]) == 0
        traj = read_trajectory_csv(next((tmp_path / "out").glob("trajectory_*.csv")))
        assert np.all(traj["mass"] == 0.1)

    def test_sweep(self, tmp_path, capsys):
        assert main(["sweep", "--config", str(write_config(tmp_path, **{"sweep.J": [4, 5]}))]) == 0
        assert "mean dev" in capsys.readouterr().out

    def test_oracle(self, capsys):
        assert main(["oracle", "--objective", "paper-f", "--resolution", "1e-3"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert round(out["argmin"][0], 4) == 1.5355

    def test_config_error_exit(self, tmp_path):
        assert main(["run", "--config", str(write_config(tmp_path, gamma=2.0))]) == 2
        assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
        assert main(["oracle", "--objective", "nope"]) == 2
        assert main(["oracle", "--objective", "rastrigin-2", "--resolution", "1e-5"]) == 2

    def test_line_search_failure_exit(self, tmp_path):
        path = write_config(tmp_path, max_shrinks=1, L=1e-6)
        assert main(["run", "--config", str(path)]) == 3

    def test_io_error_exit(self, tmp_path, monkeypatch):
        import sbgd.cli as cli

        def boom(*a, **k):
            raise OSError("disk full")

        monkeypatch.setattr(cli, "emit_trajectory_csv", boom)
        assert main(["run", "--config", str(write_config(tmp_path))]) == 4

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "sbgd", "oracle", "--objective", "quadratic-1",
                               "--resolution", "0.01"], capture_output=True, text=True)
        assert proc.returncode == 0 and "argmin" in proc.stdout
