import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from polopt.main import main
from polopt.nodes.errors import ConfigError
from polopt.workflows import (
    ALGORITHMS,
    aggregate,
    gridsearch,
    load_config,
    make_rng,
    parse_seeds,
    read_headers,
    read_seed_csv,
    run,
    run_graph,
)
from polopt.workflows.config import grid_points, set_dotted
from polopt.workflows.harness import build_solver, verbose_enabled, worker_count

ENV = {"kind": "random_tabular", "n_states": 5, "n_actions": 3, "gamma": 0.9}


def small_config(**overrides):
    config = {"algorithm": "pmd-exact", "k_max": 6, "seeds": [0, 1, 2], "environment": dict(ENV)}
    config.update(overrides)
    return config


class TestConfig:
    def test_defaults(self):
        config = load_config({})
        assert config["algorithm"] == "pmd-exact"
        assert config["k_max"] == 100
        assert config["seeds"] == [0]
        assert config["record_timing"] is False

    def test_toml_and_json_agree(self, tmp_path):
        toml_path = tmp_path / "run.toml"
        toml_path.write_text(
            'algorithm = "pda-exact"\nk_max = 5\nseeds = [1, 2]\n\n'
            '[environment]\nkind = "random_tabular"\nn_states = 4\n\n'
            '[schedule]\nkind = "linear_beta_const_lambda"\nlam = 1.0\n',
            encoding="utf-8",
        )
        json_path = tmp_path / "run.json"
        json_path.write_text(json.dumps({
            "algorithm": "pda-exact", "k_max": 5, "seeds": [1, 2],
            "environment": {"kind": "random_tabular", "n_states": 4},
            "schedule": {"kind": "linear_beta_const_lambda", "lam": 1.0},
        }), encoding="utf-8")
        assert load_config(toml_path) == load_config(json_path)

    def test_all_violations_reported(self):
        with pytest.raises(ConfigError) as err:
            load_config({"k_max": 0, "environment": {"kind": "lqr"}, "geometry": {"kind": "entropy"},
                         "eval": {"oracle": "exact"}})
        assert len(err.value.violations) == 4

    @pytest.mark.parametrize("overrides", [
        {"algorithm": "sarsa"},
        {"environment": {"kind": "atari"}},
        {"seeds": []},
        {"seeds": [0, "1"]},
        {"algorithm": "pmd-fa", "environment": {"kind": "pendulum"}, "eval": {"features": {"kind": "tabular_one_hot"}}},
        {"algorithm": "pda-fa", "eval": {"features": {"action_encoding": "afterstate"}}},
        {"eval": {"n_samples": 0}},
        {"noise": {"scale": -0.5}},
        {"grid": {"lam": [1.0]}},
        {"grid": {"schedule.lam": []}},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            load_config(overrides)

    def test_parse_seeds(self):
        assert parse_seeds("0..3") == [0, 1, 2, 3]
        assert parse_seeds("1,3,5") == [1, 3, 5]
        assert parse_seeds(" 7 ") == [7]

    def test_set_dotted_copies(self):
        config = {"schedule": {"kind": "constant"}}
        updated = set_dotted(config, "schedule.eta", 0.5)
        assert updated["schedule"] == {"kind": "constant", "eta": 0.5}
        assert config == {"schedule": {"kind": "constant"}}

    def test_grid_points(self):
        config = load_config({"grid": {"schedule.lam": [1.0, 2.0], "eval.n_probes": [4, 8]}})
        points = list(grid_points(config))
        assert len(points) == 4
        point, point_config = points[0]
        assert point == {"eval.n_probes": 4, "schedule.lam": 1.0}
        assert point_config["schedule"]["lam"] == 1.0
        assert "grid" not in point_config


class TestRng:
    def test_streams_are_reproducible(self):
        a = make_rng(3, 1).standard_normal(5)
        b = make_rng(3, 1).standard_normal(5)
        np.testing.assert_array_equal(a, b)
        assert not np.allclose(a, make_rng(3, 2).standard_normal(5))

    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("POLOPT_THREADS", "2")
        assert worker_count(10) == 2
        assert worker_count(1) == 1

    @pytest.mark.parametrize("value, expected", [("1", True), ("on", True), ("TRUE", True), ("0", False), ("", False)])
    def test_verbose_enabled(self, monkeypatch, value, expected):
        monkeypatch.setenv("POLOPT_VERBOSE", value)
        assert verbose_enabled() is expected
        assert verbose_enabled(True) is True


class TestRun:
    def test_files_and_determinism(self, tmp_path):
        first = run(small_config(), out=tmp_path / "a")
        second = run(small_config(), out=tmp_path / "b")
        for name in ("seed_0.csv", "seed_1.csv", "seed_2.csv", "aggregate.csv"):
            assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()
        assert first.final_mean() == second.final_mean()

    def test_thread_count_does_not_change_results(self, tmp_path, monkeypatch):
        monkeypatch.setenv("POLOPT_THREADS", "1")
        run(small_config(), out=tmp_path / "serial")
        monkeypatch.setenv("POLOPT_THREADS", "3")
        run(small_config(), out=tmp_path / "parallel")
        for seed in (0, 1, 2):
            name = f"seed_{seed}.csv"
            assert (tmp_path / "serial" / name).read_text() == (tmp_path / "parallel" / name).read_text()

    def test_seed_file_layout(self, tmp_path):
        run(small_config(seeds=[4]), out=tmp_path)
        path = tmp_path / "seed_4.csv"
        headers = read_headers(path)
        assert json.loads(headers["config"])["algorithm"] == "pmd-exact"
        frame = read_seed_csv(path)
        assert list(frame["iteration"]) == list(range(7))
        assert (frame["seed"] == 4).all()
        assert frame["wall_ms"].isna().all()
        assert frame["gap"].iloc[-1] < frame["gap"].iloc[0]

    def test_aggregate_can_be_recomputed(self, tmp_path):
        result = run(small_config(), out=tmp_path)
        frames = [read_seed_csv(tmp_path / f"seed_{s}.csv") for s in (0, 1, 2)]
        recomputed = aggregate(frames)
        stored = pd.read_csv(tmp_path / "aggregate.csv")
        for column in ("f_hat_mean", "f_hat_sd", "gap_lo", "gap_hi"):
            np.testing.assert_allclose(stored[column], recomputed[column], rtol=1e-12, atol=1e-12)
        assert (stored["f_hat_n"] == 3).all()
        assert result.aggregate is not None

    def test_seed_override(self):
        result = run(small_config(), seeds=[5], write=False)
        assert [r.seed for r in result.seeds] == [5]
        assert result.out_dir is None

    def test_graph_matches_direct_loop(self):
        config = load_config(small_config(algorithm="pda-exact",
                                          schedule={"kind": "linear_beta_const_lambda", "lam": 1.0}))
        direct = build_solver(config, 0).run(6)
        graphed = run_graph(build_solver(config, 0).operator, 6)
        assert len(graphed) == 7
        np.testing.assert_array_equal(graphed.column("f"), direct.column("f"))
        np.testing.assert_array_equal(graphed.column("min_neg_psi")[1:], direct.column("min_neg_psi")[1:])


class TestBaselines:
    def test_policy_iteration_reaches_optimum(self):
        result = run(small_config(algorithm="policy-iteration", k_max=20, seeds=[0]), write=False)
        frame = result.seeds[0].frame
        assert frame["gap"].iloc[-1] < 1e-8
        assert np.all(np.diff(frame["f_hat"].to_numpy()) <= 1e-9)
        assert result.seeds[0].headers["bellman_residual"] < 1e-6

    def test_value_iteration_header(self, tmp_path):
        run(small_config(algorithm="value-iteration", k_max=10, seeds=[0]), out=tmp_path)
        headers = read_headers(tmp_path / "seed_0.csv")
        assert float(headers["bellman_residual"]) < 1e-6
        frame = read_seed_csv(tmp_path / "seed_0.csv")
        assert frame["f_hat"].iloc[0] == 0.0
        assert np.all(np.diff(frame["f_hat"].to_numpy()) >= -1e-12)


class TestGridsearch:
    def test_best_step(self, tmp_path):
        config = small_config(k_max=5, seeds=[0, 1], schedule={"kind": "constant"},
                              grid={"schedule.eta": [0.1, 5.0]})
        best, table = gridsearch(config, out=tmp_path)
        assert best["schedule"]["eta"] == 5.0
        assert list(table["rank"]) == [1, 2]
        assert (tmp_path / "gridsearch.csv").exists()
        assert json.loads((tmp_path / "best_config.json").read_text())["schedule"]["eta"] == 5.0

    def test_ties_prefer_smallest_point(self, tmp_path):
        config = small_config(k_max=3, seeds=[0], grid={"eval.n_probes": [8, 4, 6]})
        best, table = gridsearch(config, out=tmp_path)
        assert best["eval"]["n_probes"] == 4
        assert list(table["eval.n_probes"]) == [4, 6, 8]


class TestCli:
    def test_run(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(small_config(k_max=3)), encoding="utf-8")
        assert main(["run", str(path), "--seeds", "0..1", "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "seed_1.csv").exists()
        assert not (tmp_path / "out" / "seed_2.csv").exists()

    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"algorithm": "sarsa"}), encoding="utf-8")
        assert main(["run", str(path)]) == 2
        assert "algorithm" in capsys.readouterr().err

    def test_schedule_error_exit_code(self, tmp_path):
        path = tmp_path / "bad_schedule.json"
        path.write_text(json.dumps(small_config(algorithm="pda-exact", k_max=3,
                                                schedule={"kind": "geometric", "lam": 0.0})), encoding="utf-8")
        assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 2

    def test_export_gridworld(self, tmp_path):
        out = tmp_path / "grid.json"
        assert main(["export-gridworld", str(out), "--gamma", "0.95"]) == 0
        payload = json.loads(out.read_text())
        assert payload["gamma"] == 0.95

    def test_verbose_from_environment(self, tmp_path, monkeypatch, capsys):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(small_config(k_max=2, seeds=[0])), encoding="utf-8")
        monkeypatch.delenv("POLOPT_VERBOSE", raising=False)
        assert main(["run", str(path), "--out", str(tmp_path / "quiet")]) == 0
        assert "🚀" not in capsys.readouterr().out
        monkeypatch.setenv("POLOPT_VERBOSE", "1")
        assert main(["run", str(path), "--out", str(tmp_path / "loud")]) == 0
        assert "🚀" in capsys.readouterr().out

    def test_return_columns(self, tmp_path):
        config = small_config(algorithm="pda-fa", k_max=2, seeds=[0],
                              schedule={"kind": "linear_beta_const_lambda", "lam": 1.0},
                              eval={"n_samples": 30, "burn_in": 2, "truncation": 15, "score_episodes": 4,
                                    "features": {"n_anchors": 16, "n_frequencies": 32}})
        run(config, out=tmp_path)
        frame = read_seed_csv(tmp_path / "seed_0.csv")
        assert {"f_hat_truncated", "f_hat_bootstrap"} <= set(frame.columns)
        assert frame[["f_hat_truncated", "f_hat_bootstrap"]].notna().all().all()
        assert frame["f_hat_bootstrap"].iloc[0] == frame["f_hat_truncated"].iloc[0]

    def test_unknown_suite(self):
        with pytest.raises(SystemExit):
            main(["verify", "bogus"])


class TestExampleConfigs:
    @pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.toml")),
                             ids=lambda p: p.stem)
    def test_loads(self, path):
        config = load_config(path)
        assert config["algorithm"] in ALGORITHMS
