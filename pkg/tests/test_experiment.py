import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mdpde.experiment import (
    CSV_HEADER,
    ExperimentConfig,
    read_table,
    replication_seeds,
    run_cell,
    run_experiment,
    run_grid,
)


def small_config(tmp_path, **kw):
    base = dict(n_grid=[100, 200], eps_grid=[0.0, 0.1], alpha_grid=[0.0, 0.3], reps=3,
                base_seed=42, out_dir=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.n_grid == [100, 200, 500, 1000, 2000]
        assert cfg.eps_grid == [0.0, 0.05, 0.10, 0.20]
        assert cfg.alpha_grid == [0.0, 0.1, 0.3, 0.5]
        assert cfg.kappa == 5.0 and cfg.reps == 200
        assert cfg.x0 == [0.0, 0.0]

    @pytest.mark.parametrize("kw", [
        {"n_grid": []}, {"reps": 0}, {"eps_grid": [1.0]}, {"alpha_grid": [-0.1]},
        {"sigma_true": [[1.0, 2.0], [2.0, 1.0]]},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)

    def test_from_toml_and_json(self, tmp_path):
        toml = tmp_path / "c.toml"
        toml.write_text("reps = 7\nkappa = 3.0\nn_grid = [100]\n")
        cfg = ExperimentConfig.from_file(toml, reps=9)
        assert (cfg.reps, cfg.kappa, cfg.n_grid) == (9, 3.0, [100])
        js = tmp_path / "c.json"
        js.write_text(json.dumps({"alpha_grid": [0.5]}))
        assert ExperimentConfig.from_file(js).alpha_grid == [0.5]
        js.write_text(json.dumps({"alpah_grid": [0.5]}))
        with pytest.raises(ValueError):
            ExperimentConfig.from_file(js)


class TestSeeds:
    def test_distinct_streams(self):
        a = replication_seeds(1, 100, 0, 0)
        b = replication_seeds(1, 100, 0, 1)
        draws = {tuple(np.random.default_rng(s).integers(0, 2**63, 2)) for s in (*a, *b)}
        assert len(draws) == 4


class TestRunCell:
    def test_clean_alpha_zero(self):
        cell = run_cell(ExperimentConfig(reps=200), 2000, 0.0, 0.0)
        truth = ExperimentConfig().truth()
        assert cell.failure_count == 0
        assert np.max(np.abs(cell.mean[:4] - truth[:4])) < 0.25
        assert np.max(np.abs(cell.mean[6:] - truth[6:])) < 0.3

    def test_contaminated(self):
        cfg = ExperimentConfig(reps=40)
        truth = cfg.truth()
        plain = run_cell(cfg, 1000, 0.1, 0.0)
        robust = run_cell(cfg, 1000, 0.1, 0.3)
        assert plain.mean[6] > 20
        assert np.max(np.abs(robust.mean[:4] - truth[:4])) < 0.5
        assert np.max(np.abs(robust.mean[6:] - truth[6:])) < 0.6
        assert robust.mean[7] == robust.mean[8]

    def test_shares_paths_with_grid(self, tmp_path):
        cfg = small_config(tmp_path)
        rows = run_grid(cfg, 100, workers=1)
        cell = run_cell(cfg, 100, 0.1, 0.3)
        match = [r for r in rows if r.eps == 0.1 and r.alpha == 0.3][0]
        assert_allclose(cell.mean, match.mean, rtol=0, atol=0)

    def test_eps_must_be_in_grid(self, tmp_path):
        with pytest.raises(ValueError):
            run_cell(small_config(tmp_path), 100, 0.05, 0.0)


class TestRunExperiment:
    def test_files_and_schema(self, tmp_path):
        cfg = small_config(tmp_path)
        written = run_experiment(cfg, workers=1)
        assert [p.rsplit("/", 1)[1] for p in written] == [
            "mdpde_all_n100.csv", "mdpde_all_n200.csv", "run_metadata.json"]
        header, rows = read_table(written[0])
        assert ",".join(header) == CSV_HEADER
        assert len(rows) == 4
        assert [(r["epsilon"], r["alpha"]) for r in rows] == [(0, 0), (0, 0.3), (0.1, 0), (0.1, 0.3)]
        assert all(r["S12"] == r["S21"] for r in rows)
        meta = json.loads(open(written[-1]).read())
        assert meta["config"]["base_seed"] == 42
        assert meta["shared_paths_across_alpha"] is True

    def test_deterministic(self, tmp_path):
        a = run_experiment(small_config(tmp_path, out_dir=str(tmp_path / "a"), reps=1), workers=1)
        b = run_experiment(small_config(tmp_path, out_dir=str(tmp_path / "b"), reps=1), workers=2)
        for pa, pb in zip(a[:-1], b[:-1]):
            assert open(pa, "rb").read() == open(pb, "rb").read()

    def test_degenerate_grid(self, tmp_path):
        cfg = small_config(tmp_path, eps_grid=[0.0], alpha_grid=[0.0], reps=1)
        written = run_experiment(cfg, workers=1)
        for p in written[:-1]:
            assert len(read_table(p)[1]) == 1

    def test_io_error_cleans_up(self, tmp_path, monkeypatch):
        import mdpde.experiment as experiment

        cfg = small_config(tmp_path, reps=1, eps_grid=[0.0], alpha_grid=[0.0])
        real = experiment._write_atomic
        calls = []

        def flaky(target, text):
            calls.append(target)
            if len(calls) == 2:
                raise OSError("disk full")
            real(target, text)

        monkeypatch.setattr(experiment, "_write_atomic", flaky)
        with pytest.raises(OSError):
            run_experiment(cfg, workers=1)
        assert list((tmp_path / "out").iterdir()) == []
