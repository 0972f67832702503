import json
import math

import numpy as np
import pandas as pd
import pytest

from app.analytic import bias_DL, build_spec
from app.config import Settings
from app.exceptions import ConfigError
from app.models import DEFAULT_BLOCK_SIZE, ExperimentConfig, SpecConfig
from app.simulation import (
    CSV_COLUMNS,
    ExperimentCatalog,
    load_experiment_config,
    rows_to_frame,
    run_bias,
    run_consistency,
    run_experiment,
    run_qmse,
)
from app.simulation import harness
from app.simulation.streams import block_rng, block_sizes


def _config(**overrides) -> ExperimentConfig:
    values = {
        "experiment": "bias",
        "specs": [{"name": "normal", "params": {"theta": 0.7}}],
        "n1": 10,
        "n2": 10,
        "nsim": 1000,
        "seed": 17,
    }
    values.update(overrides)
    return ExperimentConfig.model_validate(values)


def _row(rows, estimator, spec=None):
    return next(r for r in rows if r.estimator == estimator and (spec is None or r.spec == spec))


class TestStreams:
    def test_same_key_same_draws(self):
        a = block_rng(1, 2, 3).random(5)
        b = block_rng(1, 2, 3).random(5)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("key", [(2, 2, 3), (1, 3, 3), (1, 2, 4)])
    def test_different_keys_differ(self, key):
        assert not np.array_equal(block_rng(1, 2, 3).random(5), block_rng(*key).random(5))

    @pytest.mark.parametrize("nsim, size, expected", [(10, 4, [4, 4, 2]), (8, 4, [4, 4]), (3, 10, [3])])
    def test_block_sizes(self, nsim, size, expected):
        assert block_sizes(nsim, size) == expected


class TestBias:
    def test_single_replication(self):
        rows = run_bias(_config(nsim=1), threads=1)
        assert len(rows) == 5
        for row in rows:
            assert row.nsim == 1
            assert row.se == 0.0
            assert math.isfinite(row.mean)
            assert math.isfinite(row.qmse)

    def test_worker_count_does_not_change_results(self):
        config = _config(block_size=250, specs=[
            {"name": "normal", "params": {"theta": 0.7}},
            {"name": "poisson", "params": {"lam1": 1, "lam2": 2}},
        ])
        serial = rows_to_frame(run_bias(config, threads=1))
        parallel = rows_to_frame(run_bias(config, threads=2))
        pd.testing.assert_frame_equal(serial, parallel)

    def test_environment_block_size_does_not_change_results(self, monkeypatch):
        config = _config()
        before = rows_to_frame(run_bias(config, threads=1)).to_csv(index=False)
        monkeypatch.setenv("BLOCK_SIZE", "250")
        monkeypatch.setattr(harness, "settings", Settings(_env_file=None))
        after = rows_to_frame(run_bias(config, threads=1)).to_csv(index=False)
        assert before == after

    def test_block_size_is_recorded_in_config(self):
        coarse = rows_to_frame(run_bias(_config(nsim=600), threads=1))
        again = rows_to_frame(run_bias(_config(nsim=600, block_size=DEFAULT_BLOCK_SIZE), threads=1))
        pd.testing.assert_frame_equal(coarse, again)
        fine = rows_to_frame(run_bias(_config(nsim=600, block_size=100), threads=1))
        assert not coarse["bias"].equals(fine["bias"])

    def test_rows_follow_cell_and_estimator_order(self):
        config = _config(grid={"name": "dmax", "sweep": {"theta": [0.5, 0.7]}}, estimators=["DL", "N"], nsim=10)
        rows = run_bias(config, threads=1)
        assert [(r.spec, r.estimator) for r in rows] == [
            ("normal(theta=0.7)", "DL"), ("normal(theta=0.7)", "N"),
            ("dmax(theta=0.5)", "DL"), ("dmax(theta=0.5)", "N"),
            ("dmax(theta=0.7)", "DL"), ("dmax(theta=0.7)", "N"),
        ]

    def test_invalid_family_parameters_rejected(self):
        with pytest.raises(ConfigError):
            run_bias(_config(specs=[{"name": "normal", "params": {"theta": 0.7, "sd1": -1}}]), threads=1)

    def test_frame_columns(self):
        frame = rows_to_frame(run_bias(_config(nsim=50), threads=1))
        assert list(frame.columns) == CSV_COLUMNS
        assert frame.to_csv(index=False).splitlines()[0] == ",".join(CSV_COLUMNS)

    @pytest.mark.slow
    @pytest.mark.parametrize("spec", [
        {"name": "normal", "params": {"theta": 0.8}},
        {"name": "poisson", "params": {"lam1": 1, "lam2": 3}},
        {"name": "ordinal5", "params": {"a1": 2, "b1": 15, "a2": 6, "b2": 15}},
    ])
    def test_unbiased_and_delong_bias(self, spec):
        rows = run_bias(_config(specs=[spec], nsim=100_000), threads=2)
        n_row = _row(rows, "N")
        assert abs(n_row.bias) < 3 * n_row.se

        dl_row = _row(rows, "DL")
        expected = bias_DL(build_spec(spec["name"], **spec["params"]), 10, 10)
        assert abs(dl_row.bias - expected) < 3 * dl_row.se

    @pytest.mark.slow
    def test_dmax_delong_is_unbiased(self):
        rows = run_bias(_config(specs=[{"name": "dmax", "params": {"theta": 0.5}}], nsim=100_000,
                                estimators=["DL", "THETA"]), threads=2)
        dl_row = _row(rows, "DL")
        assert abs(dl_row.bias) < 3 * dl_row.se
        theta_row = _row(rows, "THETA")
        assert abs(theta_row.bias) < 3 * theta_row.se

    @pytest.mark.slow
    def test_dmax_theta_variance_is_maximal(self):
        # with metric=qmse, se is the SE of the mean squared deviation over sigma_N^2
        config = _config(specs=[{"name": "dmax", "params": {"theta": 0.5}}], nsim=100_000,
                         estimators=["THETA"], metric="qmse")
        theta_row = _row(run_bias(config, threads=2), "THETA")
        sigma_N = float(build_spec("dmax", theta=0.5).ground_truth().sigma_N_sq(10, 10))
        assert sigma_N == pytest.approx(0.025)
        assert abs(theta_row.variance - 0.025) < 3 * theta_row.se * sigma_N


class TestQmse:
    def test_theta_below_range(self):
        with pytest.raises(ConfigError, match="q-MSE range"):
            run_qmse(_config(experiment="qmse", specs=[{"name": "normal", "params": {"theta": 0.3}}]), threads=1)

    def test_single_cell(self):
        config = _config(experiment="qmse", specs=[{"name": "normal", "params": {"theta": 0.5}}],
                         estimators=["N", "DL", "PM", "HM"], nsim=500)
        rows = run_qmse(config, threads=1)
        assert [r.estimator for r in rows] == ["N", "DL", "PM", "HM"]
        for row in rows:
            assert row.qmse == pytest.approx((row.variance + row.bias ** 2) / _sigma_N(row), rel=1e-6)
            assert row.se > 0

    @pytest.mark.slow
    def test_unbiased_estimator_has_smallest_qmse(self):
        catalog = ExperimentCatalog()
        cells = held = 0
        for name in ("qmse_normal", "qmse_exponential", "qmse_ordinal"):
            config = catalog.get(name).model_copy(update={"nsim": 10_000})
            frame = rows_to_frame(run_qmse(config, threads=2))
            table = frame.pivot(index="spec", columns="estimator", values="qmse")
            cells += len(table)
            held += int(((table["N"] <= table["DL"]) & (table["N"] <= table["PM"])).sum())
        assert cells == 23
        assert held >= 0.9 * cells


def _sigma_N(row) -> float:
    return float(build_spec("normal", theta=row.theta).ground_truth().sigma_N_sq(row.n1, row.n2))


class TestConsistency:
    def test_exponential_error_decreases(self):
        spec = SpecConfig(name="exponential", params={"theta": 0.7})
        report = run_consistency(spec, [20, 40, 80], nsim=2000, seed=5, threads=1)
        assert [r.N for r in report.rows] == [20, 40, 80]
        assert [r.n1 for r in report.rows] == [10, 20, 40]
        assert report.monotone
        assert report.rows[-1].l2_error < report.rows[0].l2_error

    def test_degenerate_placement_variance_rejected(self):
        with pytest.raises(ConfigError, match="sigma1"):
            run_consistency(SpecConfig(name="dmax", params={"theta": 0.5}), [20, 40], nsim=10, seed=1, threads=1)

    @pytest.mark.parametrize("sizes", [[20, 21], [2, 20]])
    def test_sizes_must_be_even_and_large_enough(self, sizes):
        with pytest.raises(ConfigError):
            run_consistency(SpecConfig(name="normal", params={"theta": 0.7}), sizes, nsim=10, seed=1, threads=1)

    def test_run_experiment_frame(self):
        config = _config(experiment="consistency", n_sequence=[8, 16], nsim=100)
        frame = run_experiment(config, threads=1)
        assert list(frame["N"]) == [8, 16]
        assert (frame["l2_error"] >= 0).all()

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["normal", "exponential"])
    def test_error_decreases_up_to_160(self, name):
        spec = SpecConfig(name=name, params={"theta": 0.7})
        report = run_consistency(spec, [20, 40, 80, 160], nsim=5000, seed=11, threads=2)
        assert report.monotone
        errors = [r.l2_error for r in report.rows]
        assert errors[-1] < errors[0] / 4

    @pytest.mark.slow
    def test_small_error_at_large_sizes(self):
        spec = SpecConfig(name="exponential", params={"theta": 0.7})
        report = run_consistency(spec, [1600], nsim=1000, seed=11, threads=2)
        assert report.rows[0].n1 == 800
        assert report.rows[0].l2_error < 0.05


class TestExperimentConfigs:
    def test_shipped_configs_load(self):
        catalog = ExperimentCatalog()
        assert len(catalog.names()) >= 11
        for name in catalog.names():
            config = catalog.get(name)
            assert config.expand_specs()
            for spec_config in config.expand_specs():
                build_spec(spec_config.name, **spec_config.params)

    def test_shipped_grids(self):
        catalog = ExperimentCatalog()
        poisson = catalog.get("bias_poisson").expand_specs()
        assert [s.params["lam2"] for s in poisson] == [float(lam) for lam in range(1, 14)]
        assert all(s.params["lam1"] == 1.0 for s in poisson)
        dmax = catalog.get("qmse_dmax")
        assert dmax.experiment == "qmse"
        assert {s.name for s in dmax.expand_specs()} == {"dmax"}

    def test_catalog_lookup(self, tmp_path):
        (tmp_path / "small.json").write_text(json.dumps({"experiment": "bias", "specs": [{"name": "dmax", "params": {"theta": 0.5}}]}))
        catalog = ExperimentCatalog(tmp_path)
        assert catalog.names() == ["small"]
        assert catalog.get("small").n1 == 10
        with pytest.raises(ConfigError, match="unknown experiment"):
            catalog.get("large")

    @pytest.mark.parametrize("content", [
        "{not json",
        json.dumps({"experiment": "bias"}),
        json.dumps({"experiment": "bias", "specs": [{"name": "dmax", "params": {"theta": 0.5}}], "repeats": 3}),
        json.dumps({"experiment": "bias", "specs": [{"name": "dmax", "params": {"theta": 0.5}}], "n1": 1}),
        json.dumps({"experiment": "trend", "specs": [{"name": "dmax", "params": {"theta": 0.5}}]}),
    ])
    def test_invalid_configs(self, tmp_path, content):
        path = tmp_path / "bad.json"
        path.write_text(content)
        with pytest.raises(ConfigError):
            load_experiment_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_experiment_config(tmp_path / "absent.json")

    def test_grid_expansion(self):
        config = _config(grid={"name": "ordinal5", "params": {"a1": 2, "b1": 15, "b2": 15}, "sweep": {"a2": [2, 3, 4]}})
        labels = [s.label for s in config.expand_specs()]
        assert labels[1:] == [
            "ordinal5(a1=2,a2=2,b1=15,b2=15)",
            "ordinal5(a1=2,a2=3,b1=15,b2=15)",
            "ordinal5(a1=2,a2=4,b1=15,b2=15)",
        ]
