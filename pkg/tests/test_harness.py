import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from tarbayes import ContractError
from tarbayes.harness import (
    REPLICATION_COLUMNS,
    SUMMARY_FIELDS,
    ExperimentConfig,
    _replication_block,
    emit,
    ks_statistic,
    read_replications,
    run_experiment,
)

SMALL = {
    "model": {"h": "0.5*x", "g": "-0.5*x", "theta_boxes": [[0.1, 0.9]]},
    "noise": {"family": "gaussian", "sigma": 1.0},
    "theta_true": [0.5],
    "n_list": [200, 400],
    "replications": 30,
    "limit_draws": 60,
    "master_seed": 11,
}


@pytest.fixture(scope="module")
def small_summary():
    return run_experiment(ExperimentConfig.from_dict(SMALL))


class TestKs:
    def test_identical(self):
        assert ks_statistic([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0

    def test_disjoint(self):
        assert ks_statistic([0.0], [1.0]) == 1.0

    def test_hand(self):
        assert ks_statistic([1.0, 2.0, 3.0], [1.5, 2.5]) == pytest.approx(1 / 3, abs=1e-15)

    def test_empty(self):
        with pytest.raises(ContractError):
            ks_statistic([], [1.0])

    def test_against_scipy(self, rng):
        a, b = rng.normal(size=300), rng.standard_t(3, size=450)
        assert ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)

    def test_ties(self):
        a, b = [0.0, 0.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]
        assert ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-400, 400), min_size=1, max_size=40),
           st.lists(st.integers(-400, 400), min_size=1, max_size=40))
    def test_monotone_invariance(self, a, b):
        # values on a 1/8 grid so exp stays strictly increasing in floating point
        a, b = np.array(a) / 8.0, np.array(b) / 8.0
        assert ks_statistic(a, b) == ks_statistic(np.exp(a / 10), np.exp(b / 10))
        assert 0 <= ks_statistic(a, b) <= 1


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig.from_dict(SMALL)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize("patch", [
        {"n_list": [400, 200]},
        {"n_list": []},
        {"replications": 0},
        {"theta_true": [0.95]},
        {"theta_true": [0.5, 0.6]},
        {"master_seed": -1},
        {"box_index": 1},
    ])
    def test_rejects(self, patch):
        with pytest.raises(ContractError):
            ExperimentConfig.from_dict({**SMALL, **patch})

    def test_seed_alias(self):
        cfg = dict(SMALL)
        cfg.pop("master_seed")
        assert ExperimentConfig.from_dict({**cfg, "seed": 5}).master_seed == 5


class TestRun:
    def test_shapes(self, small_summary):
        for n in SMALL["n_list"]:
            assert small_summary.bayes[n].shape == (30,) and small_summary.ml[n].shape == (30,)
        assert small_summary.limit_sample.shape == (60,)
        assert {(r["n"], r["p"]) for r in small_summary.moments} == {(200, 1), (400, 1), (200, 2), (400, 2)}

    def test_estimates_in_box(self, small_summary):
        for n in SMALL["n_list"]:
            assert np.all((small_summary.bayes[n] > 0.1) & (small_summary.bayes[n] < 0.9))

    def test_replication_independent_of_batch(self, small_summary):
        cfg = ExperimentConfig.from_dict(SMALL)
        model = cfg.build_model()
        _, bayes, ml = _replication_block(model, cfg.build_prior(model), np.array([0.5]), 0, 400, cfg.burn_in,
                                          11, 17, 18)
        assert bayes[0] == small_summary.bayes[400][17] and ml[0] == small_summary.ml[400][17]

    def test_jobs_invariant(self, small_summary):
        other = run_experiment(ExperimentConfig.from_dict(SMALL), jobs=2)
        for n in SMALL["n_list"]:
            assert np.array_equal(other.bayes[n], small_summary.bayes[n])
        assert np.array_equal(other.limit_sample, small_summary.limit_sample)
        assert other.moments == small_summary.moments

    def test_single_replication(self, tmp_path):
        cfg = {**SMALL, "n_list": [500], "replications": 1, "limit_draws": 5}
        a = emit(run_experiment(ExperimentConfig.from_dict(cfg)), tmp_path / "a")
        b = emit(run_experiment(ExperimentConfig.from_dict(cfg)), tmp_path / "b")
        reps = read_replications(a["replications"])
        assert reps["scaled_err_bayes"].shape == (1,) and reps["scaled_err_ml"].shape == (1,)
        for key in a:
            assert a[key].read_bytes() == b[key].read_bytes()

    def test_refuses_failed_conditions(self):
        cfg = {**SMALL, "model": {"h": "0.5*x", "g": "0.5*x", "theta_boxes": [[0.1, 0.9]]}}
        with pytest.raises(ContractError):
            run_experiment(ExperimentConfig.from_dict(cfg))


class TestEmit:
    def test_files(self, small_summary, tmp_path):
        paths = emit(small_summary, tmp_path / "out")
        header = paths["replications"].read_text().splitlines()[0]
        assert header == ",".join(REPLICATION_COLUMNS)
        reps = read_replications(paths["replications"])
        assert reps["n"].size == 60
        np.testing.assert_array_equal(reps["theta_bayes"][30:], small_summary.bayes[400])
        np.testing.assert_array_equal(reps["scaled_err_bayes"][:30], small_summary.scaled_bayes(200))
        sample = np.loadtxt(paths["limit_sample"])
        np.testing.assert_array_equal(sample, small_summary.limit_sample)
        summary = json.loads(paths["summary"].read_text())
        assert tuple(summary) == SUMMARY_FIELDS
        assert summary["ks_bayes"]["400"] == small_summary.ks_bayes[400]

    def test_unwritable(self, small_summary, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            emit(small_summary, blocker / "sub")
