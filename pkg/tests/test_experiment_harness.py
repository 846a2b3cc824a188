"""
Tests for utils/experiment_harness.py and utils/experiment_models.py.
Run: python3 -m pytest tests/test_experiment_harness.py -v
"""
import os
import sys
from fractions import Fraction

import pytest
from pydantic import ValidationError

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from utils.bid_data import ingest_bids, synthetic_bid_pool
from utils.experiment_harness import (
    BUDGET_EXHAUSTED, LABEL_EXACT, LABEL_LOWER, LABEL_UPPER, NOT_APPLICABLE, OK, ratio_label,
    row_min_ratio_consistent, run_experiment,
)
from utils.experiment_models import ExperimentConfig, GeneratorSpec, load_experiment_config

DATA = os.path.join(os.path.dirname(__file__), '..', 'data')
SMOKE = os.path.join(DATA, 'experiment_smoke.json')


@pytest.fixture(scope="module")
def sample_pool():
    return ingest_bids(os.path.join(DATA, 'bids_sample.csv'))


def _config(**overrides):
    raw = {"n": 2, "m_values": [3, 4], "trials": 4, "seed": 11}
    raw.update(overrides)
    return ExperimentConfig.model_validate(raw)


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

class TestConfig:
    def test_smoke_config_loads(self):
        cfg = load_experiment_config(SMOKE)
        assert cfg.n == 2
        assert cfg.m_values == [2, 3, 4, 5, 6]
        assert cfg.algorithm == "existence"
        assert cfg.detail

    @pytest.mark.parametrize("overrides", [
        {"trials": 0},
        {"m_values": []},
        {"m_values": [3, -1]},
        {"workers": 0},
        {"n": 0},
        {"seed": 2 ** 64},
        {"algorithm": "envy-free"},
        {"share_method": "approx"},
        {"confidence": 1.5},
        {"generator": {"family": "bids", "n": 2, "m": 3}},
        {"generator": {"family": "counterexample", "n": 3, "epsilon": "1/100"}},
        {"generator": {"family": "example1"}, "m_values": [4]},
    ])
    def test_rejects_bad_configs(self, overrides):
        with pytest.raises(ValidationError):
            _config(**overrides)


def test_ratio_labels():
    assert ratio_label("exact", False) == LABEL_EXACT
    assert ratio_label("heuristic", False) == LABEL_UPPER
    assert ratio_label("exact", True) == LABEL_LOWER
    assert ratio_label("heuristic", True) == f"{LABEL_UPPER}, {LABEL_LOWER}"


# ---------------------------------------------------------------------------
# Existence runs
# ---------------------------------------------------------------------------

class TestExistence:
    def test_smoke_run_is_deterministic(self, sample_pool):
        cfg = load_experiment_config(SMOKE)
        first = run_experiment(cfg, sample_pool)
        second = run_experiment(cfg, sample_pool)
        assert first == second
        assert [row.m for row in first.rows] == [2, 3, 4, 5, 6]

    def test_two_agents_keep_half_their_share(self, sample_pool):
        report = run_experiment(load_experiment_config(SMOKE), sample_pool)
        for row in report.rows:
            assert row.ratio_label == LABEL_EXACT
            assert row.failures == 0
            assert row.min_ratio >= Fraction(1, 2)
            assert row_min_ratio_consistent(row)
            assert len(row.details) == row.trials
            assert all(r.status == OK and r.source == "oracle" for r in row.details)

    def test_entitlements_are_recorded(self, sample_pool):
        report = run_experiment(_config(detail=True), sample_pool)
        for rec in report.rows[0].details:
            assert len(rec.entitlements) == 2
            assert sum(rec.entitlements) == 1

    def test_details_off_by_default(self, sample_pool):
        report = run_experiment(_config(), sample_pool)
        assert all(row.details == () for row in report.rows)
        assert all(row.wall_ms == 0 for row in report.rows)

    def test_heuristic_shares_are_labelled(self, sample_pool):
        report = run_experiment(_config(share_method="heuristic", heuristic_iterations=3), sample_pool)
        assert report.rows[0].ratio_label == f"{LABEL_UPPER}, {LABEL_LOWER}"

    def test_large_grids_fall_back_to_search(self):
        pool = synthetic_bid_pool(40, 10, seed=2)
        cfg = _config(n=3, m_values=[12], trials=2, max_states=10 ** 5, detail=True)
        row = run_experiment(cfg, pool).rows[0]
        assert row.ratio_label == LABEL_LOWER
        assert all(r.source != "oracle" for r in row.details if r.status == OK)

    def test_m_larger_than_pool(self):
        pool = synthetic_bid_pool(3, 5, seed=0)
        with pytest.raises(ValueError):
            run_experiment(_config(m_values=[4]), pool)

    def test_workers_give_identical_reports(self, sample_pool):
        one = run_experiment(_config(detail=True), sample_pool)
        two = run_experiment(_config(detail=True, workers=2), sample_pool)
        assert one.rows == two.rows


# ---------------------------------------------------------------------------
# Generator sources
# ---------------------------------------------------------------------------

class TestGeneratorSources:
    def test_counterexample_source(self):
        cfg = _config(n=3, m_values=[5], trials=2,
                      generator={"family": "counterexample", "n": 3, "epsilon": "1/100"})
        row = run_experiment(cfg, cfg.generator).rows[0]
        # only the heavy agent falls short of its share
        assert row.min_ratio == Fraction(1, 3) + Fraction(1, 49)

    def test_stochastic_source(self):
        spec = GeneratorSpec(family="stochastic-agents", distributions=["uniform:0,1"])
        cfg = _config(m_values=[4], trials=3, detail=True)
        row = run_experiment(cfg, spec).rows[0]
        assert row.failures == 0
        assert row.min_ratio >= Fraction(1, 2)
        # trial entitlements flow into the generated instance
        assert len({r.entitlements for r in row.details}) == 3


# ---------------------------------------------------------------------------
# Other algorithms & failures
# ---------------------------------------------------------------------------

class TestAlgorithms:
    @pytest.mark.parametrize("algorithm", ["roundrobin", "lp"])
    def test_runs_and_is_labelled_exact(self, sample_pool, algorithm):
        row = run_experiment(_config(algorithm=algorithm, detail=True), sample_pool).rows[0]
        assert row.ratio_label == LABEL_EXACT
        assert row.failures == 0
        assert all(r.source == algorithm for r in row.details)

    def test_round_robin_meets_one_over_n(self, sample_pool):
        report = run_experiment(_config(algorithm="roundrobin", m_values=[2, 5, 6]), sample_pool)
        assert all(row.min_ratio >= Fraction(1, 2) for row in report.rows)

    def test_bag_filling_needs_equal_entitlements(self, sample_pool):
        row = run_experiment(_config(algorithm="bagfill", detail=True), sample_pool).rows[0]
        assert row.min_ratio is None
        assert row.failures == row.trials
        assert all(r.status == NOT_APPLICABLE for r in row.details)
        assert row_min_ratio_consistent(row)

    def test_budget_failures_are_counted(self):
        spec = GeneratorSpec(family="stochastic-agents")
        cfg = _config(n=3, m_values=[7], trials=5, max_states=1, detail=True)
        row = run_experiment(cfg, spec).rows[0]
        failed = [r for r in row.details if r.status != OK]
        assert row.failures == len(failed) >= 1
        assert all(r.status == BUDGET_EXHAUSTED and r.message for r in failed)
        assert row_min_ratio_consistent(row)

    def test_many_items_record_budget_failures(self):
        spec = GeneratorSpec(family="stochastic-agents")
        cfg = _config(m_values=[1200], trials=1, max_states=2000, detail=True)
        row = run_experiment(cfg, spec).rows[0]
        assert row.failures == 1
        assert row.details[0].status == BUDGET_EXHAUSTED
        assert row.min_ratio is None


# ---------------------------------------------------------------------------
# Desk-scale runs on synthetic uniform bids
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def uniform_pool():
    return synthetic_bid_pool(200, 50, seed=7)


@pytest.mark.slow
def test_two_agents_reach_their_share_at_eight_items(uniform_pool):
    cfg = _config(m_values=list(range(2, 9)), trials=100, seed=7)
    rows = {row.m: row for row in run_experiment(cfg, uniform_pool).rows}
    assert all(row.failures == 0 and row.min_ratio >= Fraction(1, 2) for row in rows.values())
    assert rows[8].min_ratio >= 1


@pytest.mark.slow
def test_two_agent_trend_over_seeds(uniform_pool, record_property):
    per_m = {m: [] for m in (2, 3, 4)}
    for seed in range(20):
        cfg = _config(m_values=[2, 3, 4], trials=50, seed=seed)
        for row in run_experiment(cfg, uniform_pool).rows:
            assert row.failures == 0
            assert row.min_ratio >= Fraction(1, 2)
            per_m[row.m].append(row.min_ratio)
    for m, ratios in per_m.items():
        record_property(f"mean_min_ratio_m{m}", float(sum(ratios) / len(ratios)))


@pytest.mark.slow
def test_ten_agents_with_heuristic_shares(uniform_pool, record_property):
    cfg = _config(n=10, m_values=[100], trials=20, seed=7, share_method="heuristic",
                  heuristic_iterations=3)
    row = run_experiment(cfg, uniform_pool).rows[0]
    record_property("min_ratio_n10_m100", float(row.min_ratio))
    assert row.ratio_label == f"{LABEL_UPPER}, {LABEL_LOWER}"
    assert row.failures == 0
    # round robin alone keeps 1/n of every share
    assert row.min_ratio >= Fraction(1, 10)
