# utils/experiment_harness.py
"""Batch protocol: for every item count, draw random entitlement vectors,
build instances, compute shares, find the best allocation, and keep the
worst (minimum) guarantee over all trials."""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

from utils.allocation_algorithms import bag_filling, check_restriction, restricted_greedy, round_robin
from utils.allocation_search import portfolio_best_allocation
from utils.bid_data import BidPool, instance_from_bids
from utils.experiment_models import ExperimentConfig, GeneratorSpec
from utils.fair_instance import INFINITE_RATIO, min_ratio
from utils.instance_generators import generate, random_entitlements
from utils.lp_rounding import lp_allocation
from utils.random_streams import child_seed
from utils.share_solver import (BudgetExhausted, SolverBudget, best_achievable_min_ratio, compute_shares)

logger = logging.getLogger(__name__)

OK = "ok"
BUDGET_EXHAUSTED = "budget-exhausted"
NOT_APPLICABLE = "not-applicable"

LABEL_EXACT = "exact"
LABEL_UPPER = "upper-bound estimate"
LABEL_LOWER = "lower bound"


@dataclass(frozen=True)
class TrialRecord:
    m: int
    trial: int
    status: str
    min_ratio: object  # Fraction, INFINITE_RATIO, or None on failure
    entitlements: tuple
    source: str = ""
    message: str = ""


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    m: int
    min_ratio: object  # None when no trial succeeded
    trials: int
    share_method: str
    wall_ms: int
    ratio_label: str
    failures: int = 0
    details: tuple = ()


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    seed: int
    algorithm: str
    config: dict = field(default_factory=dict)


def ratio_label(share_method: str, lower_bound_search: bool) -> str:
    parts = []
    if share_method != "exact":
        parts.append(LABEL_UPPER)
    if lower_bound_search:
        parts.append(LABEL_LOWER)
    return ", ".join(parts) if parts else LABEL_EXACT


def _trial_instance(config: ExperimentConfig, source, m: int, trial: int, ents: tuple):
    seed = child_seed(config.seed, m, trial)
    if isinstance(source, BidPool):
        return instance_from_bids(source, config.n, m, seed, ents)
    spec = source.model_copy(update={"n": config.n, "m": m, "seed": seed, "entitlements": [str(e) for e in ents]})
    if spec.family in ("counterexample", "example1"):
        spec = source
    return generate(spec)


def _run_trial(config: ExperimentConfig, source, m: int, trial: int) -> TrialRecord:
    ents = random_entitlements(config.n, config.seed, stream=(m, trial))
    instance = _trial_instance(config, source, m, trial, ents)
    ents = instance.entitlements
    budget = SolverBudget(max_states=config.max_states, time_limit=config.time_limit)
    seed = child_seed(config.seed, m, trial, 1)
    try:
        shares = compute_shares(instance, config.share_method, budget, config.heuristic_iterations, seed)
        algo = config.algorithm
        if algo == "existence":
            if config.share_method == "exact" and config.n ** m <= config.max_states:
                ratio, src = best_achievable_min_ratio(instance, shares, budget), "oracle"
            else:
                ratio, _, src = portfolio_best_allocation(instance, shares, config.heuristic_iterations, seed)
        elif algo == "roundrobin":
            ratio, src = min_ratio(instance, round_robin(instance), shares.values), algo
        elif algo == "bagfill":
            if not instance.has_equal_entitlements():
                return TrialRecord(m, trial, NOT_APPLICABLE, None, ents, algo,
                                   "bag filling needs equal entitlements")
            thresholds = [v / 2 for v in shares.values]
            ratio, src = min_ratio(instance, bag_filling(instance, thresholds), shares.values), algo
        elif algo == "restricted":
            if not check_restriction(instance, shares, quiet=True).ok:
                return TrialRecord(m, trial, NOT_APPLICABLE, None, ents, algo, "instance not restricted")
            ratio, src = min_ratio(instance, restricted_greedy(instance, shares), shares.values), algo
        else:
            _, alloc, _ = lp_allocation(instance)
            ratio, src = min_ratio(instance, alloc, shares.values), algo
    except BudgetExhausted as e:
        logger.warning("m=%d trial=%d: %s", m, trial, e)
        return TrialRecord(m, trial, BUDGET_EXHAUSTED, None, ents, "", str(e))
    return TrialRecord(m, trial, OK, ratio, ents, src)


def _run_trial_packed(args):
    return _run_trial(*args)


def _uses_lower_bound_search(config: ExperimentConfig, m: int) -> bool:
    if config.algorithm != "existence":
        return False
    return not (config.share_method == "exact" and config.n ** m <= config.max_states)


def run_experiment(config: ExperimentConfig, source: Union[BidPool, GeneratorSpec]) -> ExperimentReport:
    """One report row per item count: the minimum over trials of the per-trial min ratio.

    Trials are reduced in trial order, so the report does not depend on which
    worker finishes first.
    """
    rows = []
    for m in config.m_values:
        if isinstance(source, BidPool) and m > len(source):
            raise ValueError(f"m={m} exceeds the {len(source)} categories in the bid pool")
        started = time.perf_counter()
        jobs = [(config, source, m, t) for t in range(config.trials)]
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                records = list(pool.map(_run_trial_packed, jobs))
        else:
            records = [_run_trial_packed(job) for job in jobs]
        elapsed = int(round((time.perf_counter() - started) * 1000)) if config.record_timing else 0

        finished = [r.min_ratio for r in records if r.status == OK]
        worst: Optional[object] = min(finished) if finished else None
        failures = sum(1 for r in records if r.status != OK)
        row = ExperimentRow(
            n=config.n,
            m=m,
            min_ratio=worst,
            trials=config.trials,
            share_method=config.share_method,
            wall_ms=elapsed,
            ratio_label=ratio_label(config.share_method, _uses_lower_bound_search(config, m)),
            failures=failures,
            details=tuple(records) if config.detail else (),
        )
        logger.info("n=%d m=%d min_ratio=%s (%s, %d failures)", config.n, m,
                    "n/a" if worst is None else ("inf" if worst == INFINITE_RATIO else float(worst)),
                    row.ratio_label, failures)
        rows.append(row)
    return ExperimentReport(rows=tuple(rows), seed=config.seed, algorithm=config.algorithm,
                            config=config.model_dump())


def row_min_ratio_consistent(row: ExperimentRow) -> bool:
    """The row minimum equals the minimum over its successful detail records."""
    finished = [r.min_ratio for r in row.details if r.status == OK]
    return (min(finished) if finished else None) == row.min_ratio
