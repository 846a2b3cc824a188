# utils/stochastic_check.py
"""Monte Carlo checks that near-proportional allocations exist under random
valuations.

Model I  (stochastic agents): each agent's values are i.i.d. from its own
         distribution; witness = proportional-count allocation.
Model II (stochastic items):  each item's values are i.i.d. from the item's
         distribution; witness = rounded LP corner.

A trial succeeds when every agent gets at least factor * e_i * V_i(M), which
implies a (1 - epsilon)-WMMS allocation since WMMS_i <= e_i * V_i(M).
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from scipy.stats import binomtest

from utils.fair_instance import Allocation, Instance, bundle_value, to_fraction
from utils.instance_generators import (
    item_distributions, proportional_count_allocation, proportional_floor_holds,
    stochastic_agents, stochastic_items,
)
from utils.lp_rounding import lp_allocation
from utils.random_streams import child_seed

try:
    from config import CONFIDENCE_LEVEL, ITEM_MIN_MEAN
except ImportError:
    CONFIDENCE_LEVEL = 0.95
    ITEM_MIN_MEAN = 0.2

logger = logging.getLogger(__name__)

MODELS = ("I", "II")


@dataclass(frozen=True)
class StochasticVerification:
    model: str
    n: int
    m: int
    epsilon: Fraction
    threshold_factor: Fraction
    trials: int
    successes: int
    success_rate: Fraction
    ci_low: float
    ci_high: float
    confidence: float

    def to_json_obj(self) -> dict:
        return {
            "model": self.model,
            "n": self.n,
            "m": self.m,
            "epsilon": str(self.epsilon),
            "threshold_factor": str(self.threshold_factor),
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": str(self.success_rate),
            "success_rate_decimal": f"{float(self.success_rate):.6f}",
            "confidence": self.confidence,
            "ci_low": f"{self.ci_low:.6f}",
            "ci_high": f"{self.ci_high:.6f}",
        }


def witness_satisfies(instance: Instance, allocation: Allocation, factor) -> bool:
    """Every agent receives at least factor * e_i * V_i(M)."""
    factor = to_fraction(factor)
    return all(
        bundle_value(instance, i, allocation.bundles[i])
        >= factor * instance.entitlements[i] * instance.total_value(i)
        for i in instance.agents
    )


def floor_counts_hold(instance: Instance, epsilon) -> bool:
    """floor(m e_i) >= m e_i (1 - epsilon) for every agent."""
    return all(proportional_floor_holds(instance.item_count, e, epsilon) for e in instance.entitlements)


def model_one_witness(instance: Instance) -> Allocation:
    return proportional_count_allocation(instance)


def model_two_witness(instance: Instance) -> Allocation:
    return lp_allocation(instance)[1]


def verify_stochastic_model(model: str, n: int, m: int, epsilon, trials: int, seed: int,
                            distributions: Optional[Sequence] = None, entitlements=None,
                            confidence: float = CONFIDENCE_LEVEL,
                            strict_variant: bool = False) -> StochasticVerification:
    """Fraction of trials whose witness gives every agent >= (1 - epsilon) e_i V_i(M).

    Entitlements default to equal shares and stay fixed across trials; only
    valuations are random. `strict_variant` checks the tighter 1 - 3 epsilon
    factor instead.
    """
    model = str(model).upper()
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got '{model}'")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    eps = to_fraction(epsilon)
    if not 0 <= eps < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {eps}")
    factor = 1 - 3 * eps if strict_variant else 1 - eps

    successes = 0
    for t in range(trials):
        trial_seed = child_seed(seed, t)
        if model == "I":
            instance = stochastic_agents(n, m, distributions, trial_seed, entitlements)
            allocation = model_one_witness(instance)
        else:
            dists = distributions or item_distributions(m, trial_seed, ITEM_MIN_MEAN)
            instance = stochastic_items(n, m, dists, trial_seed, entitlements)
            allocation = model_two_witness(instance)
        ok = witness_satisfies(instance, allocation, factor)
        successes += ok
        if not ok:
            logger.debug("model %s trial %d failed (floor counts hold: %s)", model, t,
                         floor_counts_hold(instance, eps))

    ci_low, ci_high = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    rate = Fraction(successes, trials)
    logger.info("model %s n=%d m=%d eps=%s: %d/%d trials succeeded", model, n, m, eps, successes, trials)
    return StochasticVerification(
        model=model, n=n, m=m, epsilon=eps, threshold_factor=factor, trials=trials,
        successes=successes, success_rate=rate, ci_low=float(ci_low), ci_high=float(ci_high),
        confidence=confidence,
    )
