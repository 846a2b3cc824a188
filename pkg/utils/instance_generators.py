# utils/instance_generators.py
"""Instance families: the 1/n impossibility counterexample, the two-agent
worked example, stochastic agent/item value models, random entitlements and
the proportional-count allocation."""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from utils.fair_instance import Allocation, Instance, make_allocation, make_instance, to_fraction
from utils.random_streams import make_rng, quantize

try:
    from config import ITEM_MIN_MEAN
except ImportError:
    ITEM_MIN_MEAN = 0.2

logger = logging.getLogger(__name__)

DISTRIBUTION_KINDS = ("uniform", "point", "empirical")
DEFAULT_DISTRIBUTION = "uniform:0,1"


class GeneratorError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    kind: str
    params: tuple  # Fractions

    def sample(self, rng: np.random.Generator, size: int) -> list:
        if self.kind == "uniform":
            lo, hi = (float(p) for p in self.params)
            return [quantize(x) for x in rng.uniform(lo, hi, size)]
        if self.kind == "point":
            return [self.params[0]] * size
        picks = rng.integers(0, len(self.params), size)
        return [self.params[int(k)] for k in picks]

    @property
    def mean(self) -> Fraction:
        if self.kind == "uniform":
            return (self.params[0] + self.params[1]) / 2
        return sum(self.params, Fraction(0)) / len(self.params)

    def describe(self) -> str:
        sep = "," if self.kind == "uniform" else ";"
        return f"{self.kind}:" + sep.join(str(p) for p in self.params)


def parse_distribution(text) -> Distribution:
    """`uniform:lo,hi`, `point:v` or `empirical:v1;v2;...`, all supported on [0, 1]."""
    if isinstance(text, Distribution):
        return text
    kind, _, body = str(text).partition(":")
    kind = kind.strip().lower()
    if kind not in DISTRIBUTION_KINDS:
        raise GeneratorError(f"unsupported distribution '{text}'; use one of {DISTRIBUTION_KINDS}")
    try:
        if kind == "uniform":
            params = tuple(to_fraction(p) for p in body.split(","))
            if len(params) != 2 or params[0] > params[1]:
                raise GeneratorError(f"uniform needs lo,hi with lo <= hi: '{text}'")
        elif kind == "point":
            params = (to_fraction(body),)
        else:
            params = tuple(to_fraction(p) for p in body.split(";") if p.strip())
            if not params:
                raise GeneratorError(f"empirical distribution has no values: '{text}'")
    except ValueError as e:
        if isinstance(e, GeneratorError):
            raise
        raise GeneratorError(f"bad distribution '{text}': {e}") from None
    if any(p < 0 or p > 1 for p in params):
        raise GeneratorError(f"distribution '{text}' must be supported on [0, 1]")
    return Distribution(kind=kind, params=params)


def _expand(distributions, count: int, what: str) -> list:
    if distributions is None or len(distributions) == 0:
        distributions = [DEFAULT_DISTRIBUTION]
    parsed = [parse_distribution(d) for d in distributions]
    if len(parsed) == 1:
        return parsed * count
    if len(parsed) != count:
        raise GeneratorError(f"need 1 or {count} {what} distributions, got {len(parsed)}")
    return parsed


def _entitlement_vector(n: int, entitlements, seed: int) -> list:
    if entitlements is None or entitlements == "equal":
        return [Fraction(1, n)] * n
    if entitlements == "random":
        return list(random_entitlements(n, seed, stream=(1,)))
    ents = [to_fraction(e) for e in entitlements]
    if len(ents) != n:
        raise GeneratorError(f"expected {n} entitlements, got {len(ents)}")
    return ents


# ---------------------------------------------------------------------------
# Fixed families
# ---------------------------------------------------------------------------

def counterexample(n: int, epsilon) -> Instance:
    """n agents, 2n-1 items; no allocation beats roughly 1/n of WMMS as epsilon -> 0."""
    eps = to_fraction(epsilon)
    if n < 2:
        raise GeneratorError(f"counterexample needs n >= 2, got {n}")
    if not 0 < eps < Fraction(1, n - 1):
        raise GeneratorError(f"epsilon must lie in (0, 1/{n - 1}), got {eps}")
    m = 2 * n - 1
    big = 1 - (n - 1) * eps
    small_row = [eps if j < n - 1 else big if j == n - 1 else Fraction(0) for j in range(m)]
    last_row = [big / n if j < n else eps for j in range(m)]
    return make_instance([small_row] * (n - 1) + [last_row], [eps] * (n - 1) + [big])


def counterexample_ratio_bound(n: int, epsilon) -> Fraction:
    """Upper bound on the best achievable min ratio for counterexample(n, epsilon)."""
    eps = to_fraction(epsilon)
    return (Fraction(1, n) + n * eps) / (1 - (n - 1) * eps)


@dataclass(frozen=True)
class Example1Fixture:
    allocation_a: Allocation  # ({b5}, {b1..b4})
    allocation_a_prime: Allocation  # ({b1, b2}, {b3, b4, b5})
    fairness_a: Fraction
    fairness_a_prime: Fraction
    wmms_agent1: Fraction
    shares: tuple
    agent2_row_is_copy: bool = True


def example1():
    """Two agents, five items valued (4,4,4,3,9), entitlements (1/3, 2/3).

    Agent 2's row is a copy of agent 1's; only agent 1 is pinned down.
    """
    row = [4, 4, 4, 3, 9]
    instance = make_instance([row, row], [Fraction(1, 3), Fraction(2, 3)])
    fixture = Example1Fixture(
        allocation_a=make_allocation(instance, [{4}, {0, 1, 2, 3}]),
        allocation_a_prime=make_allocation(instance, [{0, 1}, {2, 3, 4}]),
        fairness_a=Fraction(15, 16),
        fairness_a_prime=Fraction(1),
        wmms_agent1=Fraction(8),
        shares=(Fraction(8), Fraction(16)),
    )
    return instance, fixture


# ---------------------------------------------------------------------------
# Stochastic families
# ---------------------------------------------------------------------------

def stochastic_agents(n: int, m: int, distributions: Optional[Sequence] = None, seed: int = 0,
                      entitlements=None) -> Instance:
    """Agent i's item values are i.i.d. draws from its own distribution."""
    dists = _expand(distributions, n, "per-agent")
    rows = [dists[i].sample(make_rng(seed, 0, i), m) for i in range(n)]
    return make_instance(rows, _entitlement_vector(n, entitlements, seed))


def stochastic_items(n: int, m: int, distributions: Optional[Sequence] = None, seed: int = 0,
                     entitlements=None) -> Instance:
    """Item j's value to every agent is an i.i.d. draw from that item's distribution."""
    dists = _expand(distributions, m, "per-item")
    columns = [dists[j].sample(make_rng(seed, 1, j), n) for j in range(m)]
    rows = [[columns[j][i] for j in range(m)] for i in range(n)]
    return make_instance(rows, _entitlement_vector(n, entitlements, seed))


def item_distributions(m: int, seed: int, min_mean: float = ITEM_MIN_MEAN) -> list:
    """Per-item uniform(0, h_j) with h_j drawn from [2*min_mean, 1], so every mean is >= min_mean."""
    rng = make_rng(seed, 2)
    lo = 2 * min_mean
    if not 0 < lo <= 1:
        raise GeneratorError(f"min_mean must lie in (0, 1/2], got {min_mean}")
    return [Distribution("uniform", (Fraction(0), max(quantize(h), quantize(lo))))
            for h in rng.uniform(lo, 1.0, m)]


def random_entitlements(n: int, seed: int, stream: Sequence[int] = ()) -> tuple:
    """n uniform(0,1) draws, normalized to sum exactly 1; zero draws are redrawn."""
    if n < 1:
        raise GeneratorError(f"need n >= 1, got {n}")
    rng = make_rng(seed, 3, *stream)
    while True:
        draws = [quantize(x) for x in rng.uniform(0.0, 1.0, n)]
        if all(d > 0 for d in draws):
            break
    total = sum(draws, Fraction(0))
    return tuple(d / total for d in draws)


# ---------------------------------------------------------------------------
# Proportional-count allocation
# ---------------------------------------------------------------------------

def proportional_counts(m: int, entitlements: Sequence[Fraction]) -> list:
    """floor(m e_i) each, leftovers by largest remainder (ties: larger entitlement, then index)."""
    counts = [math.floor(m * e) for e in entitlements]
    leftover = m - sum(counts)
    by_remainder = sorted(range(len(entitlements)),
                          key=lambda i: (-(m * entitlements[i] - counts[i]), -entitlements[i], i))
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def proportional_count_allocation(instance: Instance) -> Allocation:
    counts = proportional_counts(instance.item_count, instance.entitlements)
    order = sorted(instance.agents, key=lambda i: -instance.entitlements[i])
    bundles = [set() for _ in instance.agents]
    nxt = 0
    for i in order:
        bundles[i].update(range(nxt, nxt + counts[i]))
        nxt += counts[i]
    return make_allocation(instance, bundles)


def proportional_floor_holds(m: int, entitlement, epsilon) -> bool:
    """floor(m e) >= m e (1 - epsilon); guaranteed once m > 1/(epsilon e)."""
    e = to_fraction(entitlement)
    eps = to_fraction(epsilon)
    return math.floor(m * e) >= m * e * (1 - eps)


# ---------------------------------------------------------------------------
# Family dispatch
# ---------------------------------------------------------------------------

def generate(spec, pool=None) -> Instance:
    """Build the instance a GeneratorSpec describes; the bids family needs a BidPool."""
    family = spec.family
    if family == "counterexample":
        return counterexample(spec.n, spec.epsilon)
    if family == "example1":
        return example1()[0]
    if family == "stochastic-agents":
        return stochastic_agents(spec.n, spec.m, spec.distributions, spec.seed, spec.entitlements)
    if family == "stochastic-items":
        return stochastic_items(spec.n, spec.m, spec.distributions, spec.seed, spec.entitlements)
    if family == "bids":
        if pool is None:
            raise GeneratorError("the bids family needs a bid pool (--bids FILE)")
        from utils.bid_data import instance_from_bids
        ents = None if spec.entitlements in (None, "equal") else _entitlement_vector(
            spec.n, spec.entitlements, spec.seed)
        return instance_from_bids(pool, spec.n, spec.m, spec.seed, ents)
    raise GeneratorError(f"unknown family '{family}'")
