# utils/share_solver.py
"""Weighted maxmin shares: exact branch-and-bound, brute-force enumeration,
seeded local-search lower bounds, and the best-achievable-ratio oracle."""
import itertools
import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from utils.fair_instance import (
    INFINITE_RATIO, Allocation, Instance, InstanceError, make_allocation, to_fraction,
)
from utils.random_streams import make_rng

try:
    from config import (DEFAULT_HEURISTIC_ITERATIONS, DEFAULT_MAX_STATES, DEFAULT_TIME_LIMIT,
                        LOCAL_SEARCH_MAX_MOVES)
except ImportError:
    DEFAULT_MAX_STATES = 10 ** 7
    DEFAULT_TIME_LIMIT = None
    DEFAULT_HEURISTIC_ITERATIONS = 20
    LOCAL_SEARCH_MAX_MOVES = 10_000

logger = logging.getLogger(__name__)

EXACT = "exact"
HEURISTIC = "heuristic-lower-bound"
_TIME_CHECK_EVERY = 4096


@dataclass(frozen=True)
class SolverBudget:
    max_states: int = DEFAULT_MAX_STATES
    time_limit: Optional[float] = DEFAULT_TIME_LIMIT

    def __post_init__(self):
        if self.max_states < 1:
            raise ValueError(f"max_states must be >= 1, got {self.max_states}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError(f"time_limit must be positive, got {self.time_limit}")


class BudgetExhausted(RuntimeError):
    """The exact search stopped before proving optimality.

    best_value is the best feasible value found (a lower bound), upper_bound
    the bound that was still open.
    """

    def __init__(self, message, best_value=None, best_witness=None, states_explored=0, upper_bound=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_witness = best_witness
        self.states_explored = states_explored
        self.upper_bound = upper_bound


class ShareResult(NamedTuple):
    value: Fraction
    witness: Allocation
    states_explored: int  # restarts for heuristic_share


@dataclass(frozen=True)
class ShareVector:
    values: tuple
    witnesses: Optional[tuple] = None
    method: str = EXACT
    states_explored: Optional[tuple] = None

    def to_json_obj(self) -> dict:
        obj = {"values": [str(v) for v in self.values], "method": self.method}
        if self.witnesses is not None:
            obj["witnesses"] = [w.to_json_obj() for w in self.witnesses]
        return obj


def share_values(shares) -> list:
    """Accept a ShareVector or a plain sequence of numbers."""
    values = shares.values if isinstance(shares, ShareVector) else shares
    return [to_fraction(v) for v in values]


def _check_agent(instance: Instance, agent: int) -> None:
    if not 0 <= agent < instance.agent_count:
        raise InstanceError(f"agent index {agent} out of range for n={instance.agent_count}")


class _Clock:
    """State counter with the budget checks shared by both searches."""

    def __init__(self, budget: SolverBudget, label: str):
        self.budget = budget
        self.label = label
        self.states = 0
        self._start = time.monotonic()

    def tick(self):
        self.states += 1
        if self.states > self.budget.max_states:
            return f"{self.label}: state budget of {self.budget.max_states} exhausted"
        if self.budget.time_limit is not None and self.states % _TIME_CHECK_EVERY == 0:
            if time.monotonic() - self._start > self.budget.time_limit:
                return f"{self.label}: time limit of {self.budget.time_limit}s exhausted"
        return None


class _Stop(Exception):
    pass


def _depth_first(expand, apply, undo) -> None:
    """Iterative depth-first walk over an explicit stack.

    expand(k) visits node k and returns its ordered branches, or None when the
    node is a leaf or pruned. apply(k, b) / undo(k, b) take and revert branch b.
    """
    branches = expand(0)
    stack = [] if branches is None else [[0, branches, 0]]
    while stack:
        frame = stack[-1]
        k, branches, pos = frame
        if pos:
            undo(k, branches[pos - 1])
        if pos == len(branches):
            stack.pop()
            continue
        frame[2] = pos + 1
        apply(k, branches[pos])
        child = expand(k + 1)
        if child is not None:
            stack.append([k + 1, child, 0])


# ---------------------------------------------------------------------------
# Exact WMMS
# ---------------------------------------------------------------------------

def _waterfill(sums: list, ents: Sequence[Fraction], remaining: Fraction) -> Fraction:
    """Best min_j sums_j/e_j reachable if `remaining` value were divisible."""
    levels = sorted(range(len(sums)), key=lambda j: sums[j] / ents[j])
    e_acc = Fraction(0)
    s_acc = Fraction(0)
    level = None
    for pos, j in enumerate(levels):
        e_acc += ents[j]
        s_acc += sums[j]
        level = (remaining + s_acc) / e_acc
        if pos + 1 < len(levels):
            nxt = levels[pos + 1]
            if level <= sums[nxt] / ents[nxt]:
                return level
    return level


def _single_bundle_result(instance: Instance, agent: int, value: Fraction) -> ShareResult:
    bundles = [set() for _ in instance.agents]
    bundles[0] = set(instance.items)
    return ShareResult(value, make_allocation(instance, bundles), 0)


def _greedy_assignment(values: Sequence[Fraction], ents: Sequence[Fraction]) -> list:
    """Give each item (already sorted) to the bundle with the lowest ratio."""
    sums = [Fraction(0)] * len(ents)
    assign = []
    for v in values:
        j = min(range(len(ents)), key=lambda b: (sums[b] / ents[b], b))
        sums[j] += v
        assign.append(j)
    return assign


def wmms_exact(instance: Instance, agent: int, budget: Optional[SolverBudget] = None) -> ShareResult:
    """Exact WMMS_i = max over n-partitions of e_i * min_j V_i(A_j)/e_j, with a witness.

    Depth-first branch-and-bound over item -> bundle assignments, items in
    descending value. Raises BudgetExhausted instead of returning a value it
    could not prove optimal.
    """
    _check_agent(instance, agent)
    budget = budget or SolverBudget()
    n = instance.agent_count
    row = instance.valuations[agent]
    ents = instance.entitlements
    e_i = ents[agent]

    positive = sorted((j for j in instance.items if row[j] > 0), key=lambda j: (-row[j], j))
    zeros = [j for j in instance.items if row[j] == 0]
    if n == 1:
        return _single_bundle_result(instance, agent, instance.total_value(agent))
    if len(positive) < n:
        # some bundle holds no valued item
        return _single_bundle_result(instance, agent, Fraction(0))

    values = [row[j] for j in positive]
    suffix = [Fraction(0)] * (len(values) + 1)
    for k in range(len(values) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + values[k]

    best_assign = _greedy_assignment(values, ents)
    greedy_sums = [Fraction(0)] * n
    for v, j in zip(values, best_assign):
        greedy_sums[j] += v
    best = min(greedy_sums[j] / ents[j] for j in range(n))
    root_bound = suffix[0]  # divisible split puts every bundle at ratio V_i(M)

    clock = _Clock(budget, f"wmms_exact(agent={agent + 1})")
    sums = [Fraction(0)] * n
    assign = [0] * len(values)

    def expand(k: int):
        nonlocal best, best_assign
        msg = clock.tick()
        if msg:
            raise BudgetExhausted(msg, e_i * best, _witness(best_assign), clock.states, e_i * root_bound)
        bound = _waterfill(sums, ents, suffix[k])
        if bound <= best:
            return None
        if k == len(values):
            best, best_assign = bound, list(assign)
            if best >= root_bound:
                raise _Stop()
            return None
        return sorted(range(n), key=lambda b: (sums[b] / ents[b], b))

    def apply(k: int, j: int):
        sums[j] += values[k]
        assign[k] = j

    def undo(k: int, j: int):
        sums[j] -= values[k]

    def _witness(assignment):
        bundles = [set() for _ in range(n)]
        for item, j in zip(positive, assignment):
            bundles[j].add(item)
        bundles[0].update(zeros)
        return make_allocation(instance, bundles)

    if best < root_bound:
        try:
            _depth_first(expand, apply, undo)
        except _Stop:
            pass
    logger.debug("wmms_exact agent=%d value=%s states=%d", agent + 1, e_i * best, clock.states)
    return ShareResult(e_i * best, _witness(best_assign), clock.states)


def wmms_enumerate(instance: Instance, agent: int) -> ShareResult:
    """Reference WMMS by trying all n^m assignment vectors."""
    _check_agent(instance, agent)
    n, m = instance.agent_count, instance.item_count
    row = instance.valuations[agent]
    ents = instance.entitlements
    best, best_vec, count = None, None, 0
    for vec in itertools.product(range(n), repeat=m):
        count += 1
        sums = [Fraction(0)] * n
        for j, b in enumerate(vec):
            sums[b] += row[j]
        ratio = min(sums[b] / ents[b] for b in range(n))
        if best is None or ratio > best:
            best, best_vec = ratio, vec
    bundles = [set() for _ in range(n)]
    for j, b in enumerate(best_vec):
        bundles[b].add(j)
    return ShareResult(ents[agent] * best, make_allocation(instance, bundles), count)


def mms_exact(instance: Instance, agent: int, budget: Optional[SolverBudget] = None) -> Fraction:
    """Classic maxmin share; only defined here for equal entitlements."""
    if not instance.has_equal_entitlements():
        raise InstanceError("mms_exact requires equal entitlements; use wmms_exact")
    return wmms_exact(instance, agent, budget).value


# ---------------------------------------------------------------------------
# Heuristic lower bound
# ---------------------------------------------------------------------------

def _climb(values: np.ndarray, ents: np.ndarray, assign: np.ndarray, tol: float) -> np.ndarray:
    """Hill-climb on single-item relocations and swaps into the worst bundle.

    A move is taken only if it strictly raises the minimum ratio of the two
    bundles it touches, so the sorted ratio vector keeps increasing.
    """
    n = len(ents)
    sums = np.bincount(assign, weights=values, minlength=n).astype(float)
    for _ in range(LOCAL_SEARCH_MAX_MOVES):
        ratios = sums / ents
        w = int(np.argmin(ratios))
        cur = ratios[w]
        outside = assign != w
        best_gain, move = cur + tol, None

        if outside.any():
            src = assign[outside]
            new_w = (sums[w] + values[outside]) / ents[w]
            new_b = (sums[src] - values[outside]) / ents[src]
            gain = np.minimum(new_w, new_b)
            k = int(np.argmax(gain))
            if gain[k] > best_gain:
                best_gain, move = gain[k], ("move", np.flatnonzero(outside)[k], None)

        inside = np.flatnonzero(assign == w)
        others = np.flatnonzero(outside)
        if len(inside) and len(others):
            vp = values[inside][:, None]
            vk = values[others][None, :]
            src = assign[others][None, :]
            new_w = (sums[w] - vp + vk) / ents[w]
            new_b = (sums[src] + vp - vk) / ents[src]
            gain = np.minimum(new_w, new_b)
            flat = int(np.argmax(gain))
            if gain.flat[flat] > best_gain:
                p, k = divmod(flat, len(others))
                best_gain, move = gain.flat[flat], ("swap", inside[p], others[k])

        if move is None:
            break
        kind, a, b = move
        if kind == "move":
            src = assign[a]
            sums[src] -= values[a]
            sums[w] += values[a]
            assign[a] = w
        else:
            src = assign[b]
            sums[w] += values[b] - values[a]
            sums[src] += values[a] - values[b]
            assign[a], assign[b] = src, w
    return assign


def heuristic_share(instance: Instance, agent: int, iterations: int = DEFAULT_HEURISTIC_ITERATIONS,
                    seed: int = 0) -> ShareResult:
    """Seeded local search for a good partition; the value is exact for the partition found."""
    _check_agent(instance, agent)
    if iterations < 1:
        raise ValueError(f"iterations must be positive, got {iterations}")
    n, m = instance.agent_count, instance.item_count
    row = instance.valuations[agent]
    ents = instance.entitlements
    if n == 1 or m == 0:
        return wmms_exact(instance, agent, SolverBudget(max_states=1))

    values = np.array([float(v) for v in row])
    e_float = np.array([float(e) for e in ents])
    e_float = e_float / e_float.sum()
    tol = 1e-12 * max(1.0, float(values.sum()))
    rng = make_rng(seed, agent)

    order = sorted(instance.items, key=lambda j: (-row[j], j))
    greedy = np.zeros(m, dtype=np.int64)
    greedy[order] = _greedy_assignment([row[j] for j in order], ents)

    best_value, best_assign = None, None
    for restart in range(iterations):
        start = greedy.copy() if restart == 0 else rng.choice(n, size=m, p=e_float).astype(np.int64)
        assign = _climb(values, e_float, start, tol)
        sums = [Fraction(0)] * n
        for j in instance.items:
            sums[int(assign[j])] += row[j]
        value = ents[agent] * min(sums[b] / ents[b] for b in range(n))
        if best_value is None or value > best_value:
            best_value, best_assign = value, assign.copy()

    bundles = [set() for _ in range(n)]
    for j in instance.items:
        bundles[int(best_assign[j])].add(j)
    return ShareResult(best_value, make_allocation(instance, bundles), iterations)


def wmms_heuristic_lower_bound(instance: Instance, agent: int,
                               iterations: int = DEFAULT_HEURISTIC_ITERATIONS, seed: int = 0) -> Fraction:
    return heuristic_share(instance, agent, iterations, seed).value


def compute_shares(instance: Instance, method: str = EXACT, budget: Optional[SolverBudget] = None,
                   iterations: int = DEFAULT_HEURISTIC_ITERATIONS, seed: int = 0) -> ShareVector:
    """Shares for every agent, either proven exact or local-search lower bounds."""
    if method not in (EXACT, HEURISTIC, "heuristic"):
        raise ValueError(f"unknown share method '{method}'")
    if method == EXACT:
        results = [wmms_exact(instance, i, budget) for i in instance.agents]
        tag = EXACT
    else:
        results = [heuristic_share(instance, i, iterations, seed) for i in instance.agents]
        tag = HEURISTIC
    return ShareVector(
        values=tuple(r.value for r in results),
        witnesses=tuple(r.witness for r in results),
        method=tag,
        states_explored=tuple(r.states_explored for r in results),
    )


# ---------------------------------------------------------------------------
# Best achievable min ratio (existence oracle)
# ---------------------------------------------------------------------------

def best_allocation_for_shares(instance: Instance, shares, budget: Optional[SolverBudget] = None):
    """(max over complete allocations of min_i V_i(A_i)/share_i, an optimal allocation).

    Agents with a zero share are ignored and receive nothing. Each item only
    branches over positive-share agents that value it, which never loses the
    optimum since values only help.
    """
    budget = budget or SolverBudget()
    shares = share_values(shares)
    if len(shares) != instance.agent_count:
        raise InstanceError(f"expected {instance.agent_count} shares, got {len(shares)}")
    active = [i for i in instance.agents if shares[i] > 0]
    if not active:
        bundles = [set() for _ in instance.agents]
        bundles[0] = set(instance.items)
        return INFINITE_RATIO, make_allocation(instance, bundles)

    vals = instance.valuations
    order = sorted(instance.items,
                   key=lambda j: (-max(vals[i][j] / shares[i] for i in active), j))
    choices = []
    for j in order:
        takers = [i for i in active if vals[i][j] > 0]
        choices.append(takers or [active[0]])
    remaining = {i: [Fraction(0)] * (len(order) + 1) for i in active}
    for i in active:
        for k in range(len(order) - 1, -1, -1):
            remaining[i][k] = remaining[i][k + 1] + vals[i][order[k]]

    held = {i: Fraction(0) for i in active}

    # incumbent: each item to the taker with the lowest current ratio
    assign = []
    for j, takers in zip(order, choices):
        i = min(takers, key=lambda a: (held[a] / shares[a], a))
        held[i] += vals[i][j]
        assign.append(i)
    best = min(held[i] / shares[i] for i in active)
    best_assign = list(assign)
    root_bound = min(remaining[i][0] / shares[i] for i in active)
    held = {i: Fraction(0) for i in active}
    clock = _Clock(budget, "best_achievable_min_ratio")

    def to_allocation(assignment):
        bundles = [set() for _ in instance.agents]
        for j, i in zip(order, assignment):
            bundles[i].add(j)
        return make_allocation(instance, bundles)

    def expand(k: int):
        nonlocal best, best_assign
        msg = clock.tick()
        if msg:
            raise BudgetExhausted(msg, best, to_allocation(best_assign), clock.states, root_bound)
        bound = min((held[i] + remaining[i][k]) / shares[i] for i in active)
        if bound <= best:
            return None
        if k == len(order):
            best, best_assign = bound, list(assign)
            if best >= root_bound:
                raise _Stop()
            return None
        return sorted(choices[k], key=lambda a: (held[a] / shares[a], a))

    def apply(k: int, i: int):
        held[i] += vals[i][order[k]]
        assign[k] = i

    def undo(k: int, i: int):
        held[i] -= vals[i][order[k]]

    if best < root_bound:
        try:
            _depth_first(expand, apply, undo)
        except _Stop:
            pass
    logger.debug("best_achievable_min_ratio=%s states=%d", best, clock.states)
    return best, to_allocation(best_assign)


def best_achievable_min_ratio(instance: Instance, shares, budget: Optional[SolverBudget] = None):
    return best_allocation_for_shares(instance, shares, budget)[0]
