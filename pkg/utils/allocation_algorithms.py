# utils/allocation_algorithms.py
"""Picking-sequence and greedy allocation algorithms with WMMS guarantees.

round_robin        every agent gets >= WMMS_i / n
bag_filling        equal entitlements, thresholds MMS_i / 2
restricted_greedy  >= WMMS_i / 2 when no single item is worth more than WMMS_i
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from utils.fair_instance import Allocation, Instance, InstanceError, make_allocation, to_fraction
from utils.share_solver import SolverBudget, mms_exact, share_values

logger = logging.getLogger(__name__)


class RestrictionViolation(ValueError):
    """Some item is worth more to an agent than that agent's share."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        pairs = ", ".join(f"(agent {i + 1}, item {j + 1})" for i, j in self.violations[:10])
        more = "" if len(self.violations) <= 10 else f" and {len(self.violations) - 10} more"
        super().__init__(f"instance is not restricted: {pairs}{more}")


@dataclass(frozen=True)
class RestrictedInstanceCheck:
    ok: bool
    violations: tuple  # (agent, item) pairs, 0-based


def picking_order(instance: Instance) -> list:
    """Agents by descending entitlement, stable on ties."""
    return sorted(instance.agents, key=lambda i: -instance.entitlements[i])


def _pick_best(row: Sequence[Fraction], available: Iterable[int]) -> int:
    return min(available, key=lambda j: (-row[j], j))


def _deal(instance: Instance, bundles: list, items: Iterable[int]) -> None:
    """Hand `items` out round-robin in picking order, each agent taking its favourite."""
    pool = set(items)
    order = picking_order(instance)
    turn = 0
    while pool:
        agent = order[turn % len(order)]
        j = _pick_best(instance.valuations[agent], pool)
        pool.discard(j)
        bundles[agent].add(j)
        turn += 1


def round_robin(instance: Instance) -> Allocation:
    bundles = [set() for _ in instance.agents]
    _deal(instance, bundles, instance.items)
    return make_allocation(instance, bundles)


def bag_filling(instance: Instance, thresholds: Optional[Sequence] = None, complete: bool = False,
                budget: Optional[SolverBudget] = None) -> Allocation:
    """Fill a bag item by item (ascending index); the first unsatisfied agent it
    satisfies takes it. Default thresholds are MMS_i / 2.

    Thresholds may be float('inf') to model agents that can never be satisfied.
    """
    if thresholds is None:
        if not instance.has_equal_entitlements():
            raise InstanceError("default bag-filling thresholds need equal entitlements; pass thresholds")
        thresholds = [mms_exact(instance, i, budget) / 2 for i in instance.agents]
    thresholds = [t if t == float("inf") else to_fraction(t) for t in thresholds]
    if len(thresholds) != instance.agent_count:
        raise InstanceError(f"expected {instance.agent_count} thresholds, got {len(thresholds)}")

    bundles = [set() for _ in instance.agents]
    unsatisfied = list(instance.agents)
    bag = []
    for j in instance.items:
        if not unsatisfied:
            break
        bag.append(j)
        for i in unsatisfied:
            if sum((instance.valuations[i][b] for b in bag), Fraction(0)) >= thresholds[i]:
                bundles[i].update(bag)
                unsatisfied.remove(i)
                bag = []
                break
    if unsatisfied:
        logger.debug("bag filling left agents %s unsatisfied", [i + 1 for i in unsatisfied])
    if complete:
        _deal(instance, bundles, [j for j in instance.items if not any(j in b for b in bundles)])
    return make_allocation(instance, bundles)


def check_restriction(instance: Instance, shares, quiet: bool = False) -> RestrictedInstanceCheck:
    values = share_values(shares)
    if len(values) != instance.agent_count:
        raise InstanceError(f"expected {instance.agent_count} shares, got {len(values)}")
    violations = tuple(
        (i, j)
        for i in instance.agents
        for j in instance.items
        if instance.valuations[i][j] > values[i]
    )
    if violations and not quiet:
        logger.warning("restriction check: %d item values exceed the owner's share (first: agent %d, item %d)",
                       len(violations), violations[0][0] + 1, violations[0][1] + 1)
    return RestrictedInstanceCheck(ok=not violations, violations=violations)


def restricted_greedy(instance: Instance, shares, complete: bool = False) -> Allocation:
    """Repeatedly give the (unsatisfied agent, item) pair with the largest
    V_i(b_j) * e_i / share_i; an agent is satisfied at share_i / 2.

    Ties go to the lowest agent index, then the lowest item index. Agents with
    a zero share start satisfied. Leftovers stay unassigned unless `complete`,
    in which case they are dealt round-robin after the greedy phase and the
    per-agent upper bound of share_i only covers that phase.
    """
    values = share_values(shares)
    check = check_restriction(instance, values)
    if not check.ok:
        raise RestrictionViolation(check.violations)

    ents = instance.entitlements
    held = [Fraction(0)] * instance.agent_count
    bundles = [set() for _ in instance.agents]
    unsatisfied = [i for i in instance.agents if values[i] > 0]
    weight = {i: ents[i] / values[i] for i in unsatisfied}
    remaining = set(instance.items)

    while unsatisfied and remaining:
        best = None  # (metric, -agent, -item) maximised
        for i in unsatisfied:
            row = instance.valuations[i]
            for j in remaining:
                key = (row[j] * weight[i], -i, -j)
                if best is None or key > best:
                    best = key
        metric, i, j = best[0], -best[1], -best[2]
        if metric == 0:
            break
        bundles[i].add(j)
        remaining.discard(j)
        held[i] += instance.valuations[i][j]
        if held[i] * 2 >= values[i]:
            unsatisfied.remove(i)

    if unsatisfied:
        logger.warning("restricted greedy ended with agents %s below half their share",
                       [i + 1 for i in unsatisfied])
    if complete and remaining:
        _deal(instance, bundles, sorted(remaining))
    return make_allocation(instance, bundles)
