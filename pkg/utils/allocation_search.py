# utils/allocation_search.py
"""Best-allocation search when the exact oracle is out of reach: a portfolio of
the guaranteed algorithms plus local search over allocations. Results are
feasible allocations, so the reported ratio is a lower bound on the optimum."""
import logging
from typing import Optional

import numpy as np

from utils.allocation_algorithms import check_restriction, restricted_greedy, round_robin
from utils.fair_instance import INFINITE_RATIO, Allocation, Instance, make_allocation, min_ratio
from utils.lp_rounding import LP_METHOD, lp_allocation
from utils.random_streams import make_rng
from utils.share_solver import share_values

try:
    from config import DEFAULT_HEURISTIC_ITERATIONS, LOCAL_SEARCH_MAX_MOVES
except ImportError:
    DEFAULT_HEURISTIC_ITERATIONS = 20
    LOCAL_SEARCH_MAX_MOVES = 10_000

logger = logging.getLogger(__name__)


def _ratios(held, shares_f, active, agents):
    return np.where(active[agents], held / shares_f[agents], np.inf)


def _climb_allocation(V: np.ndarray, shares_f: np.ndarray, active: np.ndarray,
                      assign: np.ndarray, tol: float) -> np.ndarray:
    """Relocations and swaps into the worst-off agent, taken only when the
    minimum ratio of the two agents involved strictly rises."""
    n, m = V.shape
    cols = np.arange(m)
    held = np.zeros(n)
    np.add.at(held, assign, V[assign, cols])
    everyone = np.arange(n)
    for _ in range(LOCAL_SEARCH_MAX_MOVES):
        r = _ratios(held, shares_f, active, everyone)
        w = int(np.argmin(r))
        cur = r[w]
        best_gain, move = cur + tol, None

        ks = np.flatnonzero(assign != w)
        if len(ks):
            src = assign[ks]
            new_w = (held[w] + V[w, ks]) / shares_f[w]
            new_b = _ratios(held[src] - V[src, ks], shares_f, active, src)
            gain = np.minimum(new_w, new_b)
            k = int(np.argmax(gain))
            if gain[k] > best_gain:
                best_gain, move = gain[k], ("move", ks[k], None)

        ps = np.flatnonzero(assign == w)
        if len(ps) and len(ks):
            src = assign[ks][None, :]
            new_w = (held[w] - V[w, ps][:, None] + V[w, ks][None, :]) / shares_f[w]
            new_b = _ratios(held[src] + V[src, ps[:, None]] - V[src, ks[None, :]], shares_f, active, src)
            gain = np.minimum(new_w, new_b)
            flat = int(np.argmax(gain))
            if gain.flat[flat] > best_gain:
                p, k = divmod(flat, len(ks))
                best_gain, move = gain.flat[flat], ("swap", ps[p], ks[k])

        if move is None:
            break
        kind, a, b = move
        if kind == "move":
            src = assign[a]
            held[src] -= V[src, a]
            held[w] += V[w, a]
            assign[a] = w
        else:
            src = assign[b]
            held[w] += V[w, b] - V[w, a]
            held[src] += V[src, a] - V[src, b]
            assign[a], assign[b] = src, w
    return assign


def _to_assign(allocation: Allocation, m: int, fallback: int) -> np.ndarray:
    assign = np.full(m, fallback, dtype=np.int64)
    for i, bundle in enumerate(allocation.bundles):
        for j in bundle:
            assign[j] = i
    return assign


def allocation_local_search(instance: Instance, shares, iterations: int = DEFAULT_HEURISTIC_ITERATIONS,
                            seed: int = 0, start: Optional[Allocation] = None):
    """(min ratio, allocation) of the best complete allocation local search finds."""
    values = share_values(shares)
    n, m = instance.agent_count, instance.item_count
    active = np.array([v > 0 for v in values])
    if not active.any() or m == 0:
        alloc = start or round_robin(instance)
        return min_ratio(instance, alloc, values), alloc

    V = np.array([[float(v) for v in row] for row in instance.valuations])
    shares_f = np.array([float(v) if v > 0 else 1.0 for v in values])
    tol = 1e-12 * max(1.0, float(V.max()))
    rng = make_rng(seed, 6)
    first = int(np.flatnonzero(active)[0])
    starts = [start or round_robin(instance)]
    takers = np.flatnonzero(active)

    best_ratio, best_alloc = None, None
    for restart in range(max(1, iterations)):
        if restart < len(starts):
            assign = _to_assign(starts[restart], m, first)
        else:
            assign = takers[rng.integers(0, len(takers), m)].astype(np.int64)
        assign = _climb_allocation(V, shares_f, active, assign, tol)
        bundles = [set() for _ in range(n)]
        for j in range(m):
            bundles[int(assign[j])].add(j)
        alloc = make_allocation(instance, bundles)
        ratio = min_ratio(instance, alloc, values)
        if best_ratio is None or ratio > best_ratio:
            best_ratio, best_alloc = ratio, alloc
    return best_ratio, best_alloc


def portfolio_best_allocation(instance: Instance, shares, iterations: int = DEFAULT_HEURISTIC_ITERATIONS,
                              seed: int = 0, lp_method: str = LP_METHOD):
    """(min ratio, allocation, source) over round robin, restricted greedy (when
    the instance is restricted), LP rounding and local search."""
    values = share_values(shares)
    candidates = [("roundrobin", round_robin(instance))]
    if check_restriction(instance, values, quiet=True).ok:
        candidates.append(("restricted", restricted_greedy(instance, values, complete=True)))
    if instance.item_count:
        _, alloc, _ = lp_allocation(instance, lp_method)
        candidates.append(("lp", alloc))

    scored = [(min_ratio(instance, alloc, values), k, name, alloc) for k, (name, alloc) in enumerate(candidates)]
    best_ratio, _, best_name, best_alloc = max(scored, key=lambda s: (s[0], -s[1]))
    if best_ratio == INFINITE_RATIO:
        return best_ratio, best_alloc, best_name

    ls_ratio, ls_alloc = allocation_local_search(instance, values, iterations, seed, start=best_alloc)
    if ls_ratio > best_ratio:
        best_ratio, best_alloc, best_name = ls_ratio, ls_alloc, "local-search"
    logger.debug("portfolio best=%s via %s", best_ratio, best_name)
    return best_ratio, best_alloc, best_name
