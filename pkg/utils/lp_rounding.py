# utils/lp_rounding.py
"""Fractional relaxation of the allocation problem and its rounding.

LP:  sum_j V_i(b_j) f_ij >= V_i(M) e_i   for every agent i
     sum_i f_ij <= 1                      for every item j
     f_ij >= 0

A corner of this polytope has a support graph (agents + items, an edge where
f_ij > 0) in which every component is a tree or has exactly one cycle.
Rounding over that graph costs each agent at most one item.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

import networkx as nx

from utils.exact_simplex import solve_standard_form
from utils.fair_instance import Allocation, Instance, make_allocation

try:
    from config import LP_METHOD, SIMPLEX_MAX_VARIABLES
except ImportError:
    LP_METHOD = "auto"
    SIMPLEX_MAX_VARIABLES = 48

logger = logging.getLogger(__name__)

LP_METHODS = ("auto", "simplex", "pivot")
TREE = "tree"
UNICYCLIC = "unicyclic"


class NotBasicError(ValueError):
    """Support graph has a component with more edges than vertices."""


@dataclass(frozen=True)
class FractionalAssignment:
    weights: tuple  # n rows of m Fractions in [0, 1]
    basic: bool

    def nonzero_count(self) -> int:
        return sum(1 for row in self.weights for w in row if w != 0)

    def column_sums(self) -> list:
        if not self.weights:
            return []
        return [sum(col, Fraction(0)) for col in zip(*self.weights)]

    def row_values(self, instance: Instance) -> list:
        return [sum((v * f for v, f in zip(vals, row)), Fraction(0))
                for vals, row in zip(instance.valuations, self.weights)]


@dataclass(frozen=True)
class SupportComponent:
    agents: tuple
    items: tuple
    edges: tuple
    kind: str  # TREE or UNICYCLIC


@dataclass(frozen=True)
class SupportGraph:
    edges: tuple  # (("agent", i), ("item", j)) pairs
    components: tuple
    graph: nx.Graph


@dataclass(frozen=True)
class BoundCertificate:
    agent: int
    proportional_share: Fraction
    max_item: Fraction
    fractional_value: Fraction
    received: Fraction

    @property
    def holds(self) -> bool:
        return self.received >= self.proportional_share - self.max_item

    def to_json_obj(self) -> dict:
        return {
            "agent": self.agent + 1,
            "proportional_share": str(self.proportional_share),
            "max_item": str(self.max_item),
            "fractional_value": str(self.fractional_value),
            "received": str(self.received),
            "holds": self.holds,
        }


def _agent(i: int) -> tuple:
    return ("agent", i)


def _item(j: int) -> tuple:
    return ("item", j)


def _support_nx(edge_keys) -> nx.Graph:
    g = nx.Graph()
    g.add_edges_from((_agent(i), _item(j)) for i, j in edge_keys)
    return g


def _is_pseudoforest(g: nx.Graph) -> bool:
    return all(g.subgraph(c).number_of_edges() <= len(c) for c in nx.connected_components(g))


def _to_assignment(instance: Instance, f: Dict[Tuple[int, int], Fraction]) -> FractionalAssignment:
    weights = tuple(
        tuple(f.get((i, j), Fraction(0)) for j in instance.items)
        for i in instance.agents
    )
    live = [k for k, w in f.items() if w != 0]
    return FractionalAssignment(weights=weights, basic=_is_pseudoforest(_support_nx(live)))


# ---------------------------------------------------------------------------
# Dense simplex route
# ---------------------------------------------------------------------------

def _solve_simplex(instance: Instance) -> Dict[Tuple[int, int], Fraction]:
    n, m = instance.agent_count, instance.item_count
    nf = n * m
    width = nf + m + n  # f, item slacks, agent surpluses
    A, b = [], []
    for j in instance.items:
        row = [Fraction(0)] * width
        for i in instance.agents:
            row[i * m + j] = Fraction(1)
        row[nf + j] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    for i in instance.agents:
        row = [Fraction(0)] * width
        for j in instance.items:
            row[i * m + j] = instance.valuations[i][j]
        row[nf + m + i] = Fraction(-1)
        A.append(row)
        b.append(instance.total_value(i) * instance.entitlements[i])
    c = [Fraction(0)] * width
    for i in instance.agents:
        total = instance.total_value(i)
        if total > 0:
            for j in instance.items:
                c[i * m + j] = instance.valuations[i][j] / total
    x = solve_standard_form(A, b, c)
    return {(i, j): x[i * m + j] for i in instance.agents for j in instance.items if x[i * m + j] != 0}


# ---------------------------------------------------------------------------
# Support pivoting route
# ---------------------------------------------------------------------------

def _null_vector(rows: list, ncols: int) -> list:
    """A non-zero x with rows . x = 0; requires ncols > rank(rows)."""
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        if r == len(M):
            break
        pr = next((k for k in range(r, len(M)) if M[k][c] != 0), None)
        if pr is None:
            continue
        M[r], M[pr] = M[pr], M[r]
        pv = M[r][c]
        M[r] = [x / pv for x in M[r]]
        for k in range(len(M)):
            if k != r and M[k][c] != 0:
                fk = M[k][c]
                M[k] = [a - fk * bb for a, bb in zip(M[k], M[r])]
        pivots.append(c)
        r += 1
    free = next(c for c in range(ncols) if c not in pivots)
    x = [Fraction(0)] * ncols
    x[free] = Fraction(1)
    for row_idx, c in enumerate(pivots):
        x[c] = -M[row_idx][free]
    return x


def _step(f: dict, direction: dict) -> int:
    """Move f along a sum-preserving direction until some weight hits zero."""
    if all(d >= 0 for d in direction.values()):
        direction = {k: -d for k, d in direction.items()}
    t = min(f[k] / -d for k, d in direction.items() if d < 0)
    dropped = 0
    for k, d in direction.items():
        if d != 0:
            f[k] += t * d
            if f[k] == 0:
                del f[k]
                dropped += 1
    return dropped


def _reduce_pairs(instance: Instance, f: dict) -> int:
    """While two agents share three items, shift weight between them along the
    null direction of their 2x3 value block."""
    steps = 0
    vals = instance.valuations
    for a in instance.agents:
        for a2 in range(a + 1, instance.agent_count):
            live = [j for j in instance.items if (a, j) in f and (a2, j) in f]
            while len(live) >= 3:
                trio = live[:3]
                y = _null_vector([[vals[a][j] for j in trio], [vals[a2][j] for j in trio]], 3)
                direction = {}
                for j, yj in zip(trio, y):
                    direction[(a, j)] = yj
                    direction[(a2, j)] = -yj
                _step(f, direction)
                steps += 1
                live = [j for j in live if (a, j) in f and (a2, j) in f]
    return steps


def _cycle_edges(cycle: list) -> set:
    return {frozenset((cycle[k], cycle[(k + 1) % len(cycle)])) for k in range(len(cycle))}


def _dependent_edges(g: nx.Graph) -> Optional[list]:
    """Edges of a connected subgraph with more edges than vertices, or None."""
    core = nx.k_core(g, 2)
    for comp in sorted(nx.connected_components(core), key=lambda c: min(c)):
        sub = core.subgraph(comp)
        if sub.number_of_edges() <= len(comp):
            continue
        cycles = nx.cycle_basis(sub, root=min(comp))
        c1, c2 = cycles[0], cycles[1]
        edges = _cycle_edges(c1) | _cycle_edges(c2)
        if not set(c1) & set(c2):
            dist, paths = nx.multi_source_dijkstra(sub, set(c1))
            target = min((node for node in c2), key=lambda node: (dist[node], node))
            path = paths[target]
            edges |= {frozenset((path[k], path[k + 1])) for k in range(len(path) - 1)}
        out = []
        for e in edges:
            u, v = sorted(e)
            out.append((u[1], v[1]) if u[0] == "agent" else (v[1], u[1]))
        return sorted(out)
    return None


def _reduce_cycles(instance: Instance, f: dict) -> int:
    steps = 0
    vals = instance.valuations
    while True:
        edges = _dependent_edges(_support_nx(f.keys()))
        if edges is None:
            return steps
        nodes = sorted({_agent(i) for i, _ in edges} | {_item(j) for _, j in edges})
        rows = []
        for kind, idx in nodes:
            if kind == "agent":
                rows.append([vals[i][j] if i == idx else Fraction(0) for i, j in edges])
            else:
                rows.append([Fraction(1) if j == idx else Fraction(0) for i, j in edges])
        x = _null_vector(rows, len(edges))
        _step(f, dict(zip(edges, x)))
        steps += 1


def _pivot_to_corner(instance: Instance) -> Dict[Tuple[int, int], Fraction]:
    """Start at f_ij = e_i (feasible: item sums are 1, agent rows are V_i(M) e_i)
    and pivot every agent and item sum constant until the support is a pseudoforest."""
    f = {(i, j): instance.entitlements[i] for i in instance.agents for j in instance.items}
    pair_steps = _reduce_pairs(instance, f)
    cycle_steps = _reduce_cycles(instance, f)
    logger.debug("pivoted to corner: %d pair steps, %d cycle steps, %d non-zeros",
                 pair_steps, cycle_steps, len(f))
    return f


def build_and_solve_lp(instance: Instance, method: str = LP_METHOD) -> FractionalAssignment:
    """A basic feasible solution of the relaxation (exact rationals)."""
    if method not in LP_METHODS:
        raise ValueError(f"unknown LP method '{method}'; choose one of {LP_METHODS}")
    if instance.item_count == 0:
        return FractionalAssignment(weights=tuple(() for _ in instance.agents), basic=True)
    if method == "auto":
        small = instance.agent_count * instance.item_count <= SIMPLEX_MAX_VARIABLES
        method = "simplex" if small else "pivot"
    f = _solve_simplex(instance) if method == "simplex" else _pivot_to_corner(instance)
    assignment = _to_assignment(instance, f)
    logger.debug("LP(%s) n=%d m=%d non-zeros=%d basic=%s", method, instance.agent_count,
                 instance.item_count, assignment.nonzero_count(), assignment.basic)
    return assignment


# ---------------------------------------------------------------------------
# Support graph & rounding
# ---------------------------------------------------------------------------

def build_support_graph(assignment: FractionalAssignment) -> SupportGraph:
    edge_keys = [(i, j) for i, row in enumerate(assignment.weights) for j, w in enumerate(row) if w != 0]
    g = _support_nx(edge_keys)
    components = []
    for comp in sorted(nx.connected_components(g), key=lambda c: min(c)):
        sub = g.subgraph(comp)
        n_edges = sub.number_of_edges()
        if n_edges > len(comp):
            raise NotBasicError(
                f"support component with {len(comp)} vertices has {n_edges} edges; assignment is not basic")
        components.append(SupportComponent(
            agents=tuple(sorted(idx for kind, idx in comp if kind == "agent")),
            items=tuple(sorted(idx for kind, idx in comp if kind == "item")),
            edges=tuple(sorted((u[1], v[1]) if u[0] == "agent" else (v[1], u[1]) for u, v in sub.edges())),
            kind=UNICYCLIC if n_edges == len(comp) else TREE,
        ))
    return SupportGraph(edges=tuple((_agent(i), _item(j)) for i, j in sorted(edge_keys)),
                        components=tuple(components), graph=g)


def _assign_down(tree: nx.Graph, root: tuple, bundles: list) -> None:
    """Each item goes to its parent agent when the tree hangs from `root`."""
    for node, parent in nx.bfs_predecessors(tree, root):
        if node[0] == "item":
            bundles[parent[1]].add(node[1])


def round_assignment(instance: Instance, assignment: FractionalAssignment) -> Allocation:
    """Integral allocation where each agent keeps all but at most one of its
    fractional items, so V_i(A_i) >= sum_j V_i(b_j) f_ij - M_i."""
    graph = build_support_graph(assignment)
    bundles = [set() for _ in instance.agents]
    for comp in graph.components:
        nodes = [_agent(i) for i in comp.agents] + [_item(j) for j in comp.items]
        sub = graph.graph.subgraph(nodes)
        if comp.kind == TREE:
            _assign_down(sub, _agent(comp.agents[0]), bundles)
            continue
        cycle = nx.find_cycle(sub, source=_agent(comp.agents[0]))
        cycle_nodes = {u for u, _ in cycle}
        pivot_item = min(idx for kind, idx in cycle_nodes if kind == "item")
        ends = sorted(
            {v for u, v in cycle if u == _item(pivot_item)} | {u for u, v in cycle if v == _item(pivot_item)}
        )
        a, b = ends[0][1], ends[1][1]
        va, vb = instance.valuations[a][pivot_item], instance.valuations[b][pivot_item]
        taker, other = (a, b) if va >= vb else (b, a)
        bundles[taker].add(pivot_item)
        logger.debug("cycle broken: item %d -> agent %d", pivot_item + 1, taker + 1)

        rest = nx.Graph(sub)
        rest.remove_node(_item(pivot_item))
        neighbours = set(sub.neighbors(_item(pivot_item)))
        for piece in nx.connected_components(rest):
            if _agent(other) in piece:
                root = _agent(other)
            else:
                root = min(piece & neighbours)
            _assign_down(rest.subgraph(piece), root, bundles)
    return make_allocation(instance, bundles)


def bound_certificate(instance: Instance, assignment: FractionalAssignment,
                      allocation: Allocation) -> tuple:
    fractional = assignment.row_values(instance)
    certs = []
    for i in instance.agents:
        received = sum((instance.valuations[i][j] for j in allocation.bundles[i]), Fraction(0))
        certs.append(BoundCertificate(
            agent=i,
            proportional_share=instance.total_value(i) * instance.entitlements[i],
            max_item=instance.max_item_value(i),
            fractional_value=fractional[i],
            received=received,
        ))
    return tuple(certs)


def lp_allocation(instance: Instance, method: str = LP_METHOD):
    """(assignment, allocation, certificates) in one call."""
    assignment = build_and_solve_lp(instance, method)
    allocation = round_assignment(instance, assignment)
    return assignment, allocation, bound_certificate(instance, assignment, allocation)
