# utils/exact_simplex.py
"""Dense two-phase simplex over Fractions with Bland's rule.

Solves  max c.x  s.t.  A x = b, x >= 0  (b >= 0 after row sign fixes) and
returns a basic solution, so at most len(b) variables are non-zero.
"""
import logging
from fractions import Fraction
from typing import List, Optional, Sequence

logger = logging.getLogger(__name__)


class InfeasibleLP(ValueError):
    pass


class UnboundedLP(ValueError):
    pass


class SimplexTableau:
    """Rows hold [A | b]; the last row is the reduced-cost row [-c | -z]."""

    def __init__(self, A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], basis: List[int]):
        self.rows = [list(r) + [rhs] for r, rhs in zip(A, b)]
        self.basis = list(basis)
        self.width = len(self.rows[0]) - 1 if self.rows else 0
        self.cost = [Fraction(0)] * (self.width + 1)
        self.pivots = 0

    def set_objective(self, c: Sequence[Fraction]) -> None:
        """Load max c.x and price out the current basis."""
        self.cost = [-Fraction(v) for v in c] + [Fraction(0)]
        for r, var in enumerate(self.basis):
            coef = self.cost[var]
            if coef != 0:
                row = self.rows[r]
                self.cost = [cv - coef * rv for cv, rv in zip(self.cost, row)]

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        row = [v / piv for v in row]
        self.rows[r] = row
        for k, other in enumerate(self.rows):
            if k != r and other[col] != 0:
                f = other[col]
                self.rows[k] = [ov - f * rv for ov, rv in zip(other, row)]
        if self.cost[col] != 0:
            f = self.cost[col]
            self.cost = [cv - f * rv for cv, rv in zip(self.cost, row)]
        self.basis[r] = col
        self.pivots += 1

    def bland_step(self, allowed: Optional[set] = None) -> str:
        # entering: lowest-index column with negative reduced cost
        entering = None
        for col in range(self.width):
            if self.cost[col] < 0 and (allowed is None or col in allowed):
                entering = col
                break
        if entering is None:
            return "optimal"
        best = None
        for r, row in enumerate(self.rows):
            if row[entering] > 0:
                key = (row[-1] / row[entering], self.basis[r])
                if best is None or key < best[0]:
                    best = (key, r)
        if best is None:
            return "unbounded"
        self.pivot(best[1], entering)
        return "go_on"

    def run(self, allowed: Optional[set] = None) -> str:
        while True:
            status = self.bland_step(allowed)
            if status != "go_on":
                return status

    def solution(self) -> List[Fraction]:
        x = [Fraction(0)] * self.width
        for r, var in enumerate(self.basis):
            x[var] = self.rows[r][-1]
        return x


def solve_standard_form(A: Sequence[Sequence], b: Sequence, c: Sequence) -> List[Fraction]:
    """Basic optimal solution of max c.x, A x = b, x >= 0 via artificial-variable phase 1."""
    m_rows = len(A)
    width = len(c)
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    for r in range(m_rows):
        if b[r] < 0:
            A[r] = [-v for v in A[r]]
            b[r] = -b[r]

    # artificial column per row
    ext = [row + [Fraction(1) if k == r else Fraction(0) for k in range(m_rows)] for r, row in enumerate(A)]
    tab = SimplexTableau(ext, b, basis=[width + r for r in range(m_rows)])
    tab.set_objective([Fraction(0)] * width + [Fraction(-1)] * m_rows)
    if tab.run() == "unbounded":
        raise InfeasibleLP("phase 1 unbounded")
    if tab.cost[-1] != 0:
        raise InfeasibleLP(f"phase 1 optimum {-tab.cost[-1]} > 0; LP infeasible")

    # drive zero-level artificials out of the basis where possible
    for r, var in enumerate(list(tab.basis)):
        if var >= width:
            for col in range(width):
                if tab.rows[r][col] != 0:
                    tab.pivot(r, col)
                    break

    structural = set(range(width))
    tab.set_objective(list(c) + [Fraction(0)] * m_rows)
    # redundant rows keep an artificial basic at zero; it never re-enters
    if tab.run(allowed=structural) == "unbounded":
        raise UnboundedLP("phase 2 unbounded")
    logger.debug("simplex finished after %d pivots", tab.pivots)
    return tab.solution()[:width]
