"""Linear complementarity: Lemke's method and a complementarity branch-and-bound enumerator.

Both find ``z`` with ``0 <= z  ⊥  q + M z >= 0``.
"""
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from cutplay.solvers import kernels
from cutplay.solvers.lp import EQ, GE, INFEASIBLE, OPTIMAL, LinearProgram, solve_lp

SOLVED = "solved"
NO_SOLUTION = "no-solution-found"
RAY_TERMINATION = "ray-termination"
NUMERIC_FAILURE = "numeric-failure"

REFACTOR_EVERY = 50
FEAS_TOL = 1e-9


@dataclass
class LcpProblem:
    M: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)
        self.q = np.asarray(self.q, dtype=float).ravel()
        if self.M.ndim != 2 or self.M.shape[0] != self.M.shape[1]:
            raise ValueError("LCP matrix must be square")
        if self.M.shape[0] != self.q.size:
            raise ValueError("LCP vector length must match the matrix")
        if not (np.all(np.isfinite(self.M)) and np.all(np.isfinite(self.q))):
            raise ValueError("LCP data must be finite")

    @property
    def dim(self):
        return self.q.size


@dataclass
class LcpOutcome:
    status: str
    z: Optional[np.ndarray] = None
    pivots: int = 0
    message: str = ""

    @property
    def solved(self):
        return self.status == SOLVED


@dataclass
class LcpEnumeration:
    """Result of ``solve_lcp_enumerate``: solutions plus a completeness flag."""

    solutions: list
    complete: bool
    nodes: int

    @property
    def outcomes(self):
        return [LcpOutcome(SOLVED, z=z) for z in self.solutions]


def residual(p: LcpProblem, z) -> float:
    """Largest ``min(z_i, w_i)`` violation, also counting negativity of ``z`` or ``w``."""
    z = np.asarray(z, dtype=float)
    w = p.q + p.M @ z
    return float(max(np.abs(np.minimum(z, w)).max(initial=0.0), 0.0))


def is_solution(p: LcpProblem, z, tol: float = 1e-7) -> bool:
    z = np.asarray(z, dtype=float)
    scale = 1.0 + np.abs(p.q).max(initial=0.0) + np.abs(p.M).max(initial=0.0) * (1.0 + np.abs(z).max(initial=0.0))
    return residual(p, z) <= tol * scale


def solve_lcp_lemke(p: LcpProblem, tol: float = 1e-9, max_pivots: int = 20000, cover=None) -> LcpOutcome:
    """Lemke's complementary pivoting with a lexicographic ratio test.

    ``cover`` is the covering vector (default all ones). Ray termination is
    returned as such; it does not prove the LCP has no solution.
    """
    n = p.dim
    q = p.q
    if n == 0 or q.min() >= 0:
        return LcpOutcome(SOLVED, z=np.zeros(n))
    d = np.ones(n) if cover is None else np.asarray(cover, dtype=float)
    if np.any(d <= 0):
        raise ValueError("covering vector must be positive")
    # columns: w (0..n-1), z (n..2n-1), z0 (2n), rhs (2n+1);  w - M z - d z0 = q
    T = np.zeros((n, 2 * n + 2))
    T[:, :n] = np.eye(n)
    T[:, n:2 * n] = -p.M
    T[:, 2 * n] = -d
    T[:, -1] = q
    T0 = T.copy()
    basis = np.arange(n, dtype=np.int64)
    rhs = 2 * n + 1
    # z0 enters; leaving row is the lexicographic argmin of q_i / d_i over the most negative ratios
    ratios = q / d
    r = _first_lex_min(T, ratios, n)
    entering = 2 * n
    pivots = 0
    while pivots < max_pivots:
        leaving = int(basis[r])
        kernels.pivot(T, r, entering)
        basis[r] = entering
        pivots += 1
        if leaving == 2 * n:
            break
        if pivots % REFACTOR_EVERY == 0 or T[:, rhs].min() < -FEAS_TOL:
            # rebuild the tableau from the original data to stop error build-up
            try:
                T[:, :] = np.linalg.solve(T0[:, basis], T0)
            except np.linalg.LinAlgError:
                return LcpOutcome(NUMERIC_FAILURE, pivots=pivots, message="singular basis")
            if T[:, rhs].min() < -FEAS_TOL * (1.0 + np.abs(q).max()):
                return LcpOutcome(NUMERIC_FAILURE, pivots=pivots, message="basis lost feasibility")
            T[:, rhs] = np.maximum(T[:, rhs], 0.0)
        entering = leaving + n if leaving < n else leaving - n
        r = kernels.lex_min_ratio(T, entering, rhs, 0, n, n, tol)
        if r < 0:
            return LcpOutcome(RAY_TERMINATION, pivots=pivots, message="secondary ray")
    else:
        return LcpOutcome(NUMERIC_FAILURE, pivots=pivots, message="pivot limit")
    if 2 * n in basis:
        return LcpOutcome(NUMERIC_FAILURE, pivots=pivots, message="artificial still basic")
    x = np.zeros(2 * n + 1)
    x[basis] = T[:, -1]
    z = np.maximum(x[n:2 * n], 0.0)
    if not is_solution(p, z):
        return LcpOutcome(NUMERIC_FAILURE, z=z, pivots=pivots, message="residual check failed")
    return LcpOutcome(SOLVED, z=z, pivots=pivots)


def _first_lex_min(T, ratios, n):
    # perturbing q by (eps, eps^2, ...) breaks ties toward the largest index
    cand = np.nonzero(ratios <= ratios.min() + 1e-12)[0]
    return int(cand[-1])


def solve_lcp_enumerate(p: LcpProblem, select=None, tol: float = 1e-9, node_budget: int = 20000,
                        max_solutions: Optional[int] = None, deadline: Optional[float] = None) -> LcpEnumeration:
    """Enumerate LCP solutions by branching on complementary pairs.

    Each node fixes some ``z_i = 0`` or ``w_i = 0`` and solves an LP over
    ``{z >= 0, q + M z >= 0}`` with those fixings, minimising the sum of the
    unfixed ``z_i + w_i``. A complementary LP optimum is recorded as a
    solution and its unfixed pairs are still branched on so other solution
    pieces are reached. When ``select`` is given, solutions are sorted by
    ``select @ z`` (ascending). ``complete`` is False if the node budget ran
    out, the ``time.perf_counter`` ``deadline`` passed, or ``max_solutions``
    stopped the search.
    """
    n = p.dim
    M, q = p.M, p.q
    solutions = []
    # state per index: 0 free, 1 -> z_i = 0, 2 -> w_i = 0
    stack = [np.zeros(n, dtype=np.int8)]
    nodes = 0
    complete = True
    while stack:
        if nodes >= node_budget or (deadline is not None and time.perf_counter() > deadline):
            complete = False
            break
        fix = stack.pop()
        nodes += 1
        status, z = _node_lp(M, q, fix, tol)
        if status != OPTIMAL:
            if status != INFEASIBLE:
                # an unresolved node may hide solutions
                complete = False
            continue
        w = q + M @ z
        scale = 1.0 + np.abs(z).max(initial=0.0) + np.abs(w).max(initial=0.0)
        prod = np.minimum(z, w)
        free = np.nonzero(fix == 0)[0]
        viol = free[prod[free] > 1e-9 * scale]
        if viol.size == 0:
            zc = np.maximum(z, 0.0)
            if is_solution(p, zc) and not any(np.abs(s - zc).max() <= 1e-8 * scale for s in solutions):
                solutions.append(zc)
                if max_solutions is not None and len(solutions) >= max_solutions:
                    complete = not stack
                    break
            if free.size == 0:
                continue
            # keep exploring: branch on the free pair with the smallest index
            j = int(free[0])
        else:
            j = int(viol[np.argmax(prod[viol])])
        a = fix.copy()
        a[j] = 2
        b = fix.copy()
        b[j] = 1
        stack.append(a)
        stack.append(b)
    if select is not None:
        s = np.asarray(select, dtype=float)
        solutions.sort(key=lambda z: float(s @ z))
    return LcpEnumeration(solutions, complete, nodes)


def _node_lp(M, q, fix, tol):
    zfix = fix == 1
    wfix = fix == 2
    free = fix == 0
    # minimise sum over free of z_i + w_i = sum z_i + sum (q_i + M_i z)
    c = free.astype(float) + M[free].sum(axis=0)
    ub = np.where(zfix, 0.0, np.inf)
    rows = [M[~wfix], M[wfix]]
    b = [-q[~wfix], -q[wfix]]
    senses = [GE] * int((~wfix).sum()) + [EQ] * int(wfix.sum())
    lp = LinearProgram(c, np.vstack(rows), np.concatenate(b), senses, 0.0, ub, "min")
    res = solve_lp(lp, tol)
    if res.status != OPTIMAL:
        return res.status, None
    return OPTIMAL, np.maximum(res.x, 0.0)


__all__ = [
    "LcpProblem",
    "LcpOutcome",
    "LcpEnumeration",
    "solve_lcp_lemke",
    "solve_lcp_enumerate",
    "residual",
    "is_solution",
    "SOLVED",
    "NO_SOLUTION",
    "RAY_TERMINATION",
    "NUMERIC_FAILURE",
]
