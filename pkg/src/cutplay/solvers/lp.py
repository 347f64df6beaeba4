"""Dense two-phase primal simplex with duals, rays and Farkas certificates."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cutplay.solvers import kernels

LE, EQ, GE = "<=", "==", ">="

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"
NUMERIC_FAILURE = "numeric-failure"
NODE_LIMIT = "node-limit"

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
REFACTOR_ROUNDS = 3
REFACTOR_EVERY = 200


class LPError(ValueError):
    pass


@dataclass
class LinearProgram:
    """``min``/``max`` of ``c @ x`` subject to ``A[i] @ x  senses[i]  b[i]`` and ``lb <= x <= ub``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: list
    lb: np.ndarray
    ub: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.shape[0] != self.b.size or len(self.senses) != self.b.size:
            raise LPError("row count mismatch between A, b and senses")
        self.lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        self.ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        if np.any(self.lb > self.ub):
            raise LPError("variable lower bound exceeds upper bound")
        if self.sense not in ("min", "max"):
            raise LPError(f"unknown sense {self.sense!r}")
        for s in self.senses:
            if s not in (LE, EQ, GE):
                raise LPError(f"unknown row sense {s!r}")

    @property
    def num_vars(self):
        return self.c.size

    @classmethod
    def build(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=0.0, ub=np.inf, sense="min"):
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        blocks, rhs, senses = [], [], []
        if A_ub is not None and len(b_ub):
            blocks.append(np.asarray(A_ub, dtype=float).reshape(-1, n))
            rhs.append(np.asarray(b_ub, dtype=float).ravel())
            senses += [LE] * len(rhs[-1])
        if A_eq is not None and len(b_eq):
            blocks.append(np.asarray(A_eq, dtype=float).reshape(-1, n))
            rhs.append(np.asarray(b_eq, dtype=float).ravel())
            senses += [EQ] * len(rhs[-1])
        A = np.vstack(blocks) if blocks else np.zeros((0, n))
        b = np.concatenate(rhs) if rhs else np.zeros(0)
        return cls(c, A, b, senses, lb, ub, sense)

    def with_bounds(self, lb, ub):
        return LinearProgram(self.c, self.A, self.b, list(self.senses), lb, ub, self.sense)

    def with_rows(self, A, b, senses):
        A = np.asarray(A, dtype=float).reshape(-1, self.num_vars)
        return LinearProgram(
            self.c,
            np.vstack([self.A, A]),
            np.concatenate([self.b, np.asarray(b, dtype=float).ravel()]),
            list(self.senses) + list(senses),
            self.lb,
            self.ub,
            self.sense,
        )

    def with_objective(self, c, sense=None):
        return LinearProgram(c, self.A, self.b, list(self.senses), self.lb, self.ub, sense or self.sense)


@dataclass
class LpOutcome:
    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    duals: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    farkas: Optional[np.ndarray] = None
    iterations: int = 0
    message: str = ""
    pool: list = field(default_factory=list)

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _var_map(lb, ub):
    """Express ``x = offset + D @ xs`` with ``xs >= 0``; also return upper-bound rows."""
    n = lb.size
    cols, offset, bound_rows = [], np.zeros(n), []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    D = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        D[j, k] = s
    return offset, D, bound_rows


def _refactor(T, T0, basis, m, costs) -> bool:
    """Rebuild rows ``0..m-1`` as ``B^-1 T0`` and the objective rows below them from ``costs``."""
    try:
        T[:m] = np.linalg.solve(T0[:, basis], T0)
    except np.linalg.LinAlgError:
        return False
    for k, c in enumerate(costs):
        T[m + k] = c - c[basis] @ T[:m]
    return True


def _run(T, T0, basis, m, obj_row, n_enter, costs, tol, feas_scale, max_iter, bland_after):
    """``simplex_run`` in chunks, refactoring the basis between chunks to stop error build-up."""
    total = 0
    while True:
        chunk = min(REFACTOR_EVERY, max_iter - total)
        st, it, q = kernels.simplex_run(T, basis, obj_row, n_enter, m, tol, tol, chunk, bland_after)
        total += it
        if st != kernels.ITERATION_LIMIT or total >= max_iter:
            return st, total, q
        if not _refactor(T, T0, basis, m, costs) or T[:m, -1].min(initial=0.0) < -feas_scale:
            return NUMERIC_FAILURE, total, -1
        T[:m, -1] = np.maximum(T[:m, -1], 0.0)


def solve_lp(lp: LinearProgram, tol: float = PIVOT_TOL, feas_tol: float = FEAS_TOL, max_iter: int = 50000,
             bland_after: int = 50) -> LpOutcome:
    """Solve ``lp`` by the two-phase primal simplex.

    Optimal outcomes carry row duals ``y`` in the Lagrangian convention
    ``c - A.T @ y`` = reduced costs (so for ``min`` a ``<=`` row has ``y <= 0``).
    Infeasible outcomes carry ``farkas = u`` with ``u >= 0`` on ``<=`` rows,
    ``u <= 0`` on ``>=`` rows, such that ``min_{lb<=x<=ub} u @ A @ x > u @ b``.
    """
    offset, D, bound_rows = _var_map(lp.lb, lp.ub)
    ns = D.shape[1]
    sgn = 1.0 if lp.sense == "min" else -1.0
    cs = sgn * (lp.c @ D)

    m_user = lp.b.size
    m = m_user + len(bound_rows)
    AD = lp.A @ D
    rows = np.zeros((m, ns))
    rhs = np.zeros(m)
    rows[:m_user] = AD
    rhs[:m_user] = lp.b - lp.A @ offset
    slack_sign = np.zeros(m)
    for i, s in enumerate(lp.senses):
        slack_sign[i] = 1.0 if s == LE else (-1.0 if s == GE else 0.0)
    for k, (col, cap) in enumerate(bound_rows):
        rows[m_user + k, col] = 1.0
        rhs[m_user + k] = cap
        slack_sign[m_user + k] = 1.0

    scale = np.abs(rows).max(axis=1) if ns else np.zeros(m)
    scale[scale == 0] = 1.0
    flip = np.where(rhs < 0, -1.0, 1.0)
    factor = flip / scale
    rows = rows * factor[:, None]
    rhs = rhs * factor
    slack_sign = slack_sign * flip

    slack_rows = np.nonzero(slack_sign != 0)[0]
    n_slack = slack_rows.size
    ident = np.full(m, -1, dtype=np.int64)
    art_rows = []
    for k, i in enumerate(slack_rows):
        if slack_sign[i] > 0:
            ident[i] = ns + k
    for i in range(m):
        if ident[i] < 0:
            art_rows.append(i)
    n_struct = ns + n_slack
    n_art = len(art_rows)
    width = n_struct + n_art + 1
    T = np.zeros((m + 2, width))
    T[:m, :ns] = rows
    for k, i in enumerate(slack_rows):
        T[i, ns + k] = slack_sign[i]
    for k, i in enumerate(art_rows):
        T[i, n_struct + k] = 1.0
        ident[i] = n_struct + k
    T[:m, -1] = rhs
    T[m, :ns] = cs
    if n_art:
        art = np.array(art_rows)
        T[m + 1, :n_struct] = -T[art, :n_struct].sum(axis=0)
        T[m + 1, -1] = -T[art, -1].sum()
    basis = ident.copy()
    iters = 0
    T0 = T[:m].copy()
    cost1 = np.zeros(width)
    cost1[n_struct:n_struct + n_art] = 1.0
    cost2 = np.zeros(width)
    cost2[:ns] = cs
    feas_scale = feas_tol * max(1.0, np.abs(rhs).max(initial=0.0))

    if n_art:
        st, it, _ = _run(T, T0, basis, m, m + 1, n_struct + n_art, (cost2, cost1), tol, feas_scale, max_iter,
                         bland_after)
        iters += it
        if st == NUMERIC_FAILURE:
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="phase 1 lost feasibility")
        if st == kernels.ITERATION_LIMIT:
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="phase 1 iteration limit")
        if not _refactor(T, T0, basis, m, (cost2, cost1)):
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="singular basis after phase 1")
        infeas = -T[m + 1, -1]
        if infeas > feas_tol * max(1.0, np.abs(rhs).max(initial=0.0)):
            y_std = cost1[ident] - T[m + 1, ident]
            u = -(y_std * factor)[:m_user]
            return LpOutcome(INFEASIBLE, farkas=u, iterations=iters)
        # drive artificials out of the basis
        for i in range(m):
            if basis[i] >= n_struct:
                row = np.abs(T[i, :n_struct])
                j = int(np.argmax(row)) if n_struct else -1
                if j >= 0 and row[j] > tol:
                    kernels.pivot(T, i, j)
                    basis[i] = j
                    iters += 1

    for _ in range(REFACTOR_ROUNDS):
        st, it, q = _run(T, T0, basis, m, m, n_struct, (cost2,), tol, feas_scale, max_iter, bland_after)
        iters += it
        if st == NUMERIC_FAILURE:
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="phase 2 lost feasibility")
        if st == kernels.ITERATION_LIMIT:
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="phase 2 iteration limit")
        if st == kernels.UNBOUNDED:
            break
        # recompute the final basis from the original rows and re-price; resume if drift hid a better column
        if not _refactor(T, T0, basis, m, (cost2,)):
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="singular final basis")
        if T[:m, -1].min(initial=0.0) < -feas_tol * max(1.0, np.abs(rhs).max(initial=0.0)):
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="final basis is infeasible")
        T[:m, -1] = np.maximum(T[:m, -1], 0.0)
        if T[m, :n_struct].min(initial=0.0) >= -tol:
            break

    xs = np.zeros(width - 1)
    xs[basis] = T[:m, -1]
    if st == kernels.UNBOUNDED:
        d = np.zeros(width - 1)
        d[q] = 1.0
        d[basis] -= T[:m, q]
        ray = D @ d[:ns]
        norm = np.abs(ray).max()
        if norm <= tol:
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message="degenerate unbounded ray")
        ray = ray / norm
        x = offset + D @ np.maximum(xs[:ns], 0.0)
        return LpOutcome(UNBOUNDED, x=x, ray=ray, iterations=iters)

    x = offset + D @ np.maximum(xs[:ns], 0.0)
    y_std = cost2[ident] - T[m, ident]
    y = sgn * (y_std * factor)[:m_user]
    value = float(lp.c @ x)
    out = LpOutcome(OPTIMAL, x=x, value=value, duals=y, iterations=iters)
    if not _primal_ok(lp, x, feas_tol):
        return LpOutcome(NUMERIC_FAILURE, x=x, iterations=iters, message="primal residual too large")
    return out


def _primal_ok(lp, x, feas_tol):
    if lp.b.size:
        ax = lp.A @ x
        scale = 1.0 + np.abs(lp.A).max(axis=1) * (1.0 + np.abs(x).max(initial=0.0)) + np.abs(lp.b)
        viol = np.zeros(lp.b.size)
        for i, s in enumerate(lp.senses):
            if s == LE:
                viol[i] = ax[i] - lp.b[i]
            elif s == GE:
                viol[i] = lp.b[i] - ax[i]
            else:
                viol[i] = abs(ax[i] - lp.b[i])
        if np.any(viol > 100 * feas_tol * scale):
            return False
    return bool(np.all(x >= lp.lb - 100 * feas_tol * (1 + np.abs(lp.lb))) and
                np.all(x <= lp.ub + 100 * feas_tol * (1 + np.abs(lp.ub))))


def dual_value(lp: LinearProgram, y, tol: float = 1e-9) -> float:
    """Dual objective for row duals ``y`` with bound multipliers at their best bounds.

    Reduced costs below ``tol`` (relative to the cost scale) count as zero.
    """
    y = np.asarray(y, dtype=float)
    d = lp.c - lp.A.T @ y
    total = float(lp.b @ y)
    lower_side = d > 0 if lp.sense == "min" else d < 0
    cut = tol * (1.0 + np.abs(lp.c).max(initial=0.0) + np.abs(y).max(initial=0.0))
    for j in range(lp.num_vars):
        if abs(d[j]) <= cut:
            continue
        bound = lp.lb[j] if lower_side[j] else lp.ub[j]
        total += d[j] * bound
    return total


def farkas_ok(lp: LinearProgram, u, tol: float = 1e-7) -> bool:
    """Check an infeasibility certificate returned in ``LpOutcome.farkas``."""
    u = np.asarray(u, dtype=float)
    for ui, s in zip(u, lp.senses):
        if (s == LE and ui < -tol) or (s == GE and ui > tol):
            return False
    g = u @ lp.A
    lo = 0.0
    for j in range(lp.num_vars):
        if g[j] > tol:
            if not np.isfinite(lp.lb[j]):
                return False
            lo += g[j] * lp.lb[j]
        elif g[j] < -tol:
            if not np.isfinite(lp.ub[j]):
                return False
            lo += g[j] * lp.ub[j]
    return lo > float(u @ lp.b) + tol
