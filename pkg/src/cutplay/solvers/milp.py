"""Best-first branch-and-bound over ``solve_lp``."""
import heapq
import math

import numpy as np

from cutplay.solvers.lp import (
    INFEASIBLE,
    NODE_LIMIT,
    NUMERIC_FAILURE,
    OPTIMAL,
    PIVOT_TOL,
    UNBOUNDED,
    LinearProgram,
    LpOutcome,
    solve_lp,
)

INT_TOL = 1e-6


def solve_milp(lp: LinearProgram, int_idx, tol: float = PIVOT_TOL, node_limit: int = 100000,
               pool_size: int = 0) -> LpOutcome:
    """Maximise/minimise ``lp`` with ``x[j]`` integral for ``j in int_idx``.

    With ``pool_size > 0`` the outcome's ``pool`` keeps up to that many
    distinct integral-feasible points met during the search, best first.
    An unbounded relaxation is reported as unbounded only once an integral
    feasible point is known (it then comes back in ``x``).
    """
    int_idx = sorted(int(j) for j in int_idx)
    if not int_idx:
        return solve_lp(lp, tol)
    sgn = 1.0 if lp.sense == "min" else -1.0
    lb0 = lp.lb.copy()
    ub0 = lp.ub.copy()
    for j in int_idx:
        lb0[j] = math.ceil(lb0[j] - INT_TOL) if np.isfinite(lb0[j]) else lb0[j]
        ub0[j] = math.floor(ub0[j] + INT_TOL) if np.isfinite(ub0[j]) else ub0[j]
    if np.any(lb0 > ub0):
        return LpOutcome(INFEASIBLE, message="empty integer bounds")

    incumbent = None
    best = math.inf
    pool = []
    iters = 0
    counter = 0
    heap = [(-math.inf, counter, lb0, ub0)]
    nodes = 0
    unbounded_ray = None
    while heap:
        bound, _, lb, ub = heapq.heappop(heap)
        if bound >= best - _gap(best):
            continue
        nodes += 1
        if nodes > node_limit:
            return LpOutcome(NODE_LIMIT, x=incumbent, value=None if incumbent is None else sgn * best,
                             iterations=iters, pool=pool, message="branch-and-bound node limit")
        res = solve_lp(lp.with_bounds(lb, ub), tol)
        iters += res.iterations
        if res.status == INFEASIBLE:
            continue
        if res.status == NUMERIC_FAILURE:
            return LpOutcome(NUMERIC_FAILURE, iterations=iters, message=res.message)
        if res.status == UNBOUNDED:
            unbounded_ray = res.ray
            break
        val = sgn * res.value
        if val >= best - _gap(best):
            continue
        x = res.x
        frac = np.abs(x[int_idx] - np.round(x[int_idx]))
        if frac.max() <= INT_TOL:
            x = x.copy()
            x[int_idx] = np.round(x[int_idx])
            val = sgn * float(lp.c @ x)
            if pool_size:
                _pool_add(pool, x, val, pool_size)
            if val < best:
                best, incumbent = val, x
            continue
        # most fractional, lowest index on ties
        k = int(np.argmax(np.round(frac, 9)))
        j = int_idx[k]
        v = x[j]
        lo_ub = ub.copy()
        lo_ub[j] = math.floor(v)
        hi_lb = lb.copy()
        hi_lb[j] = math.ceil(v)
        counter += 1
        heapq.heappush(heap, (val, counter, lb, lo_ub))
        counter += 1
        heapq.heappush(heap, (val, counter, hi_lb, ub))

    if unbounded_ray is not None:
        if incumbent is None:
            feas = solve_milp(lp.with_objective(np.zeros(lp.num_vars)), int_idx, tol, node_limit)
            if feas.status != OPTIMAL:
                return LpOutcome(feas.status, iterations=iters + feas.iterations, message=feas.message)
            incumbent = feas.x
        return LpOutcome(UNBOUNDED, x=incumbent, ray=unbounded_ray, iterations=iters, pool=pool)
    if incumbent is None:
        return LpOutcome(INFEASIBLE, iterations=iters)
    pool.sort(key=lambda e: e[0])
    return LpOutcome(OPTIMAL, x=incumbent, value=sgn * best, iterations=iters,
                     pool=[p for _, p in pool])


def _gap(best):
    return 1e-9 * max(1.0, abs(best)) if math.isfinite(best) else 0.0


def _pool_add(pool, x, val, size):
    for _, p in pool:
        if np.abs(p - x).max() <= 1e-8:
            return
    pool.append((val, x))
    if len(pool) > size:
        pool.sort(key=lambda e: e[0])
        pool.pop()
