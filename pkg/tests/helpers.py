"""Random instance makers and independent reference solvers shared by the test modules."""
import itertools

import numpy as np
from scipy.optimize import linprog

from cutplay.solvers.lp import EQ, GE, LE, LinearProgram

# (criterion, passed, detail) rows printed after the acceptance run
ACCEPTANCE = []


def random_lp(rng, max_n=6, max_m=6):
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(0, max_m + 1))
    A = rng.integers(-5, 6, (m, n)).astype(float)
    b = rng.integers(-5, 10, m).astype(float)
    senses = list(rng.choice([LE, GE, EQ], m, p=[0.6, 0.25, 0.15]))
    c = rng.integers(-5, 6, n).astype(float)
    lb = np.where(rng.random(n) < 0.8, rng.integers(-3, 1, n), -np.inf).astype(float)
    ub = np.where(rng.random(n) < 0.6, lb + rng.integers(0, 5, n), np.inf)
    free = ~np.isfinite(lb)
    ub[free] = np.where(rng.random(free.sum()) < 0.5, 3.0, np.inf)
    sense = str(rng.choice(["min", "max"]))
    return LinearProgram(c, A, b, senses, lb, ub, sense)


def scipy_lp(lp: LinearProgram):
    """(status, native optimal value) from HiGHS."""
    sg = 1.0 if lp.sense == "min" else -1.0
    n = lp.num_vars
    ub_rows = [(lp.A[i] if s == LE else -lp.A[i], lp.b[i] if s == LE else -lp.b[i])
               for i, s in enumerate(lp.senses) if s != EQ]
    eq_rows = [(lp.A[i], lp.b[i]) for i, s in enumerate(lp.senses) if s == EQ]
    kw = {}
    if ub_rows:
        kw["A_ub"] = np.array([r for r, _ in ub_rows]).reshape(-1, n)
        kw["b_ub"] = [v for _, v in ub_rows]
    if eq_rows:
        kw["A_eq"] = np.array([r for r, _ in eq_rows]).reshape(-1, n)
        kw["b_eq"] = [v for _, v in eq_rows]
    bounds = [(None if not np.isfinite(a) else a, None if not np.isfinite(z) else z) for a, z in zip(lp.lb, lp.ub)]
    ref = linprog(sg * lp.c, bounds=bounds, method="highs", **kw)
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
    if status == "infeasible":
        # presolve may report "infeasible or unbounded"; a zero objective tells them apart
        if linprog(np.zeros(n), bounds=bounds, method="highs", **kw).status == 0:
            status = "unbounded"
    return status, (sg * ref.fun if status == "optimal" else None)


def random_binary_milp(rng, max_n=12):
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, 4))
    A = rng.integers(-3, 8, (m, n)).astype(float)
    b = np.floor(np.abs(A).sum(axis=1) * rng.uniform(0.2, 0.7, m))
    senses = [LE] * m
    if rng.random() < 0.3:
        A = np.vstack([A, rng.integers(0, 3, n)])
        b = np.append(b, float(rng.integers(1, 3)))
        senses.append(GE)
    c = rng.integers(-10, 11, n).astype(float)
    return LinearProgram(c, A, b, senses, 0.0, 1.0, str(rng.choice(["min", "max"])))


def brute_binary(lp: LinearProgram):
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=lp.num_vars):
        x = np.array(bits)
        ax = lp.A @ x
        ok = all((ax[i] <= lp.b[i] + 1e-9) if s == LE else (ax[i] >= lp.b[i] - 1e-9) if s == GE
                 else abs(ax[i] - lp.b[i]) <= 1e-9 for i, s in enumerate(lp.senses))
        if not ok:
            continue
        v = float(lp.c @ x)
        if best is None or (v < best if lp.sense == "min" else v > best):
            best = v
    return best


def hull_member_lp(xbar, V, R=()):
    """Independent membership test: is ``xbar`` a convex combination of ``V`` plus a conic one of ``R``?"""
    V = np.asarray(V, dtype=float)
    R = np.asarray(R, dtype=float).reshape(-1, V.shape[1])
    k, d = V.shape
    A_eq = np.vstack([np.hstack([V.T, R.T]), np.concatenate([np.ones(k), np.zeros(len(R))])[None, :]])
    b_eq = np.concatenate([xbar, [1.0]])
    res = linprog(np.zeros(k + len(R)), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * (k + len(R)),
                  method="highs")
    return res.status == 0
