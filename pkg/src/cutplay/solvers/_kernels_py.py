"""Pure-numpy tableau kernels.

Mirrors ``_ckernels.pyx`` exactly (same pivot choices, same tie-breaking) so
either backend yields identical iterates.
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

TIE_TOL = 1e-12
HARRIS_TOL = 1e-9


def pivot(T, r, c):
    """Gauss-Jordan pivot of tableau ``T`` (in place) on entry ``(r, c)``."""
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])


def simplex_run(T, basis, obj_row, n_enter, m, tol, ptol, max_iter, bland_after):
    """Primal simplex on the first ``m`` rows of ``T``.

    ``T[obj_row]`` holds reduced costs (minimisation); only columns below
    ``n_enter`` may enter. Dantzig pricing, switching to Bland's rule after
    ``bland_after`` consecutive degenerate pivots. The ratio test is
    Harris' two-pass rule (largest pivot among rows within ``HARRIS_TOL``
    of the minimum ratio) until Bland's rule takes over, when it falls back
    to the lowest basic index among tied rows.

    Returns ``(status, iterations, column)``; ``column`` is the entering
    column that certified unboundedness, else -1.
    """
    rhs = T.shape[1] - 1
    iters = 0
    degenerate = 0
    while iters < max_iter:
        d = T[obj_row, :n_enter]
        neg = np.nonzero(d < -tol)[0]
        if neg.size == 0:
            return OPTIMAL, iters, -1
        if degenerate >= bland_after:
            q = int(neg[0])
        else:
            q = int(neg[np.argmin(d[neg])])
        r = _ratio_row(T, basis, q, rhs, m, ptol, degenerate >= bland_after)
        if r < 0:
            return UNBOUNDED, iters, q
        best = T[r, rhs] / T[r, q]
        if best <= TIE_TOL:
            degenerate += 1
        else:
            degenerate = 0
        pivot(T, r, q)
        basis[r] = q
        iters += 1
    return ITERATION_LIMIT, iters, -1


def _ratio_row(T, basis, q, rhs, m, ptol, bland):
    # pivots below ptol relative to the column scale are treated as zero
    colmax = float(np.abs(T[:m, q]).max(initial=0.0))
    thr = ptol * max(1.0, colmax)
    r = -1
    if bland:
        best = 0.0
        for i in range(m):
            a = T[i, q]
            if a > thr:
                ratio = T[i, rhs] / a
                if r < 0 or ratio < best - TIE_TOL:
                    r, best = i, ratio
                elif ratio <= best + TIE_TOL and basis[i] < basis[r]:
                    r, best = i, ratio
        return r
    col = T[:m, q]
    rhs_col = T[:m, rhs]
    ok = col > thr
    if not ok.any():
        return -1
    bound = ((np.maximum(rhs_col[ok], 0.0) + HARRIS_TOL) / col[ok]).min()
    idx = np.nonzero(ok)[0]
    idx = idx[rhs_col[idx] / col[idx] <= bound]
    a = col[idx]
    ties = idx[a == a.max()]
    return int(ties[np.argmin(basis[ties])])


def lex_min_ratio(T, col, rhs, lex_start, lex_stop, m, ptol):
    """Lexicographic minimum-ratio row for entering column ``col``.

    Rows are compared on ``(T[i, rhs], T[i, lex_start:lex_stop]) / T[i, col]``
    over rows with ``T[i, col] > ptol``; returns -1 if there is none.
    """
    best = -1
    for i in range(m):
        a = T[i, col]
        if a <= ptol:
            continue
        if best < 0:
            best = i
            continue
        b = T[best, col]
        if _lex_less(T, i, a, best, b, rhs, lex_start, lex_stop):
            best = i
    return best


def _lex_less(T, i, a, k, b, rhs, lex_start, lex_stop):
    x = T[i, rhs] / a
    y = T[k, rhs] / b
    if x < y - TIE_TOL:
        return True
    if x > y + TIE_TOL:
        return False
    for j in range(lex_start, lex_stop):
        x = T[i, j] / a
        y = T[k, j] / b
        if x < y - TIE_TOL:
            return True
        if x > y + TIE_TOL:
            return False
    return i < k
