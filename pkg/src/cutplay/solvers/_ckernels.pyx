# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tableau kernels; same contract as ``_kernels_py``."""
from libc.math cimport fabs, INFINITY

cdef double TIE_TOL = 1e-12
cdef double HARRIS_TOL = 1e-9


cpdef void pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t c):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nrow = T.shape[0]
    cdef Py_ssize_t ncol = T.shape[1]
    cdef double p = T[r, c]
    cdef double f
    for j in range(ncol):
        T[r, j] /= p
    for i in range(nrow):
        if i == r:
            continue
        f = T[i, c]
        if f == 0.0:
            continue
        for j in range(ncol):
            T[i, j] -= f * T[r, j]
        T[i, c] = 0.0


cdef Py_ssize_t _ratio_row(double[:, ::1] T, long[::1] basis, Py_ssize_t q,
                           Py_ssize_t rhs, Py_ssize_t m, double ptol, bint bland):
    cdef Py_ssize_t i
    cdef Py_ssize_t r = -1
    cdef double a, ratio, best = 0.0, big = 0.0, colmax = 0.0, thr, bound, v
    for i in range(m):
        if fabs(T[i, q]) > colmax:
            colmax = fabs(T[i, q])
    thr = ptol * (colmax if colmax > 1.0 else 1.0)
    if bland:
        for i in range(m):
            a = T[i, q]
            if a > thr:
                ratio = T[i, rhs] / a
                if r < 0 or ratio < best - TIE_TOL:
                    r = i
                    best = ratio
                elif ratio <= best + TIE_TOL and basis[i] < basis[r]:
                    r = i
                    best = ratio
        return r
    bound = INFINITY
    for i in range(m):
        a = T[i, q]
        if a > thr:
            v = T[i, rhs] if T[i, rhs] > 0.0 else 0.0
            v = (v + HARRIS_TOL) / a
            if v < bound:
                bound = v
    for i in range(m):
        a = T[i, q]
        if a > thr and T[i, rhs] / a <= bound:
            if r < 0 or a > big or (a == big and basis[i] < basis[r]):
                r = i
                big = a
    return r


def simplex_run(double[:, ::1] T, long[::1] basis, Py_ssize_t obj_row,
                Py_ssize_t n_enter, Py_ssize_t m, double tol, double ptol,
                long max_iter, long bland_after):
    cdef Py_ssize_t rhs = T.shape[1] - 1
    cdef long iters = 0
    cdef long degenerate = 0
    cdef Py_ssize_t j, i, q, r
    cdef double d, dmin, best
    while iters < max_iter:
        q = -1
        dmin = -tol
        if degenerate >= bland_after:
            for j in range(n_enter):
                if T[obj_row, j] < -tol:
                    q = j
                    break
        else:
            for j in range(n_enter):
                d = T[obj_row, j]
                if d < dmin:
                    dmin = d
                    q = j
        if q < 0:
            return 0, iters, -1
        r = _ratio_row(T, basis, q, rhs, m, ptol, degenerate >= bland_after)
        if r < 0:
            return 1, iters, q
        best = T[r, rhs] / T[r, q]
        if best <= TIE_TOL:
            degenerate += 1
        else:
            degenerate = 0
        pivot(T, r, q)
        basis[r] = q
        iters += 1
    return 2, iters, -1


cdef bint _lex_less(double[:, ::1] T, Py_ssize_t i, double a, Py_ssize_t k,
                    double b, Py_ssize_t rhs, Py_ssize_t lex_start,
                    Py_ssize_t lex_stop):
    cdef double x = T[i, rhs] / a
    cdef double y = T[k, rhs] / b
    cdef Py_ssize_t j
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


def lex_min_ratio(double[:, ::1] T, Py_ssize_t col, Py_ssize_t rhs,
                  Py_ssize_t lex_start, Py_ssize_t lex_stop, Py_ssize_t m,
                  double ptol):
    cdef Py_ssize_t i
    cdef Py_ssize_t best = -1
    cdef double a
    for i in range(m):
        a = T[i, col]
        if a <= ptol:
            continue
        if best < 0:
            best = i
        elif _lex_less(T, i, a, best, T[best, col], rhs, lex_start, lex_stop):
            best = i
    return best
