"""Tableau kernel selection.

The compiled extension is used when it imports; ``CUTPLAY_KERNELS=python``
forces the numpy fallback.
"""
import os

from cutplay.solvers import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CUTPLAY_KERNELS", "").lower() != "python":
    try:
        from cutplay.solvers import _ckernels

        _impl = _ckernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

OPTIMAL = _kernels_py.OPTIMAL
UNBOUNDED = _kernels_py.UNBOUNDED
ITERATION_LIMIT = _kernels_py.ITERATION_LIMIT


def use(name):
    """Switch backend at runtime (``"cython"`` or ``"python"``); returns the old one."""
    global _impl, BACKEND
    old = BACKEND
    if name == "python":
        _impl, BACKEND = _kernels_py, "python"
    elif name == "cython":
        from cutplay.solvers import _ckernels

        _impl, BACKEND = _ckernels, "cython"
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return old


def pivot(T, r, c):
    _impl.pivot(T, r, c)


def simplex_run(T, basis, obj_row, n_enter, m, tol, ptol, max_iter, bland_after):
    return _impl.simplex_run(T, basis, obj_row, n_enter, m, tol, ptol, max_iter, bland_after)


def lex_min_ratio(T, col, rhs, lex_start, lex_stop, m, ptol):
    return _impl.lex_min_ratio(T, col, rhs, lex_start, lex_stop, m, ptol)
