"""Inequality-form polyhedra, cuts and the lifted disjunctive (Balas) hull."""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from cutplay.solvers.lp import INFEASIBLE, LE, EQ, OPTIMAL, LinearProgram, solve_lp

VALUE_CUT = "value-cut"
ESO_CUT = "eso-cut"
COVER_CUT = "cover-cut"
DISJUNCTIVE = "disjunctive"
PROVENANCES = (VALUE_CUT, ESO_CUT, COVER_CUT, DISJUNCTIVE)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Cut:
    """The inequality ``pi @ x <= pi0``."""

    pi: np.ndarray
    pi0: float
    provenance: str = ESO_CUT

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float).ravel()
        if not np.all(np.isfinite(pi)) or not np.isfinite(self.pi0):
            raise GeometryError("cut coefficients must be finite")
        if not np.any(pi != 0):
            raise GeometryError("cut has an all-zero coefficient vector")
        if self.provenance not in PROVENANCES:
            raise GeometryError(f"unknown cut provenance {self.provenance!r}")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "pi0", float(self.pi0))

    def violation(self, x) -> float:
        return float(self.pi @ np.asarray(x, dtype=float) - self.pi0)

    def padded(self, num_vars: int) -> "Cut":
        """The same cut with zero coefficients on trailing (auxiliary) coordinates."""
        if self.pi.size == num_vars:
            return self
        if self.pi.size > num_vars:
            raise GeometryError("cannot pad a cut to fewer coordinates")
        pi = np.zeros(num_vars)
        pi[: self.pi.size] = self.pi
        return Cut(pi, self.pi0, self.provenance)


@dataclass(frozen=True)
class Polyhedron:
    """``{x : A x <= b}`` plus ``x >= 0`` when ``nonneg``.

    ``aux_start`` marks the first auxiliary coordinate introduced by
    disjunctive lifting; coordinates before it are the original space.
    ``empty`` flags a polyhedron known to be infeasible, with the Farkas
    row combination in ``witness``.
    """

    A: np.ndarray
    b: np.ndarray
    nonneg: bool = True
    aux_start: Optional[int] = None
    empty: bool = False
    witness: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        if A.ndim != 2:
            A = A.reshape(b.size, -1) if b.size else A.reshape(0, A.size)
        if A.shape[0] != b.size:
            raise GeometryError("row count of A and b differ")
        zero = ~np.any(A != 0, axis=1)
        if np.any(zero & (b < 0)) and not self.empty:
            raise GeometryError("contradictory row 0 <= b < 0; build with Polyhedron.infeasible")
        keep = ~(zero & (b >= 0))
        A, b = A[keep], b[keep]
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_rows(cls, rows, num_vars, nonneg=True):
        rows = list(rows)
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), num_vars)
        b = np.array([r[1] for r in rows], dtype=float)
        return cls(A, b, nonneg)

    @classmethod
    def box(cls, lower, upper):
        """``lower <= x <= upper`` with ``lower >= 0`` (finite entries only get rows)."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        n = lower.size
        rows = []
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            if np.isfinite(upper[j]):
                rows.append((e, upper[j]))
            if lower[j] > 0:
                rows.append((-e, -lower[j]))
        return cls.from_rows(rows, n, nonneg=True)

    @classmethod
    def infeasible(cls, num_vars, witness=None):
        return cls(np.zeros((0, num_vars)), np.zeros(0), True, None, True, witness)

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def orig_dim(self) -> int:
        return self.num_vars if self.aux_start is None else self.aux_start

    @property
    def aux_range(self) -> Optional[Tuple[int, int]]:
        return None if self.aux_start is None else (self.aux_start, self.num_vars)

    def rows(self):
        return list(zip(self.A, self.b))

    def lp(self, c=None, sense="min") -> LinearProgram:
        c = np.zeros(self.num_vars) if c is None else np.asarray(c, dtype=float)
        lb = 0.0 if self.nonneg else -np.inf
        return LinearProgram(c, self.A, self.b, [LE] * self.num_rows, lb, np.inf, sense)

    def check_feasible(self) -> "Polyhedron":
        """Return self, or the flagged-empty version when the system is infeasible."""
        if self.empty:
            return self
        res = solve_lp(self.lp())
        if res.status == INFEASIBLE:
            return Polyhedron(self.A, self.b, self.nonneg, self.aux_start, True, res.farkas)
        return self


def add_cut(P: Polyhedron, c: Cut) -> Polyhedron:
    """Append ``c`` as a row of ``P``; cuts in the original space are zero-padded."""
    if c.pi.size != P.num_vars:
        if c.pi.size == P.orig_dim:
            c = c.padded(P.num_vars)
        else:
            raise GeometryError(f"cut has {c.pi.size} coefficients, polyhedron has {P.num_vars} variables")
    A = np.vstack([P.A, c.pi[None, :]])
    b = np.append(P.b, c.pi0)
    return Polyhedron(A, b, P.nonneg, P.aux_start, P.empty, P.witness)


def intersect_row(P: Polyhedron, a, rhs) -> Polyhedron:
    """``P`` with the extra row ``a @ x <= rhs`` (``a`` may be zero-padded)."""
    a = np.asarray(a, dtype=float)
    if a.size < P.num_vars:
        a = np.concatenate([a, np.zeros(P.num_vars - a.size)])
    if not np.any(a != 0):
        if rhs < 0:
            return Polyhedron.infeasible(P.num_vars)
        return P
    return Polyhedron(np.vstack([P.A, a]), np.append(P.b, rhs), P.nonneg, P.aux_start)


def balas_union(Y: Polyhedron, Z: Polyhedron) -> Polyhedron:
    """Lifted formulation of ``cl conv(Y ∪ Z)``.

    Variables are ``(x, y1, y2, lam)`` with ``x`` the original coordinates,
    ``y1``/``y2`` full copies of ``Y``/``Z`` (auxiliary coordinates included),
    and::

        x = y1[:k] + y2[:k],   A_Y y1 <= lam b_Y,   A_Z y2 <= (1 - lam) b_Z,
        0 <= lam <= 1

    Everything after ``x`` is marked auxiliary.
    """
    if Y.orig_dim != Z.orig_dim:
        raise GeometryError("disjuncts live in different original dimensions")
    if Y.nonneg != Z.nonneg:
        raise GeometryError("disjuncts disagree on the nonnegativity convention")
    if Y.empty or Z.empty:
        raise GeometryError("disjuncts must be nonempty")
    k = Y.orig_dim
    ny, nz = Y.num_vars, Z.num_vars
    N = k + ny + nz + 1
    lam = N - 1
    rows, rhs = [], []
    for j in range(k):
        r = np.zeros(N)
        r[j] = 1.0
        r[k + j] = -1.0
        r[k + ny + j] = -1.0
        rows += [r, -r]
        rhs += [0.0, 0.0]
    for a, bb in zip(Y.A, Y.b):
        r = np.zeros(N)
        r[k:k + ny] = a
        r[lam] = -bb
        rows.append(r)
        rhs.append(0.0)
    for a, bb in zip(Z.A, Z.b):
        r = np.zeros(N)
        r[k + ny:k + ny + nz] = a
        r[lam] = bb
        rows.append(r)
        rhs.append(bb)
    r = np.zeros(N)
    r[lam] = 1.0
    rows.append(r)
    rhs.append(1.0)
    if not Y.nonneg:
        # free copies: lam only needs its lower bound
        r = np.zeros(N)
        r[lam] = -1.0
        rows.append(r)
        rhs.append(0.0)
    return Polyhedron(np.array(rows), np.array(rhs), Y.nonneg, k)


def contains(P: Polyhedron, x, tol: float = 1e-9) -> bool:
    """Membership of ``x`` in ``P`` (or in its projection when ``x`` has original length)."""
    if P.empty:
        return False
    x = np.asarray(x, dtype=float).ravel()
    if x.size == P.num_vars:
        if P.nonneg and np.any(x < -tol):
            return False
        return bool(np.all(P.A @ x <= P.b + tol))
    if x.size != P.orig_dim:
        raise GeometryError(f"point has {x.size} entries, expected {P.num_vars} or {P.orig_dim}")
    if P.nonneg and np.any(x < -tol):
        return False
    k = P.orig_dim
    # aux feasibility: A_aux u <= b - A_orig x + tol, u >= 0
    A_aux = P.A[:, k:]
    rhs = P.b - P.A[:, :k] @ x + tol
    lp = LinearProgram(np.zeros(A_aux.shape[1]), A_aux, rhs, [LE] * P.num_rows,
                       0.0 if P.nonneg else -np.inf, np.inf)
    return solve_lp(lp).status == OPTIMAL


def project_bounds(P: Polyhedron, direction) -> float:
    """``max direction @ x[:k]`` over ``P`` (``inf`` if unbounded, ``-inf`` if empty)."""
    d = np.zeros(P.num_vars)
    d[: len(direction)] = direction
    res = solve_lp(P.lp(d, "max"))
    if res.status == OPTIMAL:
        return res.value
    if res.status == INFEASIBLE:
        return -np.inf
    return np.inf


__all__ = [
    "Cut",
    "Polyhedron",
    "add_cut",
    "intersect_row",
    "balas_union",
    "contains",
    "project_bounds",
    "VALUE_CUT",
    "ESO_CUT",
    "COVER_CUT",
    "DISJUNCTIVE",
    "EQ",
]
