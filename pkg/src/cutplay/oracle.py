"""Separation against ``cl conv(X)`` using an inner approximation built from points and rays.

The oracle keeps, per player, feasible points ``V`` and recession rays ``R``
of ``X``. A point-ray LP either proves ``xbar`` lies in
``conv(V) + cone(R)`` (with the convex and conic weights as its duals) or
returns the most violated hyperplane under an L1 normalisation. Optimising
that hyperplane over ``X`` then yields either a valid cut or a new point or
ray for the store.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from cutplay.geometry import ESO_CUT, VALUE_CUT, Cut
from cutplay.solvers.lp import EQ, LE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp

DEDUP_TOL = 1e-8
MEMBER_TOL = 1e-9
RECON_TOL = 1e-7
HARVEST = 5


class OracleError(RuntimeError):
    pass


class PointRayStore:
    """Feasible points and recession rays of one player's set, kept across iterations."""

    def __init__(self, region=None, dim: Optional[int] = None):
        self.region = region
        self.dim = dim if dim is not None else region.dim
        self.V: List[np.ndarray] = []
        self.R: List[np.ndarray] = []

    def _find(self, items, x):
        for k, y in enumerate(items):
            if np.abs(y - x).max(initial=0.0) <= DEDUP_TOL:
                return k
        return -1

    def index_of_point(self, x) -> int:
        return self._find(self.V, np.asarray(x, dtype=float))

    def add_point(self, x) -> bool:
        """Insert a feasible point; returns False if it was already stored."""
        x = np.array(x, dtype=float).ravel()
        if x.size != self.dim:
            raise OracleError(f"point has {x.size} entries, store holds dimension {self.dim}")
        if self.region is not None and not self.region.contains(x):
            raise OracleError(f"refusing to store an infeasible point: {self.region.violation(x)}")
        if self._find(self.V, x) >= 0:
            return False
        x.setflags(write=False)
        self.V.append(x)
        return True

    def add_ray(self, r) -> bool:
        """Insert a recession ray (scaled to unit infinity norm); False if already stored."""
        r = np.array(r, dtype=float).ravel()
        scale = np.abs(r).max(initial=0.0)
        if scale == 0:
            raise OracleError("zero ray")
        r = r / scale
        if self.region is not None and not self.region.is_recession(r):
            raise OracleError("refusing to store a direction that is not a recession ray")
        if self._find(self.R, r) >= 0:
            return False
        r.setflags(write=False)
        self.R.append(r)
        return True

    def seed(self):
        """Put one feasible point in an empty store."""
        if self.V:
            return
        res = self.region.optimize(np.zeros(self.dim), "max")
        if res.status not in (OPTIMAL, UNBOUNDED) or res.x is None:
            raise OracleError(f"cannot seed the store: feasible set query returned {res.status}")
        self.add_point(res.x)

    def __len__(self):
        return len(self.V) + len(self.R)


@dataclass
class InclusionCertificate:
    """``point = sum alpha_k V[k] + sum beta_k R[k]``.

    ``query`` is the point the oracle was asked about; it differs from
    ``point`` only when the oracle snapped to a stored point (``offset`` is
    the infinity-norm distance).
    """

    V: List[np.ndarray]
    R: List[np.ndarray]
    alpha: np.ndarray
    beta: np.ndarray
    point: np.ndarray
    query: Optional[np.ndarray] = None
    offset: float = 0.0
    approximate: bool = False

    def reconstruct(self) -> np.ndarray:
        x = np.zeros_like(self.point, dtype=float)
        for a, v in zip(self.alpha, self.V):
            x = x + a * v
        for b, r in zip(self.beta, self.R):
            x = x + b * r
        return x

    def error(self) -> float:
        return float(np.abs(self.reconstruct() - self.point).max(initial=0.0))

    def simplex_error(self) -> float:
        a = np.asarray(self.alpha, dtype=float)
        return float(max(abs(a.sum() - 1.0), -a.min(initial=0.0), 0.0))

    @property
    def has_rays(self) -> bool:
        return bool(len(self.R)) and bool(np.any(np.asarray(self.beta) > 0))

    def pruned(self, tol: float = 1e-12) -> "InclusionCertificate":
        """Drop zero-weight entries."""
        ka = [k for k, a in enumerate(self.alpha) if a > tol]
        kb = [k for k, b in enumerate(self.beta) if b > tol]
        alpha = np.asarray([self.alpha[k] for k in ka])
        alpha = alpha / alpha.sum()
        return InclusionCertificate([self.V[k] for k in ka], [self.R[k] for k in kb], alpha,
                                    np.asarray([self.beta[k] for k in kb]), self.point, self.query,
                                    self.offset, self.approximate)


@dataclass
class SeparationResult:
    """``Yes`` carries a certificate, ``No`` a cut."""

    member: bool
    certificate: Optional[InclusionCertificate] = None
    cut: Optional[Cut] = None
    iterations: int = 0
    added_points: int = 0
    added_rays: int = 0
    notes: List[str] = field(default_factory=list)

    @property
    def answer(self) -> str:
        return "yes" if self.member else "no"


@dataclass
class PrlpSolution:
    pi: np.ndarray
    pi0: float
    violation: float
    alpha: np.ndarray
    beta: np.ndarray


def solve_prlp(xbar, V, R=(), tol: float = 1e-9) -> PrlpSolution:
    """Most violated L1-normalised hyperplane separating ``xbar`` from ``conv(V) + cone(R)``.

    Variables are ``(pi, pi0, tau1, tau2)``; the LP is

        max  xbar @ pi - pi0
        s.t. pi @ v - pi0 <= 0     (v in V)      duals alpha
             pi @ r <= 0           (r in R)      duals beta
             pi + tau1 - tau2 = 0,  sum(tau1 + tau2) = 1,  tau >= 0

    Its optimum equals the infinity-norm distance from ``xbar`` to the
    inner approximation, so a value of zero means membership and the duals
    give the convex and conic weights.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    V = [np.asarray(v, dtype=float).ravel() for v in V]
    R = [np.asarray(r, dtype=float).ravel() for r in R]
    if not V:
        raise OracleError("point-ray LP needs at least one point; seed the store first")
    d = xbar.size
    nv = 3 * d + 1
    P0 = d
    T1 = d + 1
    T2 = 2 * d + 1
    rows, rhs, senses = [], [], []
    for v in V:
        a = np.zeros(nv)
        a[:d] = v
        a[P0] = -1.0
        rows.append(a)
        rhs.append(0.0)
        senses.append(LE)
    for r in R:
        a = np.zeros(nv)
        a[:d] = r
        rows.append(a)
        rhs.append(0.0)
        senses.append(LE)
    for j in range(d):
        a = np.zeros(nv)
        a[j] = 1.0
        a[T1 + j] = 1.0
        a[T2 + j] = -1.0
        rows.append(a)
        rhs.append(0.0)
        senses.append(EQ)
    a = np.zeros(nv)
    a[T1:] = 1.0
    rows.append(a)
    rhs.append(1.0)
    senses.append(EQ)
    c = np.zeros(nv)
    c[:d] = xbar
    c[P0] = -1.0
    lb = np.concatenate([np.full(d + 1, -np.inf), np.zeros(2 * d)])
    res = solve_lp(LinearProgram(c, np.array(rows), np.array(rhs), senses, lb, np.inf, "max"), tol)
    if res.status != OPTIMAL:
        raise OracleError(f"point-ray LP returned {res.status}: {res.message}")
    y = np.abs(res.duals)
    alpha = y[:len(V)]
    beta = y[len(V):len(V) + len(R)]
    s = alpha.sum()
    if s > 0:
        alpha = alpha / s
    pi = res.x[:d].copy()
    pi[np.abs(pi) < 1e-14] = 0.0
    return PrlpSolution(pi, float(res.x[P0]), max(float(res.value), 0.0), alpha, beta)


def value_cut(c, zbar) -> Cut:
    """``c @ x >= zbar`` written as ``-c @ x <= -zbar``; valid whenever ``zbar`` is the minimum over ``X``."""
    if not np.isfinite(zbar):
        raise OracleError("a value cut needs a finite best-response value")
    return Cut(-np.asarray(c, dtype=float), -float(zbar), VALUE_CUT)


def _certificate(xbar, V, R, sol: PrlpSolution, approximate=False) -> InclusionCertificate:
    cert = InclusionCertificate(list(V), list(R), sol.alpha.copy(), sol.beta.copy(), xbar.copy(), xbar.copy())
    recon = cert.reconstruct()
    off = float(np.abs(recon - xbar).max(initial=0.0))
    cert.point = recon
    cert.offset = off
    cert.approximate = approximate
    return cert.pruned()


def _member_tol(xbar, V):
    scale = max([1.0, np.abs(xbar).max(initial=0.0)] + [np.abs(v).max(initial=0.0) for v in V])
    return MEMBER_TOL * scale


def enhanced_separation(xbar, X, eps: float, c=None, store: Optional[PointRayStore] = None,
                        harvest: int = HARVEST, max_iter: int = 100000) -> SeparationResult:
    """Decide whether ``xbar`` lies in ``cl conv(X)`` or return a separating cut.

    ``X`` is a feasible-set handle (``optimize``, ``contains``, ``dim``).
    With ``c`` given, the best response to ``c`` is checked first: a value
    cut is returned if ``xbar`` beats it by more than ``eps``, and ``Yes``
    with the best response alone if ``xbar`` is within ``eps`` of it.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    if store is None:
        store = PointRayStore(X)
    out = SeparationResult(False)
    if c is not None:
        c = np.asarray(c, dtype=float)
        res = X.optimize(c, "min")
        if res.status == OPTIMAL:
            xt = np.asarray(res.x, dtype=float)
            zbar = float(c @ xt)
            out.added_points += store.add_point(xt)
            if c @ xbar < zbar - eps and np.any(c != 0):
                out.cut = value_cut(c, zbar)
                return out
            if np.abs(xbar - xt).max(initial=0.0) < eps:
                k = store.index_of_point(xt)
                v = store.V[k]
                cert = InclusionCertificate([v], [], np.ones(1), np.zeros(0), v.copy(), xbar.copy(),
                                            float(np.abs(xbar - v).max(initial=0.0)))
                out.member, out.certificate = True, cert
                return out
        elif res.status == UNBOUNDED:
            out.notes.append("best response unbounded; value cut unavailable")
            if res.ray is not None:
                out.added_rays += store.add_ray(res.ray)
            if res.x is not None:
                out.added_points += store.add_point(res.x)
        else:
            raise OracleError(f"best-response query returned {res.status}: {res.message}")
    store.seed()
    tol = _member_tol(xbar, store.V)
    while out.iterations < max_iter:
        out.iterations += 1
        sol = solve_prlp(xbar, store.V, store.R)
        if sol.violation <= tol:
            out.member = True
            out.certificate = _certificate(xbar, store.V, store.R, sol)
            return out
        pi = sol.pi
        res = X.optimize(pi, "max", pool_size=harvest)
        if res.status == UNBOUNDED:
            if res.ray is None or not store.add_ray(res.ray):
                raise OracleError("feasible-set query repeated a stored ray")
            out.added_rays += 1
            continue
        if res.status != OPTIMAL:
            raise OracleError(f"feasible-set query returned {res.status}: {res.message}")
        nu = np.asarray(res.x, dtype=float)
        top = float(pi @ nu)
        gap = float(pi @ xbar) - top
        new = store.add_point(nu)
        out.added_points += new
        for p in (res.pool or [])[:harvest]:
            if float(pi @ p) > sol.pi0 + tol:
                out.added_points += store.add_point(p)
        if gap > eps / 2:
            out.cut = Cut(pi, top, ESO_CUT)
            return out
        if not new:
            # nu already stored, so xbar is within the gap of the inner hull
            out.member = True
            out.certificate = _certificate(xbar, store.V, store.R, sol, approximate=True)
            out.notes.append(f"membership within {sol.violation:.3g} accepted")
            return out
    raise OracleError("separation loop exceeded its iteration cap")


@dataclass
class RepairResult:
    V: List[np.ndarray]
    alpha: np.ndarray
    ok: bool
    bound: float
    rounds: int
    certificate: InclusionCertificate


def repair(xbar, X, eps: float, B0: float, cert: InclusionCertificate, max_rounds: int = 60,
           tol: float = 1e-9) -> RepairResult:
    """Rewrite a point-plus-ray certificate as a convex combination of feasible points.

    For every ray ``r`` the point ``argmax{r @ x : x in X, r @ x <= B}`` is
    added to the certificate's points; if ``xbar`` is still outside their
    hull, ``B`` doubles. On hitting ``max_rounds`` the conic certificate is
    returned unchanged with ``ok=False``.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    if not cert.has_rays:
        return RepairResult(list(cert.V), np.asarray(cert.alpha, dtype=float), True, B0, 0, cert)
    B = float(B0)
    base = [np.asarray(v, dtype=float) for v in cert.V]
    for rounds in range(1, max_rounds + 1):
        extra = []
        for r in cert.R:
            res = X.optimize(np.asarray(r, dtype=float), "max", cap=(r, B))
            if res.status == OPTIMAL and res.x is not None:
                extra.append(np.asarray(res.x, dtype=float))
        pts = list(base)
        for p in extra:
            if all(np.abs(p - q).max() > DEDUP_TOL for q in pts):
                pts.append(p)
        sol = solve_prlp(xbar, pts, (), tol)
        if sol.violation <= _member_tol(xbar, pts):
            new = _certificate(xbar, pts, [], sol)
            # the PRLP tolerance grows with the points, so also demand a close reconstruction of xbar
            if new.offset <= RECON_TOL * max(1.0, np.abs(xbar).max(initial=0.0)):
                new.query = cert.query
                return RepairResult(new.V, new.alpha, True, B, rounds, new)
        B *= 2.0
    return RepairResult(list(cert.V), np.asarray(cert.alpha, dtype=float), False, B, max_rounds, cert)


__all__ = [
    "PointRayStore",
    "InclusionCertificate",
    "SeparationResult",
    "PrlpSolution",
    "RepairResult",
    "solve_prlp",
    "enhanced_separation",
    "value_cut",
    "repair",
    "OracleError",
]
