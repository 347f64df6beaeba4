"""Instance and result documents, canonical JSON, the knapsack generator and small fixture games."""
import hashlib
import json
import math
from typing import Any, Dict, List, Optional

import numpy as np

from cutplay.game import Game, Player
from cutplay.geometry import Polyhedron
from cutplay.solvers.lp import LE, OPTIMAL, UNBOUNDED, LinearProgram, LpOutcome, solve_lp

VERSION = 1


class InstanceError(ValueError):
    """Schema violation; the message starts with the offending location."""


# --- canonical JSON -------------------------------------------------------

def _encode(obj, out: List[str]):
    if obj is None or obj is True or obj is False:
        out.append(json.dumps(obj))
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            raise ValueError("NaN cannot be serialised")
        if math.isinf(x):
            out.append("null")
        else:
            # +0.0 avoids "-0", which does not survive a parse round trip
            out.append(format(x + 0.0, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for k, key in enumerate(sorted(obj)):
            if k:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for k, v in enumerate(obj):
            if k:
                out.append(",")
            _encode(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_dumps(doc) -> str:
    """Sorted keys, no whitespace, floats with 17 significant digits, infinities as null."""
    out: List[str] = []
    _encode(doc, out)
    return "".join(out) + "\n"


def content_hash(doc) -> str:
    return hashlib.sha256(canonical_dumps(doc).encode()).hexdigest()


# --- instance documents ---------------------------------------------------

def _arr(v, where, ndim=1):
    try:
        a = np.array([np.nan if e is None else e for e in v] if ndim == 1 else v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"{where}: not a numeric array ({exc})") from None
    if a.ndim != ndim:
        if ndim == 2 and a.size == 0:
            return a.reshape(0, 0)
        raise InstanceError(f"{where}: expected a {ndim}-D array")
    return a


def _interaction(C, i, dims, where):
    k = dims[i]
    opp = [j for j in range(len(dims)) if j != i]
    rows = sum(dims[j] for j in opp)
    if isinstance(C, dict):
        if set(C) != {"diag", "opponents"}:
            raise InstanceError(f"{where}: compressed form needs exactly 'diag' and 'opponents'")
        full = np.zeros((rows, k))
        offs = {}
        r = 0
        for j in opp:
            offs[j] = r
            r += dims[j]
        if len(C["diag"]) != len(C["opponents"]):
            raise InstanceError(f"{where}: 'diag' and 'opponents' differ in length")
        for t, (j, d) in enumerate(zip(C["opponents"], C["diag"])):
            if not isinstance(j, int) or j not in offs:
                raise InstanceError(f"{where}.opponents[{t}]: {j!r} is not an opponent of player {i}")
            if dims[j] != k:
                raise InstanceError(f"{where}.diag[{t}]: diagonal form needs equal dimensions")
            d = _arr(d, f"{where}.diag[{t}]")
            if d.size != k:
                raise InstanceError(f"{where}.diag[{t}]: length {d.size}, expected {k}")
            full[offs[j]:offs[j] + k] = np.diag(d)
        return full
    M = _arr(C, where, 2)
    if M.size == 0:
        M = M.reshape(rows, k) if rows * k == 0 else M
    if M.shape != (rows, k):
        raise InstanceError(f"{where}: shape {M.shape}, expected {(rows, k)}")
    return M


def game_from_doc(doc: Dict[str, Any]) -> Game:
    if not isinstance(doc, dict):
        raise InstanceError("$: instance must be a JSON object")
    if doc.get("version") != VERSION:
        raise InstanceError(f"$.version: expected {VERSION}, got {doc.get('version')!r}")
    sense = doc.get("sense")
    if sense not in ("min", "max"):
        raise InstanceError(f"$.sense: expected 'min' or 'max', got {sense!r}")
    plist = doc.get("players")
    if not isinstance(plist, list) or not plist:
        raise InstanceError("$.players: expected a nonempty list")
    dims = []
    for i, p in enumerate(plist):
        if not isinstance(p, dict) or "c" not in p:
            raise InstanceError(f"$.players[{i}]: missing 'c'")
        dims.append(len(p["c"]))
    players = []
    for i, p in enumerate(plist):
        where = f"$.players[{i}]"
        for key in ("c", "C", "A", "b"):
            if key not in p:
                raise InstanceError(f"{where}: missing {key!r}")
        c = _arr(p["c"], f"{where}.c")
        k = c.size
        C = _interaction(p["C"], i, dims, f"{where}.C")
        b = _arr(p["b"], f"{where}.b")
        A = _arr(p["A"], f"{where}.A", 2) if len(p["A"]) else np.zeros((0, k))
        if A.shape != (b.size, k):
            raise InstanceError(f"{where}.A: shape {A.shape}, expected {(b.size, k)}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))
                and np.all(np.isfinite(C))):
            raise InstanceError(f"{where}: coefficients must be finite")
        int_idx = p.get("int_idx", [])
        if not isinstance(int_idx, list) or any(not isinstance(j, int) or not 0 <= j < k for j in int_idx):
            raise InstanceError(f"{where}.int_idx: expected indices in [0, {k})")
        bounds = p.get("bounds")
        vb = None
        if bounds is not None:
            if not isinstance(bounds, dict) or set(bounds) != {"lower", "upper"}:
                raise InstanceError(f"{where}.bounds: expected {{lower, upper}}")
            lo = _arr(bounds["lower"], f"{where}.bounds.lower")
            hi = _arr(bounds["upper"], f"{where}.bounds.upper")
            lo = np.where(np.isnan(lo), 0.0, lo)
            hi = np.where(np.isnan(hi), np.inf, hi)
            if lo.size != k or hi.size != k:
                raise InstanceError(f"{where}.bounds: lengths must equal {k}")
            if np.any(lo < 0) or np.any(lo > hi):
                raise InstanceError(f"{where}.bounds: need 0 <= lower <= upper")
            vb = (lo, hi)
        if int_idx and (vb is None or not np.all(np.isfinite(vb[1][int_idx]))):
            raise InstanceError(f"{where}.bounds: integer coordinates need finite upper bounds")
        try:
            players.append(Player(c, C, Polyhedron(A, b), tuple(int_idx), vb))
        except ValueError as exc:
            raise InstanceError(f"{where}: {exc}") from None
    return Game(players, sense)


def _compress(C, i, dims):
    k = dims[i]
    opp = [j for j in range(len(dims)) if j != i]
    if any(dims[j] != k for j in opp):
        return None
    diag = []
    r = 0
    for j in opp:
        blk = C[r:r + k]
        if np.any(blk != np.diag(np.diag(blk))):
            return None
        diag.append(np.diag(blk).tolist())
        r += k
    return {"diag": diag, "opponents": opp}


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2 ** 53 else x


def game_to_doc(g: Game, meta: Optional[dict] = None, compress: bool = True) -> dict:
    players = []
    for i, p in enumerate(g.players):
        C = _compress(p.C, i, g.dims) if compress else None
        if C is None:
            C = [[_num(v) for v in row] for row in p.C]
        entry = {
            "c": [_num(v) for v in p.c],
            "C": C,
            "A": [[_num(v) for v in row] for row in p.feas.A],
            "b": [_num(v) for v in p.feas.b],
            "int_idx": list(p.int_idx),
            "bounds": None,
        }
        if p.var_bounds is not None:
            lo, hi = p.var_bounds
            entry["bounds"] = {"lower": [_num(v) for v in lo],
                               "upper": [None if not np.isfinite(v) else _num(v) for v in hi]}
        players.append(entry)
    return {"version": VERSION, "sense": g.sense, "players": players,
            "meta": dict(meta or {"name": "", "seed": None, "family": "custom"})}


def load_instance(text: str):
    """Parse instance text into ``(doc, game)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"$: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return doc, game_from_doc(doc)


# --- knapsack family ------------------------------------------------------

def knapsack_game(profits, weights, capacities, interactions, sense="max") -> Game:
    """Binary knapsack players; ``interactions[i][j]`` is the diagonal for opponent ``j``."""
    n = len(profits)
    m = len(profits[0])
    players = []
    for i in range(n):
        C = np.zeros(((n - 1) * m, m))
        r = 0
        for j in range(n):
            if j == i:
                continue
            C[r:r + m] = np.diag(np.asarray(interactions[i][j], dtype=float))
            r += m
        feas = Polyhedron(np.asarray(weights[i], dtype=float)[None, :], [float(capacities[i])])
        players.append(Player(profits[i], C, feas, tuple(range(m)), (np.zeros(m), np.ones(m))))
    return Game(players, sense)


def generate_knapsack(n: int, m: int, seed: int, name: Optional[str] = None) -> dict:
    """Random knapsack game document; identical for identical arguments."""
    if n < 2 or m < 1:
        raise ValueError("need n >= 2 players and m >= 1 items")
    rng = np.random.default_rng(seed)
    players = []
    for i in range(n):
        c = rng.integers(1, 101, m)
        w = rng.integers(1, 101, m)
        while w.sum() < 2:
            w = rng.integers(1, 101, m)
        cap = int(math.floor(0.5 * w.sum()))
        opp = [j for j in range(n) if j != i]
        diag = [rng.integers(-50, 51, m).tolist() for _ in opp]
        players.append({
            "c": c.tolist(),
            "C": {"diag": diag, "opponents": opp},
            "A": [w.tolist()],
            "b": [cap],
            "int_idx": list(range(m)),
            "bounds": {"lower": [0] * m, "upper": [1] * m},
        })
    meta = {"name": name or f"knapsack-n{n}-m{m}-s{seed}", "seed": seed, "family": "knapsack"}
    return {"version": VERSION, "sense": "max", "players": players, "meta": meta}


# --- fixtures -------------------------------------------------------------

def _continuous(C, A, b):
    return Player([0.0], [[C]], Polyhedron(A, b))


def example4(variant: bool = False) -> Game:
    """Player 1: ``min xi*x, x >= 1``; player 2: ``min x*xi, 1 <= xi <= 2``.

    ``variant`` flips player 2's objective to ``-x*xi``.
    """
    p1 = _continuous(1.0, [[-1.0]], [-1.0])
    p2 = _continuous(-1.0 if variant else 1.0, [[-1.0], [1.0]], [-1.0, 2.0])
    return Game([p1, p2], "min")


def unbounded_player_game() -> Game:
    """Player 1 minimises ``-xi*x`` over ``x >= 1`` while ``xi >= 1``: its cost is unbounded, so no equilibrium."""
    p1 = _continuous(-1.0, [[-1.0]], [-1.0])
    p2 = _continuous(1.0, [[-1.0], [1.0]], [-1.0, 2.0])
    return Game([p1, p2], "min")


def coordination_game() -> Game:
    """Two binary players who gain 2 together and pay 1 alone; pure equilibria (0,0) and (1,1)."""
    return knapsack_game([[-1], [-1]], [[1], [1]], [1, 1], [[None, [2]], [[2], None]], "max")


def matching_pennies_game() -> Game:
    """One binary variable each; zero-sum, unique mixed equilibrium at (1/2, 1/2)."""
    # payoffs over x, y in {0,1}: p1 = 1 - 2x - 2y + 4xy (match), p2 = -p1
    return knapsack_game([[-2], [2]], [[1], [1]], [1, 1], [[None, [4]], [[-4], None]], "max")


FIXTURES = {
    "example4": lambda: example4(False),
    "example4-variant": lambda: example4(True),
    "unbounded": unbounded_player_game,
    "coordination": coordination_game,
    "matching-pennies": matching_pennies_game,
}


def fixture_doc(name: str) -> dict:
    g = FIXTURES[name]()
    return game_to_doc(g, {"name": name, "seed": None, "family": "fixture"})


class ConicRegion:
    """``{x in R^3 : x1^2 + x2^2 >= x3, -x3 <= x1, x2 <= x1, x3 >= 0}``.

    Its closed convex hull is the pointed cone ``{x3 >= 0, x1 + x3 >= 0,
    x1 >= x2}`` with apex 0 (which belongs to the set) and extreme rays
    ``(0,-1,0)``, ``(1,1,0)`` and ``(-1,-1,1)``. Linear optimisation runs
    over the hull; a bounded optimum is attained at the apex.
    """

    dim = 3
    int_idx = ()
    hull_A = np.array([[-1.0, 0.0, -1.0], [-1.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
    hull_b = np.zeros(3)
    extreme_rays = (np.array([0.0, -1.0, 0.0]), np.array([1.0, 1.0, 0.0]), np.array([-1.0, -1.0, 1.0]))

    def relaxation(self) -> Polyhedron:
        return Polyhedron(self.hull_A, self.hull_b, nonneg=False)

    def violation(self, x, tol: float = 1e-7) -> Optional[str]:
        x = np.asarray(x, dtype=float)
        if x.size != 3:
            return "point must have 3 entries"
        if x[0] ** 2 + x[1] ** 2 < x[2] - tol:
            return "x1^2 + x2^2 >= x3 violated"
        slack = self.hull_b - self.hull_A @ x
        k = int(np.argmin(slack))
        if slack[k] < -tol:
            return f"row {k} violated by {-slack[k]:.3g}"
        return None

    def contains(self, x, tol: float = 1e-7) -> bool:
        return self.violation(x, tol) is None

    def is_recession(self, r, tol: float = 1e-7) -> bool:
        return bool(np.all(self.hull_A @ np.asarray(r, dtype=float) <= tol))

    def optimize(self, obj, sense="max", pool_size=0, cap=None) -> LpOutcome:
        obj = np.asarray(obj, dtype=float)
        if cap is not None:
            return self._capped(obj if sense == "max" else -obj, *cap)
        lp = LinearProgram(obj, self.hull_A, self.hull_b, [LE] * 3, -np.inf, np.inf, sense)
        res = solve_lp(lp)
        if res.status == OPTIMAL:
            return LpOutcome(OPTIMAL, x=np.zeros(3), value=0.0)
        if res.status == UNBOUNDED:
            return LpOutcome(UNBOUNDED, x=np.zeros(3), ray=res.ray)
        return res

    def _capped(self, obj, r, B):
        r = np.asarray(r, dtype=float)
        # any feasible point on the cap is optimal; take the one nearest the ray point B r / |r|^2
        rr = float(r @ r)
        if np.allclose(obj, r) and rr > 0 and B >= 0:
            x = self._near_cap(r, (B / rr) * r)
            if x is not None:
                return LpOutcome(OPTIMAL, x=x, value=float(obj @ x))
        # otherwise the best point of the form t*e on an extreme ray with r @ x <= B
        best = (0.0, np.zeros(3))
        for e in self.extreme_rays:
            re = float(r @ e)
            oe = float(obj @ e)
            if oe <= 0:
                continue
            t = B / re if re > 0 else None
            if t is None:
                continue
            x = t * e
            if self.contains(x) and oe * t > best[0]:
                best = (oe * t, x)
        return LpOutcome(OPTIMAL, x=best[1], value=best[0])

    def _near_cap(self, r, y, steps: int = 60):
        """Feasible ``y + s u`` with ``u`` orthogonal to ``r`` and ``s`` smallest, by doubling then bisection."""
        if self.contains(y):
            return y
        _, _, vt = np.linalg.svd(r[None, :])
        best = None
        for u in np.vstack([vt[1:], -vt[1:]]):
            hi = 1e-3
            while hi < 1e12 and not self.contains(y + hi * u):
                hi *= 2.0
            if hi >= 1e12:
                continue
            lo = 0.0
            for _ in range(steps):
                mid = 0.5 * (lo + hi)
                if self.contains(y + mid * u):
                    hi = mid
                else:
                    lo = mid
            if best is None or hi < best[0]:
                best = (hi, y + hi * u)
        return None if best is None else best[1]
