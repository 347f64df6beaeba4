"""Reciprocally-bilinear games: players, mixed strategies, best responses and regret checks.

Player ``i`` with own variables ``x_i`` pays

    f_i(x_i; x_-i) = c_i @ x_i + x_-i @ C_i @ x_i

where ``x_-i`` stacks the other players' variables in player order. Data is
stored in the game's native sense; every computation runs on the canonical
minimisation form (max games are negated).
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cutplay.geometry import Polyhedron
from cutplay.solvers.lp import (
    INFEASIBLE,
    LE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LpOutcome,
)
from cutplay.solvers.milp import INT_TOL, solve_milp

DEFAULT_EPS = 3e-5
PROB_TOL = 1e-12
FEAS_TOL = 1e-7


class GameError(ValueError):
    pass


class InfeasibleSupport(GameError):
    """A support point fails integrality or a constraint of its player's set."""


class MilpRegion:
    """``{x : A x <= b, lb <= x <= ub, x_j integer for j in int_idx}`` as an optimisation handle.

    This is the interface the separation oracle and best-response code
    talk to; fixtures with non-polyhedral sets supply their own object with
    the same methods.
    """

    def __init__(self, feas: Polyhedron, int_idx=(), lb=None, ub=None, node_limit: int = 100000):
        self.feas = feas
        self.dim = feas.num_vars
        self.int_idx = tuple(sorted(int(j) for j in int_idx))
        floor = 0.0 if feas.nonneg else -np.inf
        self.lb = np.full(self.dim, floor) if lb is None else np.maximum(np.asarray(lb, dtype=float), floor)
        self.ub = np.full(self.dim, np.inf) if ub is None else np.asarray(ub, dtype=float).copy()
        self.node_limit = node_limit

    @property
    def bounded_integer(self) -> bool:
        return len(self.int_idx) == self.dim and bool(np.all(np.isfinite(self.ub)))

    def lp(self, obj, sense="min") -> LinearProgram:
        return LinearProgram(obj, self.feas.A, self.feas.b, [LE] * self.feas.num_rows, self.lb, self.ub, sense)

    def relaxation(self) -> Polyhedron:
        """Linear relaxation with the variable bounds written as rows."""
        rows = list(self.feas.rows())
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            if np.isfinite(self.ub[j]):
                rows.append((e, self.ub[j]))
            if np.isfinite(self.lb[j]) and (self.lb[j] > 0 or not self.feas.nonneg):
                rows.append((-e, -self.lb[j]))
        if not rows:
            return Polyhedron(np.zeros((0, self.dim)), np.zeros(0), self.feas.nonneg)
        return Polyhedron.from_rows(rows, self.dim, self.feas.nonneg)

    def optimize(self, obj, sense="max", pool_size=0, cap=None) -> LpOutcome:
        """Optimise ``obj @ x``; ``cap=(r, B)`` adds the row ``r @ x <= B``."""
        lp = self.lp(np.asarray(obj, dtype=float), sense)
        if cap is not None:
            r, B = cap
            lp = lp.with_rows(np.asarray(r, dtype=float)[None, :], [B], [LE])
        return solve_milp(lp, self.int_idx, node_limit=self.node_limit, pool_size=pool_size)

    def violation(self, x, tol: float = FEAS_TOL) -> Optional[str]:
        """Describe the first violated requirement of ``x``, or None if feasible."""
        x = np.asarray(x, dtype=float)
        if x.size != self.dim:
            return f"point has {x.size} entries, expected {self.dim}"
        for j in self.int_idx:
            if abs(x[j] - round(x[j])) > INT_TOL:
                return f"coordinate {j} = {x[j]!r} is not integral"
        for j in range(self.dim):
            if x[j] < self.lb[j] - tol or x[j] > self.ub[j] + tol:
                return f"coordinate {j} = {x[j]!r} outside [{self.lb[j]}, {self.ub[j]}]"
        if self.feas.num_rows:
            slack = self.feas.b - self.feas.A @ x
            k = int(np.argmin(slack))
            if slack[k] < -tol:
                return f"row {k} violated by {-slack[k]:.3g}"
        return None

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        return self.violation(x, tol) is None

    def is_recession(self, r, tol: float = FEAS_TOL) -> bool:
        """Whether ``r`` is a recession direction of the relaxation."""
        r = np.asarray(r, dtype=float)
        s = tol * max(1.0, np.abs(r).max(initial=0.0))
        if np.any(r[np.isfinite(self.ub)] > s) or np.any(r[np.isfinite(self.lb)] < -s):
            return False
        return bool(np.all(self.feas.A @ r <= s))


@dataclass
class Player:
    c: np.ndarray
    C: np.ndarray
    feas: Polyhedron
    int_idx: Tuple[int, ...] = ()
    var_bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None
    region: Optional[object] = field(default=None, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.C = np.asarray(self.C, dtype=float)
        if self.C.ndim == 1:
            self.C = self.C.reshape(-1, self.c.size)
        if self.C.shape[1] != self.c.size:
            raise GameError(f"interaction matrix has {self.C.shape[1]} columns, player has {self.c.size} variables")
        if self.feas.num_vars != self.c.size:
            raise GameError("feasible set dimension differs from the cost vector")
        self.int_idx = tuple(sorted(int(j) for j in self.int_idx))
        if any(j < 0 or j >= self.dim for j in self.int_idx):
            raise GameError("integer index out of range")
        if self.var_bounds is not None:
            lo, hi = (np.asarray(v, dtype=float).ravel() for v in self.var_bounds)
            if lo.size != self.dim or hi.size != self.dim:
                raise GameError("variable bounds have the wrong length")
            self.var_bounds = (lo, hi)
        for j in self.int_idx:
            if self.var_bounds is None or not np.isfinite(self.var_bounds[1][j]):
                raise GameError(f"integer coordinate {j} needs a finite upper bound")
        if self.region is None:
            lo, hi = self.var_bounds if self.var_bounds is not None else (None, None)
            self.region = MilpRegion(self.feas, self.int_idx, lo, hi)

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def is_integer(self) -> bool:
        return bool(self.int_idx)


class Game:
    """Players in order; ``sense`` is the native sense of the payoff data."""

    def __init__(self, players: Sequence[Player], sense: str = "min"):
        if sense not in ("min", "max"):
            raise GameError(f"unknown sense {sense!r}")
        self.players: List[Player] = list(players)
        self.sense = sense
        if len(self.players) < 1:
            raise GameError("a game needs at least one player")
        self.dims = [p.dim for p in self.players]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)]).astype(int)
        total = int(self.offsets[-1])
        for i, p in enumerate(self.players):
            if p.C.shape[0] != total - p.dim:
                raise GameError(f"player {i}: interaction matrix has {p.C.shape[0]} rows, "
                                f"opponents have {total - p.dim} variables")
        self._sgn = 1.0 if sense == "min" else -1.0

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def total_dim(self) -> int:
        return int(self.offsets[-1])

    def cost_data(self, i):
        """Canonical (minimisation) ``c_i`` and ``C_i``."""
        p = self.players[i]
        return self._sgn * p.c, self._sgn * p.C

    def to_native(self, value):
        """Map a canonical cost back to the game's own sense."""
        return self._sgn * value

    def split(self, x) -> List[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [x[self.offsets[i]:self.offsets[i + 1]] for i in range(self.n)]

    def opponents(self, i, x) -> np.ndarray:
        """Stack all blocks except player ``i``'s from a full profile vector or block list."""
        blocks = self.split(x) if not isinstance(x, (list, tuple)) else list(x)
        return np.concatenate([blocks[j] for j in range(self.n) if j != i] or [np.zeros(0)])

    def negated(self) -> "Game":
        """Same canonical game written in the opposite native sense."""
        players = [Player(-p.c, -p.C, p.feas, p.int_idx, p.var_bounds, p.region) for p in self.players]
        return Game(players, "max" if self.sense == "min" else "min")


@dataclass(frozen=True)
class MixedStrategy:
    """Finite-support distribution; ``witness`` holds the per-point feasibility check."""

    points: Tuple[np.ndarray, ...]
    probs: np.ndarray
    witness: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        pts = tuple(np.asarray(x, dtype=float).ravel() for x in self.points)
        probs = np.asarray(self.probs, dtype=float).ravel()
        if len(pts) == 0 or len(pts) != probs.size:
            raise GameError("support and probabilities must be nonempty and of equal length")
        if np.any(probs <= 0):
            raise GameError("support probabilities must be positive")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise GameError(f"probabilities sum to {probs.sum()!r}, not 1")
        if len({x.size for x in pts}) != 1:
            raise GameError("support points have different lengths")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def pure(cls, x, player: Optional[Player] = None):
        return cls.build([x], [1.0], player)

    @classmethod
    def build(cls, points, weights, player: Optional[Player] = None, drop: float = 0.0):
        """Normalise ``weights``, drop entries ``<= drop``, merge duplicate points, check feasibility."""
        pts, ws = [], []
        for x, w in zip(points, weights):
            if w <= drop:
                continue
            x = np.asarray(x, dtype=float).ravel()
            for k, y in enumerate(pts):
                if np.abs(x - y).max(initial=0.0) <= 1e-12:
                    ws[k] += w
                    break
            else:
                pts.append(x)
                ws.append(float(w))
        if not pts:
            raise GameError("no support point with positive weight")
        probs = np.asarray(ws) / np.sum(ws)
        witness = None
        if player is not None:
            witness = tuple(feasibility_witness(player, x) for x in pts)
        return cls(tuple(pts), probs, witness)

    @property
    def mean(self) -> np.ndarray:
        return np.tensordot(self.probs, np.vstack(self.points), axes=1)

    @property
    def size(self) -> int:
        return len(self.points)


def feasibility_witness(player: Player, x) -> str:
    """A short record of why ``x`` is feasible for ``player``; raises if it is not."""
    msg = player.region.violation(x)
    if msg is not None:
        raise InfeasibleSupport(msg)
    if player.int_idx:
        return f"integral on {len(player.int_idx)} coordinates; all rows hold"
    return "all rows hold"


@dataclass(frozen=True)
class Profile:
    strategies: Tuple[MixedStrategy, ...]

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))

    def __len__(self):
        return len(self.strategies)

    def __getitem__(self, i):
        return self.strategies[i]

    def means(self) -> List[np.ndarray]:
        return [s.mean for s in self.strategies]

    @classmethod
    def pure(cls, blocks, game: Optional[Game] = None):
        players = game.players if game is not None else [None] * len(blocks)
        return cls(tuple(MixedStrategy.pure(x, p) for x, p in zip(blocks, players)))


def _check_profile(g: Game, p: Profile):
    if len(p) != g.n:
        raise GameError(f"profile has {len(p)} strategies for {g.n} players")
    for i, s in enumerate(p.strategies):
        if s.points[0].size != g.dims[i]:
            raise GameError(f"player {i}: strategy dimension {s.points[0].size}, expected {g.dims[i]}")


def pure_payoff(g: Game, i: int, x, native: bool = False) -> float:
    """Cost of player ``i`` at the pure profile ``x`` (full vector or block list).

    Canonical minimisation cost by default; ``native=True`` reports it in
    the game's own sense.
    """
    blocks = g.split(x) if not isinstance(x, (list, tuple)) else [np.asarray(b, dtype=float) for b in x]
    c, C = g.cost_data(i)
    own = blocks[i]
    val = float(c @ own + g.opponents(i, blocks) @ C @ own)
    return g.to_native(val) if native else val


def parametrized_cost(g: Game, i: int, opp, native: bool = False) -> np.ndarray:
    """Linear cost of player ``i`` once the opponents' (mean) strategies are fixed."""
    c, C = g.cost_data(i)
    vec = c + C.T @ np.asarray(opp, dtype=float)
    return g.to_native(vec) if native else vec


def expected_payoff(g: Game, i: int, p: Profile, native: bool = False) -> float:
    """Expected cost of player ``i``; bilinearity lets the means stand in for the distributions."""
    _check_profile(g, p)
    means = p.means()
    val = float(parametrized_cost(g, i, g.opponents(i, means)) @ means[i])
    return g.to_native(val) if native else val


@dataclass
class BestResponse:
    status: str
    point: Optional[np.ndarray]
    value: Optional[float]
    ray: Optional[np.ndarray] = None

    @property
    def bounded(self):
        return self.status == OPTIMAL


def best_response(g: Game, i: int, opp, tol: float = 1e-9) -> BestResponse:
    """Minimise player ``i``'s canonical parametrized cost over its feasible set."""
    cost = parametrized_cost(g, i, opp)
    res = g.players[i].region.optimize(cost, "min")
    if res.status == OPTIMAL:
        return BestResponse(OPTIMAL, res.x, float(cost @ res.x))
    if res.status == UNBOUNDED:
        return BestResponse(UNBOUNDED, res.x, -np.inf, res.ray)
    return BestResponse(res.status, None, None)


@dataclass
class EquilibriumReport:
    regrets: List[float]
    eps: float
    is_equilibrium: bool
    best_values: List[Optional[float]]
    expected: List[float]
    rejection: Optional[str] = None
    tolerance: str = "absolute"

    @property
    def max_regret(self) -> float:
        return max(self.regrets) if self.regrets else 0.0


def verify_equilibrium(g: Game, p: Profile, eps: float = DEFAULT_EPS) -> EquilibriumReport:
    """Per-player regret against a pure best response; equilibrium iff every regret is at most ``eps``.

    Support points are re-checked against the players' sets first; an
    infeasible one rejects the profile with the violated requirement.
    """
    _check_profile(g, p)
    for i, s in enumerate(p.strategies):
        for k, x in enumerate(s.points):
            msg = g.players[i].region.violation(x)
            if msg is not None:
                rej = f"player {i}, support point {k}: {msg}"
                return EquilibriumReport([np.inf] * g.n, eps, False, [None] * g.n,
                                         [np.nan] * g.n, rejection=rej)
    means = p.means()
    regrets, best, exp = [], [], []
    for i in range(g.n):
        e = expected_payoff(g, i, p)
        br = best_response(g, i, g.opponents(i, means))
        exp.append(e)
        if br.status == OPTIMAL:
            best.append(br.value)
            regrets.append(e - br.value)
        elif br.status == UNBOUNDED:
            best.append(-np.inf)
            regrets.append(np.inf)
        else:
            best.append(None)
            regrets.append(np.inf)
    ok = bool(all(r <= eps for r in regrets))
    return EquilibriumReport(regrets, eps, ok, best, exp)


def welfare(g: Game, p: Profile, native: bool = True) -> float:
    """Sum of the players' expected payoffs."""
    return float(sum(expected_payoff(g, i, p, native) for i in range(g.n)))


__all__ = [
    "DEFAULT_EPS",
    "GameError",
    "InfeasibleSupport",
    "MilpRegion",
    "Player",
    "Game",
    "MixedStrategy",
    "Profile",
    "BestResponse",
    "EquilibriumReport",
    "pure_payoff",
    "expected_payoff",
    "parametrized_cost",
    "best_response",
    "verify_equilibrium",
    "welfare",
    "feasibility_witness",
    "INFEASIBLE",
]
