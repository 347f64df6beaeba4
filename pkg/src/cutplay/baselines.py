"""Brute-force ground truth for small integer games.

Nothing here touches the LP, MILP or LCP kernels: feasible strategies are
enumerated lattice points, best responses are minima over those lists and
expected payoffs are sums over the product of the supports.
"""
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from cutplay.game import DEFAULT_EPS, EquilibriumReport, Game, MixedStrategy, Player, Profile

DEFAULT_CAP = 4096
FEAS_TOL = 1e-9


class EnumerationCapError(ValueError):
    """The player has more feasible points than the oracle is allowed to list."""


def _bounds(player: Player):
    if len(player.int_idx) != player.dim or player.var_bounds is None:
        raise EnumerationCapError("oracle mode needs every coordinate integer and bounded")
    lo, hi = player.var_bounds
    if not np.all(np.isfinite(hi)):
        raise EnumerationCapError("oracle mode needs finite upper bounds")
    return np.ceil(lo - 1e-9).astype(int), np.floor(hi + 1e-9).astype(int)


def enumerate_pure(player: Player, cap: int = DEFAULT_CAP) -> List[np.ndarray]:
    """All feasible lattice points of ``player``, first coordinate varying fastest."""
    lo, hi = _bounds(player)
    A, b = player.feas.A, player.feas.b
    k = player.dim
    if np.any(hi < lo):
        return []
    # smallest contribution each row can still get from coordinates j..k-1
    mins = np.minimum(A * lo, A * hi)
    rest = np.zeros((A.shape[0], k + 1))
    for j in range(k - 1, -1, -1):
        rest[:, j] = rest[:, j + 1] + mins[:, j]
    out: List[np.ndarray] = []
    x = lo.astype(float).copy()

    # depth-first over coordinates from last to first keeps the first one fastest
    def visit(j, partial):
        if j < 0:
            out.append(x.copy())
            if len(out) > cap:
                raise EnumerationCapError(f"more than {cap} feasible points; instance too large for oracle mode")
            return
        for v in range(lo[j], hi[j] + 1):
            x[j] = v
            p = partial + A[:, j] * v
            head = rest[:, 0] - rest[:, j]
            if np.all(p + head <= b + FEAS_TOL):
                visit(j - 1, p)
        x[j] = lo[j]

    # rows are checked with the optimistic bound on coordinates not yet fixed
    visit(k - 1, np.zeros(A.shape[0]))
    return out


@dataclass
class NormalForm:
    """``costs[i][a_1, ..., a_n]`` is player ``i``'s canonical cost at catalog indices ``a``."""

    catalogs: List[List[np.ndarray]]
    costs: List[np.ndarray]
    sense: str = "min"

    def __post_init__(self):
        shape = tuple(len(cat) for cat in self.catalogs)
        for i, t in enumerate(self.costs):
            if t.shape != shape:
                raise ValueError(f"cost tensor {i} has shape {t.shape}, catalogs give {shape}")

    @property
    def shape(self):
        return tuple(len(cat) for cat in self.catalogs)


def _point_cost(game: Game, i: int, blocks) -> float:
    # definitional evaluation: c_i x_i + sum_j x_j^T C_ij x_i, opponent blocks in order
    c, C = game.cost_data(i)
    own = blocks[i]
    val = float(c @ own)
    r = 0
    for j in range(game.n):
        if j == i:
            continue
        kj = game.dims[j]
        val += float(blocks[j] @ C[r:r + kj] @ own)
        r += kj
    return val


def to_normal_form(g: Game, caps=DEFAULT_CAP) -> NormalForm:
    if isinstance(caps, int):
        caps = [caps] * g.n
    cats = [enumerate_pure(p, cap) for p, cap in zip(g.players, caps)]
    shape = tuple(len(c) for c in cats)
    costs = [np.zeros(shape) for _ in range(g.n)]
    for idx in itertools.product(*[range(s) for s in shape]):
        blocks = [cats[i][a] for i, a in enumerate(idx)]
        for i in range(g.n):
            costs[i][idx] = _point_cost(g, i, blocks)
    return NormalForm(cats, costs, "min")


def _solve_indifference(P, tol):
    """Weights ``y >= 0, sum y = 1`` making every row of ``P`` equal; returns (y, value) or None."""
    k = P.shape[0]
    s = P.shape[1]
    M = np.zeros((k + 1, s + 1))
    M[:k, :s] = P
    M[:k, s] = -1.0
    M[k, :s] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.abs(M @ sol - rhs).max() > 1e-9:
        return None
    y = sol[:s]
    if y.min() < -tol:
        return None
    return np.maximum(y, 0.0), sol[s]


def support_enumeration_2p(nf: NormalForm, eps: float = 1e-9, max_equilibria: Optional[int] = None,
                           max_support: Optional[int] = None):
    """Equilibria ``(x, y)`` of a two-player cost game, scanning equal-size supports by size.

    Player 1 picks rows and pays ``A[row, col]``, player 2 picks columns and
    pays ``B[row, col]``; both minimise. Each returned pair is a
    probability vector over the respective catalog.
    """
    if len(nf.costs) != 2:
        raise ValueError("support enumeration is implemented for two players")
    A, B = nf.costs
    m, n = A.shape
    found = []
    top = min(m, n) if max_support is None else min(m, n, max_support)
    for k in range(1, top + 1):
        for rs in itertools.combinations(range(m), k):
            for cs in itertools.combinations(range(n), k):
                # y on cs makes player 1 indifferent over rs; x on rs does the same for player 2 over cs
                ry = _solve_indifference(A[np.ix_(rs, cs)], eps)
                if ry is None:
                    continue
                rx = _solve_indifference(B[np.ix_(rs, cs)].T, eps)
                if rx is None:
                    continue
                y = np.zeros(n)
                y[list(cs)] = ry[0]
                x = np.zeros(m)
                x[list(rs)] = rx[0]
                if (A @ y).min() < ry[1] - eps or (x @ B).min() < rx[1] - eps:
                    continue
                if any(np.abs(x - a).max() <= 1e-9 and np.abs(y - b).max() <= 1e-9 for a, b in found):
                    continue
                found.append((x, y))
                if max_equilibria is not None and len(found) >= max_equilibria:
                    return found
    return found


def profile_from_weights(nf: NormalForm, weights: Sequence[np.ndarray]) -> Profile:
    strategies = []
    for cat, w in zip(nf.catalogs, weights):
        keep = [a for a in range(len(cat)) if w[a] > 0]
        strategies.append(MixedStrategy.build([cat[a] for a in keep], [w[a] for a in keep]))
    return Profile(tuple(strategies))


def _integral_feasible(player: Player, x, tol=1e-7) -> Optional[str]:
    x = np.asarray(x, dtype=float)
    if x.size != player.dim:
        return f"point has {x.size} entries, expected {player.dim}"
    lo, hi = _bounds(player)
    for j in range(player.dim):
        if abs(x[j] - round(x[j])) > 1e-6:
            return f"coordinate {j} = {x[j]!r} is not integral"
        if x[j] < lo[j] - tol or x[j] > hi[j] + tol:
            return f"coordinate {j} = {x[j]!r} outside [{lo[j]}, {hi[j]}]"
    slack = player.feas.b - player.feas.A @ x
    if slack.size and slack.min() < -tol:
        k = int(np.argmin(slack))
        return f"row {k} violated by {-slack[k]:.3g}"
    return None


def oracle_verify(g: Game, p: Profile, eps: float = DEFAULT_EPS, cap: int = DEFAULT_CAP) -> EquilibriumReport:
    """Regrets by exhaustive best responses and product-support expectations."""
    if len(p) != g.n:
        raise ValueError(f"profile has {len(p)} strategies for {g.n} players")
    for i, s in enumerate(p.strategies):
        for k, x in enumerate(s.points):
            msg = _integral_feasible(g.players[i], x)
            if msg is not None:
                return EquilibriumReport([np.inf] * g.n, eps, False, [None] * g.n, [np.nan] * g.n,
                                         rejection=f"player {i}, support point {k}: {msg}")
    cats = [enumerate_pure(pl, cap) for pl in g.players]
    regrets, best, expected = [], [], []
    for i in range(g.n):
        opp = [j for j in range(g.n) if j != i]
        supports = [list(zip(p[j].points, p[j].probs)) for j in opp]
        exp_val = 0.0
        dev = np.zeros(len(cats[i]))
        for combo in itertools.product(*supports):
            prob = float(np.prod([w for _, w in combo]))
            blocks = [None] * g.n
            for j, (x, _) in zip(opp, combo):
                blocks[j] = x
            for x, w in zip(p[i].points, p[i].probs):
                blocks[i] = x
                exp_val += prob * w * _point_cost(g, i, blocks)
            for a, x in enumerate(cats[i]):
                blocks[i] = x
                dev[a] += prob * _point_cost(g, i, blocks)
        b = float(dev.min()) if dev.size else np.inf
        expected.append(exp_val)
        best.append(b)
        regrets.append(exp_val - b)
    return EquilibriumReport(regrets, eps, bool(all(r <= eps for r in regrets)), best, expected)


__all__ = [
    "NormalForm",
    "EnumerationCapError",
    "enumerate_pure",
    "to_normal_form",
    "support_enumeration_2p",
    "profile_from_weights",
    "oracle_verify",
]
