"""Cut-and-Play: outer-approximate every player's convex hull until the approximate game's
pure equilibrium is certified to be a mixed equilibrium of the original game.

Each iteration solves the complementarity system of the polyhedral
approximate game, then asks every player's separation oracle whether its
strategy lies in the convex hull of its true feasible set. Cuts refine the
approximations; when the approximate game has no equilibrium, the
approximations are split by disjunctive branching.
"""
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from cutplay.game import (
    DEFAULT_EPS,
    Game,
    MilpRegion,
    MixedStrategy,
    Player,
    Profile,
    parametrized_cost,
    verify_equilibrium,
)
from cutplay.geometry import (
    COVER_CUT,
    ESO_CUT,
    VALUE_CUT,
    Cut,
    Polyhedron,
    add_cut,
    balas_union,
    intersect_row,
    project_bounds,
)
from cutplay.oracle import OracleError, PointRayStore, enhanced_separation, repair
from cutplay.solvers.lcp import (
    SOLVED,
    LcpProblem,
    solve_lcp_enumerate,
    solve_lcp_lemke,
)
from cutplay.solvers.milp import INT_TOL

log = logging.getLogger("cutplay.cnp")

EQUILIBRIUM = "Equilibrium"
NO_EQUILIBRIUM = "NoEquilibrium"
TIME_LIMIT = "TimeLimit"
NUMERIC_FAILURE = "NumericFailure"

# approximate-game solve outcomes
PAG_SOLVED = "solved"
PAG_NONE = "no-solution"
PAG_UNKNOWN = "budget-exhausted"
PAG_FAILED = "numeric-failure"

UNSTABLE_RANGE = 1e6
UNSTABLE_SMALL = 1e-9
BRANCH_STREAK = 3
MAX_LIFTED_VARS = 4000


class CnpError(RuntimeError):
    pass


@dataclass
class CnpConfig:
    eps: float = DEFAULT_EPS
    time_limit: float = 300.0
    objective: str = "F"
    cuts: int = 0
    backend: str = "lemke"
    max_iterations: int = 2000
    lcp_node_budget: int = 20000
    q_node_budget: int = 2000
    lemke_pivots: int = 20000
    lemke_retries: int = 8
    repair_rounds: int = 60
    harvest: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.objective not in ("F", "Q"):
            raise ValueError("objective mode must be 'F' or 'Q'")
        if self.cuts not in (-1, 0, 1):
            raise ValueError("cut aggressiveness must be -1, 0 or 1")
        if self.backend not in ("lemke", "enumerate"):
            raise ValueError("LCP backend must be 'lemke' or 'enumerate'")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ApproxState:
    """Per-player outer approximations plus the cut and branching history that produced them."""

    polys: Tuple[Polyhedron, ...]
    cuts: Tuple[Tuple[Cut, ...], ...]
    branches: Tuple[Tuple[Tuple[int, float], ...], ...]

    @classmethod
    def initial(cls, g: Game) -> "ApproxState":
        polys = []
        for i, p in enumerate(g.players):
            P = p.region.relaxation().check_feasible()
            if P.empty:
                raise CnpError(f"player {i} has an empty feasible set")
            if not P.nonneg:
                raise CnpError(f"player {i}: approximations must live in the nonnegative orthant")
            polys.append(P)
        n = g.n
        return cls(tuple(polys), tuple(() for _ in range(n)), tuple(() for _ in range(n)))

    def with_cut(self, i: int, c: Cut) -> "ApproxState":
        polys = list(self.polys)
        polys[i] = add_cut(polys[i], c)
        cuts = list(self.cuts)
        cuts[i] = cuts[i] + (c,)
        return ApproxState(tuple(polys), tuple(cuts), self.branches)

    def with_poly(self, i: int, P: Polyhedron, branch) -> "ApproxState":
        polys = list(self.polys)
        polys[i] = P
        branches = list(self.branches)
        branches[i] = branches[i] + (branch,)
        return ApproxState(tuple(polys), self.cuts, tuple(branches))


@dataclass
class PagSolution:
    status: str
    blocks: Optional[List[np.ndarray]] = None
    z: Optional[np.ndarray] = None
    welfare: Optional[float] = None
    alternatives: List[float] = field(default_factory=list)
    message: str = ""
    pivots: int = 0


@dataclass
class CnpResult:
    outcome: str
    profile: Optional[Profile] = None
    certificates: Optional[list] = None
    report: Optional[object] = None
    welfare: Optional[float] = None
    stats: dict = field(default_factory=dict)
    message: str = ""
    refutation: List[str] = field(default_factory=list)
    config: Optional[CnpConfig] = None
    state: Optional[ApproxState] = None
    log: List[dict] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.outcome == EQUILIBRIUM


def build_pag_lcp(g: Game, s: ApproxState) -> LcpProblem:
    """Stack every player's KKT conditions over its approximation into one LCP.

    ``z = (sigma_1, ..., sigma_n, mu_1, ..., mu_n)``; the block for
    ``sigma_i`` is ``c_i + C_i^T sigma_-i + A_i^T mu_i`` and the block for
    ``mu_i`` is ``b_i - A_i sigma_i``. Lifted coordinates have zero payoff.
    """
    n = g.n
    sizes = [P.num_vars for P in s.polys]
    rows = [P.num_rows for P in s.polys]
    for i, P in enumerate(s.polys):
        if P.empty:
            raise CnpError(f"player {i}: approximation is empty")
    soff = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    moff = soff[-1] + np.concatenate([[0], np.cumsum(rows)]).astype(int)
    N = int(moff[-1])
    M = np.zeros((N, N))
    q = np.zeros(N)
    for i, P in enumerate(s.polys):
        c, C = g.cost_data(i)
        k = g.dims[i]
        si = soff[i]
        q[si:si + k] = c
        r0 = 0
        for j in range(n):
            if j == i:
                continue
            kj = g.dims[j]
            M[si:si + k, soff[j]:soff[j] + kj] = C[r0:r0 + kj].T
            r0 += kj
        mi = moff[i]
        M[si:si + sizes[i], mi:mi + rows[i]] = P.A.T
        M[mi:mi + rows[i], si:si + sizes[i]] = -P.A
        q[mi:mi + rows[i]] = P.b
    return LcpProblem(M, q)


def _blocks(g: Game, s: ApproxState, z):
    off = 0
    out = []
    for i, P in enumerate(s.polys):
        out.append(np.asarray(z[off:off + g.dims[i]], dtype=float).copy())
        off += P.num_vars
    return out


def pag_welfare(g: Game, blocks) -> float:
    """Sum of the players' native-sense payoffs at the pure profile ``blocks``."""
    total = 0.0
    for i in range(g.n):
        opp = g.opponents(i, list(blocks))
        total += float(parametrized_cost(g, i, opp) @ blocks[i])
    return float(g.to_native(total))


def _better(g: Game, a: float, b: float) -> bool:
    # welfare in native sense: max games prefer larger payoffs, min games smaller costs
    return a > b if g.sense == "max" else a < b


def solve_pag(g: Game, s: ApproxState, cfg: CnpConfig, deadline: Optional[float] = None) -> PagSolution:
    """A pure equilibrium of the approximate game, chosen per the objective mode.

    ``deadline`` (a ``time.perf_counter`` value) stops the enumerator early.
    """
    p = build_pag_lcp(g, s)
    if cfg.objective == "Q":
        # welfare selection scans a capped tree; the best solution met so far is kept
        en = solve_lcp_enumerate(p, node_budget=cfg.q_node_budget, deadline=deadline)
        if not en.solutions:
            if en.complete:
                return PagSolution(PAG_NONE, message=f"enumeration: {en.nodes} nodes, complete")
            # nothing met within the cap: settle for the first equilibrium the F path finds
            out = _first_solution(g, s, p, cfg, deadline)
            out.message = f"welfare scan: {en.nodes} nodes, none found; " + out.message
            return out
        scored = [(pag_welfare(g, _blocks(g, s, z)), k, z) for k, z in enumerate(en.solutions)]
        best = scored[0]
        for cand in scored[1:]:
            if _better(g, cand[0], best[0]):
                best = cand
        w, _, z = best
        return PagSolution(PAG_SOLVED, _blocks(g, s, z), z, w, [sc[0] for sc in scored],
                           message=f"{len(scored)} solutions, complete={en.complete}")
    return _first_solution(g, s, p, cfg, deadline)


def _first_solution(g: Game, s: ApproxState, p: LcpProblem, cfg: CnpConfig,
                    deadline: Optional[float] = None) -> PagSolution:
    if cfg.backend == "lemke":
        out = solve_lcp_lemke(p, max_pivots=cfg.lemke_pivots)
        pivots = out.pivots
        notes = [f"lemke: {out.status}"]
        rng = np.random.default_rng(cfg.seed)
        tries = 0
        while out.status != SOLVED and tries < cfg.lemke_retries:
            if deadline is not None and time.perf_counter() > deadline:
                break
            tries += 1
            out = solve_lcp_lemke(p, max_pivots=cfg.lemke_pivots, cover=rng.uniform(0.5, 2.0, p.dim))
            pivots += out.pivots
            notes.append(f"lemke retry {tries}: {out.status}")
        if out.status == SOLVED:
            z = out.z
            return PagSolution(PAG_SOLVED, _blocks(g, s, z), z, pag_welfare(g, _blocks(g, s, z)),
                               message="; ".join(notes), pivots=pivots)
    else:
        notes = []
        pivots = 0
    en = solve_lcp_enumerate(p, node_budget=cfg.lcp_node_budget, max_solutions=1, deadline=deadline)
    notes.append(f"enumeration: {en.nodes} nodes, complete={en.complete}")
    if en.solutions:
        z = en.solutions[0]
        return PagSolution(PAG_SOLVED, _blocks(g, s, z), z, pag_welfare(g, _blocks(g, s, z)),
                           message="; ".join(notes), pivots=pivots)
    if en.complete:
        return PagSolution(PAG_NONE, message="; ".join(notes), pivots=pivots)
    return PagSolution(PAG_UNKNOWN, message="; ".join(notes), pivots=pivots)


def _split_candidates(P: Polyhedron, player: Player, done):
    """Integer split points ``(j, t)`` meaning ``x_j <= t  or  x_j >= t + 1`` not yet used."""
    out = []
    for j in player.int_idx:
        e = np.zeros(P.orig_dim)
        e[j] = 1.0
        hi = project_bounds(P, e)
        lo = -project_bounds(P, -e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            continue
        for t in range(int(np.ceil(lo - INT_TOL)), int(np.floor(hi + INT_TOL))):
            if (j, float(t)) not in done:
                out.append((j, float(t)))
    return out


def branch_or_cut(g: Game, s: ApproxState, i: int, sigma_tilde=None) -> Optional[ApproxState]:
    """Split player ``i``'s approximation on an integer coordinate and keep the lifted hull.

    With ``sigma_tilde`` the most fractional coordinate is used; otherwise
    the lowest-index split point not used before. Returns None when no
    candidate remains.
    """
    player = g.players[i]
    if not player.int_idx:
        return None
    P = s.polys[i]
    done = set(s.branches[i])
    choice = None
    if sigma_tilde is not None:
        x = np.asarray(sigma_tilde, dtype=float)
        frac = [(abs(x[j] - round(x[j])), j) for j in player.int_idx]
        best = max(frac, key=lambda f: (round(f[0], 9), -f[1]))
        if best[0] > INT_TOL:
            j = best[1]
            choice = (j, float(np.floor(x[j])))
    if choice is None:
        cands = _split_candidates(P, player, done)
        if not cands:
            return None
        choice = cands[0]
    j, t = choice
    if P.num_vars * 2 + 1 > MAX_LIFTED_VARS:
        return None
    e = np.zeros(P.num_vars)
    e[j] = 1.0
    Y = intersect_row(P, e, t).check_feasible()
    Z = intersect_row(P, -e, -(t + 1)).check_feasible()
    if Y.empty and Z.empty:
        raise CnpError(f"player {i}: both sides of the split on x[{j}] are empty")
    if Y.empty:
        new = Z
    elif Z.empty:
        new = Y
    else:
        new = balas_union(Y, Z)
    return s.with_poly(i, new, (j, t))


def is_knapsack_player(player: Player) -> bool:
    if player.feas.num_rows != 1 or len(player.int_idx) != player.dim:
        return False
    if player.var_bounds is None:
        return False
    lo, hi = player.var_bounds
    return bool(np.all(lo == 0) and np.all(hi == 1) and np.all(player.feas.A[0] >= 0))


def cover_cut(player: Player, xbar, eps: float = DEFAULT_EPS) -> Optional[Cut]:
    """Minimal knapsack cover inequality violated by ``xbar`` by more than ``eps / 2``."""
    if not is_knapsack_player(player):
        return None
    w = player.feas.A[0]
    cap = player.feas.b[0]
    x = np.asarray(xbar, dtype=float)
    if w.sum() <= cap:
        return None
    order = sorted(range(x.size), key=lambda j: (-x[j], j))
    cover, total = [], 0.0
    for j in order:
        cover.append(j)
        total += w[j]
        if total > cap:
            break
    if total <= cap:
        return None
    # drop low-xbar items while the set stays a cover
    for j in sorted(cover, key=lambda j: (x[j], -j)):
        if total - w[j] > cap:
            cover.remove(j)
            total -= w[j]
    rhs = len(cover) - 1
    if x[cover].sum() <= rhs + eps / 2:
        return None
    pi = np.zeros(x.size)
    pi[cover] = 1.0
    return Cut(pi, float(rhs), COVER_CUT)


def is_unstable(c: Cut) -> bool:
    a = np.abs(c.pi)
    nz = a[a > 0]
    top = a.max()
    return bool(top / nz.min() > UNSTABLE_RANGE or nz.min() < UNSTABLE_SMALL * top)


def _emit(result: CnpResult, rec: dict):
    result.log.append(rec)
    if log.isEnabledFor(logging.INFO):
        log.info(json.dumps(rec, sort_keys=True, default=float))


def _fully_refined(g: Game, s: ApproxState) -> bool:
    """Every approximation is known to equal the closed convex hull of its player's set."""
    for i, p in enumerate(g.players):
        if not p.int_idx:
            if not isinstance(p.region, MilpRegion):
                return False
            continue
        lo, hi = p.var_bounds
        binary = all(lo[j] >= 0 and hi[j] <= 1 for j in p.int_idx)
        if not binary or len(p.int_idx) != p.dim:
            return False
        used = {j for j, _ in s.branches[i]}
        if used != set(p.int_idx):
            return False
    return True


def cut_and_play(g: Game, cfg: Optional[CnpConfig] = None) -> CnpResult:
    cfg = cfg or CnpConfig()
    t0 = time.perf_counter()
    stats = {"iterations": 0, "cuts": 0, "eso_cuts": 0, "value_cuts": 0, "cover_cuts": 0,
             "branches": 0, "oracle_iterations": 0, "max_oracle_iterations": 0,
             "lcp_pivots": 0, "repairs": 0, "time": 0.0}
    result = CnpResult(NUMERIC_FAILURE, stats=stats, config=cfg)
    s = ApproxState.initial(g)
    stores = [PointRayStore(p.region) for p in g.players]
    streak = [0] * g.n
    last = [None] * g.n

    def finish(outcome, message=""):
        stats["time"] = time.perf_counter() - t0
        result.outcome = outcome
        result.message = message
        result.state = s
        return result

    while True:
        if time.perf_counter() - t0 > cfg.time_limit:
            return finish(TIME_LIMIT, "time limit reached")
        if stats["iterations"] >= cfg.max_iterations:
            return finish(TIME_LIMIT, "iteration budget exhausted")
        stats["iterations"] += 1
        it = stats["iterations"]
        rec = {"t": it}
        try:
            pag = solve_pag(g, s, cfg, t0 + cfg.time_limit)
        except (ValueError, CnpError) as exc:
            return finish(NUMERIC_FAILURE, f"approximate game: {exc}")
        stats["lcp_pivots"] += pag.pivots
        rec["lcp_status"] = pag.status
        if pag.status == PAG_FAILED:
            _emit(result, rec)
            return finish(NUMERIC_FAILURE, pag.message)
        if pag.status == PAG_UNKNOWN:
            _emit(result, rec)
            return finish(TIME_LIMIT, f"complementarity search budget exhausted ({pag.message})")
        if pag.status == PAG_NONE:
            result.refutation.append(f"iteration {it}: approximate game has no pure equilibrium ({pag.message})")
            refined = False
            for i in range(g.n):
                new = branch_or_cut(g, s, i)
                if new is not None:
                    s = new
                    stats["branches"] += 1
                    rec["branch"] = {"player": i, "split": list(s.branches[i][-1])}
                    refined = True
                    break
            _emit(result, rec)
            if refined:
                continue
            if _fully_refined(g, s):
                result.refutation.append("every approximation equals its player's closed convex hull")
                return finish(NO_EQUILIBRIUM, "no branching candidates remain")
            return finish(NUMERIC_FAILURE, "refinement exhausted without an exactness certificate")

        blocks = pag.blocks
        rec["welfare"] = pag.welfare
        answers, eo_iters, certs, new_cuts = [], [], [None] * g.n, []
        try:
            for i in range(g.n):
                player = g.players[i]
                c = parametrized_cost(g, i, g.opponents(i, blocks))
                sep = enhanced_separation(blocks[i], player.region, cfg.eps, c, stores[i], cfg.harvest)
                stats["oracle_iterations"] += sep.iterations
                stats["max_oracle_iterations"] = max(stats["max_oracle_iterations"], sep.iterations)
                answers.append(sep.answer)
                eo_iters.append(sep.iterations)
                if sep.member:
                    certs[i] = sep.certificate
                    continue
                cut = sep.cut
                if cut.provenance == VALUE_CUT and cfg.cuts == 0 and is_unstable(cut):
                    alt = cover_cut(player, blocks[i], cfg.eps)
                    if alt is None:
                        alt_sep = enhanced_separation(blocks[i], player.region, cfg.eps, None, stores[i],
                                                      cfg.harvest)
                        stats["oracle_iterations"] += alt_sep.iterations
                        alt = alt_sep.cut
                    if alt is not None:
                        cut = alt
                new_cuts.append((i, cut))
                if cfg.cuts == 1:
                    cov = cover_cut(player, blocks[i], cfg.eps)
                    if cov is not None:
                        new_cuts.append((i, cov))
        except OracleError as exc:
            _emit(result, rec)
            return finish(NUMERIC_FAILURE, f"separation oracle: {exc}")
        rec["oracle"] = answers
        rec["oracle_iterations"] = eo_iters

        if not new_cuts:
            _emit(result, rec)
            return _conclude(g, cfg, result, certs, blocks, stats, finish)

        rec["cuts"] = [{"player": i, "provenance": c.provenance} for i, c in new_cuts]
        if log.isEnabledFor(logging.DEBUG):
            rec["cut_data"] = [{"player": i, "pi": c.pi.tolist(), "pi0": c.pi0} for i, c in new_cuts]
        cut_players = set()
        for i, c in new_cuts:
            s = s.with_cut(i, c)
            stats["cuts"] += 1
            key = {ESO_CUT: "eso_cuts", VALUE_CUT: "value_cuts", COVER_CUT: "cover_cuts"}.get(c.provenance)
            if key:
                stats[key] += 1
            cut_players.add(i)
        for i in range(g.n):
            moved = last[i] is None or np.abs(blocks[i] - last[i]).max(initial=0.0) > cfg.eps
            if i in cut_players and not moved:
                streak[i] += 1
            elif i in cut_players:
                streak[i] = 1
            else:
                streak[i] = 0
            last[i] = blocks[i]
            if streak[i] >= BRANCH_STREAK:
                new = branch_or_cut(g, s, i, blocks[i])
                if new is not None:
                    s = new
                    stats["branches"] += 1
                    rec.setdefault("branches", []).append({"player": i, "split": list(s.branches[i][-1])})
                streak[i] = 0
        _emit(result, rec)


def _conclude(g, cfg, result, certs, blocks, stats, finish):
    """Turn per-player certificates into a verified mixed profile."""
    strategies = []
    final = []
    for i, cert in enumerate(certs):
        if cert.has_rays:
            B0 = max(1.0, 2.0 * max(abs(float(r @ cert.point)) for r in cert.R))
            rep = repair(cert.point, g.players[i].region, cfg.eps, B0, cert, cfg.repair_rounds)
            stats["repairs"] += 1
            if not rep.ok:
                return finish(NUMERIC_FAILURE, f"player {i}: could not remove rays from the certificate")
            cert = rep.certificate
        final.append(cert)
        strategies.append(MixedStrategy.build(cert.V, cert.alpha, g.players[i], drop=1e-13))
    profile = Profile(tuple(strategies))
    report = verify_equilibrium(g, profile, cfg.eps)
    result.profile = profile
    result.certificates = final
    result.report = report
    result.welfare = float(sum(g.to_native(e) for e in report.expected))
    if not report.is_equilibrium:
        return finish(NUMERIC_FAILURE, f"certified profile failed verification (max regret {report.max_regret:.3g})")
    return finish(EQUILIBRIUM)


__all__ = [
    "CnpConfig",
    "CnpResult",
    "ApproxState",
    "PagSolution",
    "build_pag_lcp",
    "solve_pag",
    "branch_or_cut",
    "cover_cut",
    "cut_and_play",
    "pag_welfare",
    "is_unstable",
    "EQUILIBRIUM",
    "NO_EQUILIBRIUM",
    "TIME_LIMIT",
    "NUMERIC_FAILURE",
]
