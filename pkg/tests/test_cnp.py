import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutplay.baselines import enumerate_pure, oracle_verify
from cutplay.cnp import (
    EQUILIBRIUM,
    NO_EQUILIBRIUM,
    PAG_SOLVED,
    ApproxState,
    CnpConfig,
    CnpError,
    build_pag_lcp,
    branch_or_cut,
    cover_cut,
    cut_and_play,
    is_unstable,
    solve_pag,
)
from cutplay.game import Game, Player, parametrized_cost
from cutplay.geometry import Cut, Polyhedron, contains, project_bounds
from cutplay.instances import (
    coordination_game,
    example4,
    game_from_doc,
    generate_knapsack,
    knapsack_game,
    matching_pennies_game,
    unbounded_player_game,
)
from cutplay.solvers.lcp import solve_lcp_enumerate

EPS = 3e-5


def _knap_player(w, cap, c=None):
    m = len(w)
    return Player(c if c is not None else np.zeros(m), np.zeros((m, m)), Polyhedron([w], [cap]), tuple(range(m)),
                  (np.zeros(m), np.ones(m)))


def test_config_validation():
    with pytest.raises(ValueError):
        CnpConfig(eps=0.0)
    with pytest.raises(ValueError):
        CnpConfig(objective="Z")
    with pytest.raises(ValueError):
        CnpConfig(cuts=2)


def test_example4_lcp():
    g = example4()
    s = ApproxState.initial(g)
    p = build_pag_lcp(g, s)
    assert p.dim == 5
    en = solve_lcp_enumerate(p)
    assert en.complete and len(en.solutions) == 1
    z = en.solutions[0]
    assert np.allclose(z[:2], [1, 1])
    assert np.allclose(z[2:], [1, 1, 0])


def test_single_player_lcp_is_lp_kkt():
    p = Player([-1.0, -2.0], np.zeros((0, 2)), Polyhedron([[1.0, 1.0], [1.0, 3.0]], [4.0, 6.0]))
    g = Game([p])
    s = ApproxState.initial(g)
    pag = solve_pag(g, s, CnpConfig())
    # the LP max x1 + 2 x2 on this polytope peaks at (3, 1)
    assert np.allclose(pag.blocks[0], [3.0, 1.0])


def test_knapsack_relaxation_lcp_matches_grid():
    g = game_from_doc(generate_knapsack(2, 2, 4))
    s = ApproxState.initial(g)
    pag = solve_pag(g, s, CnpConfig())
    assert pag.status == PAG_SOLVED
    grid = [np.array(p) for p in itertools.product(np.arange(65) / 64, repeat=2)]
    for i in range(2):
        cost = parametrized_cost(g, i, g.opponents(i, pag.blocks))
        assert contains(s.polys[i], pag.blocks[i], 1e-7)
        feasible = [x for x in grid if contains(s.polys[i], x)]
        assert cost @ pag.blocks[i] <= min(cost @ x for x in feasible) + 1e-9


def test_solve_pag_example4():
    g = example4()
    pag = solve_pag(g, ApproxState.initial(g), CnpConfig())
    assert pag.status == PAG_SOLVED
    assert np.allclose(np.concatenate(pag.blocks), [1, 1])


def test_variant_example4_has_pure_equilibrium():
    # with player 2 maximising x*xi, xi = 2 answers x = 1 and x = 1 answers xi = 2
    g = example4(variant=True)
    for backend in ("lemke", "enumerate"):
        pag = solve_pag(g, ApproxState.initial(g), CnpConfig(backend=backend))
        assert pag.status == PAG_SOLVED
        assert np.allclose(np.concatenate(pag.blocks), [1, 2])


def test_mode_q_picks_best_welfare():
    g = coordination_game()
    pag = solve_pag(g, ApproxState.initial(g), CnpConfig(objective="Q"))
    assert len(pag.alternatives) >= 2
    assert pag.welfare >= max(pag.alternatives) - 1e-12
    assert np.allclose(np.concatenate(pag.blocks), [1, 1])


def test_branch_binary_midpoint():
    g = knapsack_game([[1, 1], [1, 1]], [[1, 1], [1, 1]], [2, 2], [[None, [0, 0]], [[0, 0], None]])
    s = ApproxState.initial(g)
    new = branch_or_cut(g, s, 0, [0.5, 0.0])
    P = new.polys[0]
    assert new.branches[0] == ((0, 0.0),)
    assert contains(P, [0.5, 0.5])
    assert contains(P, [1.0, 1.0]) and contains(P, [0.0, 1.0])
    # projection keeps the whole box: each slice x0 = 0 and x0 = 1 is a full edge
    assert project_bounds(P, [1, 1]) == pytest.approx(2.0)


def test_branch_continuous_player_has_no_candidates():
    g = example4()
    assert branch_or_cut(g, ApproxState.initial(g), 0) is None
    assert branch_or_cut(g, ApproxState.initial(g), 1, [1.5]) is None


def test_branching_alone_keeps_interior():
    p = Player([1.0], [[0.0]], Polyhedron.box([0], [2]), (0,), ([0], [2]))
    q = Player([0.0], [[0.0]], Polyhedron.box([0], [1]))
    g = Game([p, q])
    new = branch_or_cut(g, ApproxState.initial(g), 0, [0.5])
    P = new.polys[0]
    assert project_bounds(P, [1.0]) == pytest.approx(2.0)
    assert -project_bounds(P, [-1.0]) == pytest.approx(0.0)
    assert contains(P, [0.5])


def test_cover_cut_examples():
    c = cover_cut(_knap_player([3, 3], 4), [0.7, 0.7])
    assert np.array_equal(c.pi, [1.0, 1.0]) and c.pi0 == 1.0 and c.provenance == "cover-cut"
    assert cover_cut(_knap_player([3, 3], 4), [1.0, 0.0]) is None
    assert cover_cut(_knap_player([2, 2], 4), [0.9, 0.9]) is None


def test_unstable_cut_detection():
    assert is_unstable(Cut([1.0, 1e-7], 1.0))
    assert not is_unstable(Cut([1.0, 0.5], 1.0))
    assert not is_unstable(Cut([1.0, 0.0], 1.0))


def test_cnp_example4():
    r = cut_and_play(example4())
    assert r.outcome == EQUILIBRIUM
    assert np.allclose(np.concatenate(r.profile.means()), [1, 1])
    assert r.stats["branches"] == 0
    assert r.report.max_regret <= 1e-7


def test_cnp_unbounded_player_has_no_equilibrium():
    r = cut_and_play(unbounded_player_game())
    assert r.outcome == NO_EQUILIBRIUM
    assert r.refutation


def test_cnp_matching_pennies_mixes():
    r = cut_and_play(matching_pennies_game())
    assert r.outcome == EQUILIBRIUM
    assert np.allclose([m[0] for m in r.profile.means()], [0.5, 0.5], atol=1e-7)


def test_cnp_empty_player_rejected():
    p = Player([0.0], [[0.0]], Polyhedron([[1.0]], [-1.0]))
    q = Player([0.0], [[0.0]], Polyhedron.box([0], [1]))
    with pytest.raises(CnpError):
        cut_and_play(Game([p, q]))


def test_cnp_iteration_budget_maps_to_time_limit():
    g = game_from_doc(generate_knapsack(2, 6, 1))
    r = cut_and_play(g, CnpConfig(max_iterations=1))
    assert r.outcome in (EQUILIBRIUM, "TimeLimit")
    if r.outcome == "TimeLimit":
        assert "budget" in r.message


def test_cnp_log_records():
    r = cut_and_play(matching_pennies_game())
    assert [rec["t"] for rec in r.log] == list(range(1, len(r.log) + 1))
    for rec in r.log:
        assert "lcp_status" in rec


def _check_run(g, r):
    cats = [enumerate_pure(p) for p in g.players]
    for i, cuts in enumerate(r.state.cuts):
        for c in cuts:
            k = g.dims[i]
            for x in cats[i]:
                assert float(c.pi[:k] @ x) <= c.pi0 + 1e-7
    if r.outcome == EQUILIBRIUM:
        assert oracle_verify(g, r.profile, EPS).is_equilibrium
        means = r.profile.means()
        for i, s in enumerate(r.profile.strategies):
            cost = parametrized_cost(g, i, g.opponents(i, means))
            val = float(cost @ means[i])
            for x in s.points:
                assert abs(float(cost @ x) - val) <= EPS


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4), st.sampled_from([-1, 0, 1]))
def test_cnp_random_knapsack(seed, m, cuts):
    g = game_from_doc(generate_knapsack(2, m, seed))
    r = cut_and_play(g, CnpConfig(cuts=cuts, time_limit=60))
    assert r.outcome == EQUILIBRIUM
    assert r.stats["iterations"] <= CnpConfig().max_iterations
    _check_run(g, r)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 3))
def test_cnp_random_knapsack_mode_q(seed, m):
    g = game_from_doc(generate_knapsack(2, m, seed))
    r = cut_and_play(g, CnpConfig(objective="Q", time_limit=60))
    assert r.outcome == EQUILIBRIUM
    _check_run(g, r)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_refinements_only_shrink(seed):
    rng = np.random.default_rng(seed)
    g = game_from_doc(generate_knapsack(2, 3, seed))
    s = ApproxState.initial(g)
    dirs = rng.normal(size=(8, 3))
    prev = [project_bounds(s.polys[0], d) for d in dirs]
    for _ in range(4):
        if rng.random() < 0.5:
            new = branch_or_cut(g, s, 0, rng.uniform(0, 1, 3))
            if new is None:
                continue
            s = new
        else:
            x = enumerate_pure(g.players[0])
            pi = rng.normal(size=3)
            s = s.with_cut(0, Cut(pi, max(float(pi @ v) for v in x)))
        cur = [project_bounds(s.polys[0], d) for d in dirs]
        assert all(c <= p + 1e-7 for c, p in zip(cur, prev))
        prev = cur
