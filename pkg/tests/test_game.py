import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutplay.game import (
    Game,
    GameError,
    InfeasibleSupport,
    MixedStrategy,
    Player,
    Profile,
    best_response,
    expected_payoff,
    parametrized_cost,
    pure_payoff,
    verify_equilibrium,
)
from cutplay.geometry import Polyhedron
from cutplay.instances import example4, generate_knapsack, game_from_doc, knapsack_game


def _knap2(C1_diag):
    return knapsack_game([[3, 2], [1, 1]], [[1, 1], [1, 1]], [2, 2], [[None, C1_diag], [[0, 0], None]], "max")


def test_pure_payoff_example4():
    assert pure_payoff(example4(), 0, [np.array([1.0]), np.array([1.0])]) == pytest.approx(1.0)


def test_pure_payoff_zero_profile():
    g = _knap2([1, 1])
    assert pure_payoff(g, 0, np.zeros(4)) == 0.0


def test_pure_payoff_knapsack_max_form():
    g = _knap2([1, 1])
    assert pure_payoff(g, 0, [np.array([1.0, 0.0]), np.array([1.0, 1.0])], native=True) == pytest.approx(4.0)
    # canonical form is the negated cost
    assert pure_payoff(g, 0, [np.array([1.0, 0.0]), np.array([1.0, 1.0])]) == pytest.approx(-4.0)


def test_expected_singletons_equal_pure():
    g = _knap2([1, -1])
    x = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    p = Profile.pure(x, g)
    for i in range(2):
        assert expected_payoff(g, i, p) == pytest.approx(pure_payoff(g, i, x))


def test_expected_half_mix():
    box = Polyhedron.box([0], [1])
    p1 = Player([0.0], [[1.0]], box, (0,), ([0], [1]))
    p2 = Player([3.0], [[0.0]], box, (0,), ([0], [1]))
    g = Game([p1, p2])
    prof = Profile((MixedStrategy.build([[0.0], [1.0]], [0.5, 0.5], p1), MixedStrategy.pure([1.0], p2)))
    assert expected_payoff(g, 0, prof) == pytest.approx(0.5 * 1.0)


def test_parametrized_cost_examples():
    g = _knap2([0, 0])
    assert np.allclose(parametrized_cost(g, 0, [0.3, 0.7], native=True), [3, 2])
    assert np.allclose(parametrized_cost(example4(), 0, [1.0]), [1.0])
    g = _knap2([1, -1])
    assert np.allclose(parametrized_cost(g, 0, [1.0, 1.0], native=True), [4, 1])


def test_best_response_example4():
    br = best_response(example4(), 0, [1.0])
    assert br.bounded
    assert br.point[0] == pytest.approx(1.0) and br.value == pytest.approx(1.0)


def test_best_response_zero_cost():
    g = _knap2([0, 0])
    g.players[0].c[:] = 0.0
    br = best_response(g, 0, [0.0, 0.0])
    assert br.value == 0.0
    assert g.players[0].region.contains(br.point)


def test_best_response_matches_scan():
    g = game_from_doc(generate_knapsack(2, 3, 5))
    opp = np.array([0.5, 0.0, 1.0])
    br = best_response(g, 0, opp)
    cost = parametrized_cost(g, 0, opp)
    pts = [np.array(b, float) for b in itertools.product((0, 1), repeat=3)]
    best = min(float(cost @ x) for x in pts if g.players[0].region.contains(x))
    assert br.value == pytest.approx(best)


def test_best_response_unbounded():
    g = example4()
    p = g.players[0]
    g.players[0] = Player([0.0], [[-1.0]], p.feas)
    assert best_response(g, 0, [1.0]).status == "unbounded"


def test_verify_example4():
    g = example4()
    rep = verify_equilibrium(g, Profile.pure([np.array([1.0]), np.array([1.0])], g))
    assert rep.is_equilibrium
    assert np.allclose(rep.regrets, 0.0)
    rep = verify_equilibrium(g, Profile.pure([np.array([2.0]), np.array([1.0])], g))
    assert not rep.is_equilibrium
    assert rep.regrets[0] == pytest.approx(1.0)


def test_verify_single_player_optimum():
    p = Player([-1.0, -2.0], np.zeros((0, 2)), Polyhedron([[1.0, 1.0]], [1.0]), (0, 1), ([0, 0], [1, 1]))
    g = Game([p], "min")
    assert verify_equilibrium(g, Profile.pure([np.array([0.0, 1.0])], g)).is_equilibrium


def test_verify_rejects_infeasible_support():
    p = Profile((MixedStrategy.build([[1.0, 1.0]], [1.0]), MixedStrategy.build([[0.0, 0.0]], [1.0])))
    g = knapsack_game([[3, 2], [1, 1]], [[2, 2], [1, 1]], [3, 2], [[None, [1, 1]], [[0, 0], None]], "max")
    rep = verify_equilibrium(g, p)
    assert not rep.is_equilibrium
    assert "row 0" in rep.rejection


def test_mixed_strategy_invariants():
    box = Polyhedron.box([0], [1])
    p = Player([0.0], [[1.0]], box, (0,), ([0], [1]))
    with pytest.raises(GameError):
        MixedStrategy((np.array([0.0]),), np.array([0.7]), ())
    with pytest.raises(InfeasibleSupport):
        MixedStrategy.build([[0.5]], [1.0], p)
    s = MixedStrategy.build([[0.0], [1.0], [0.0]], [1, 1, 2], p)
    assert s.size == 2
    assert np.allclose(s.mean, [0.25])


def test_player_and_game_shape_checks():
    box = Polyhedron.box([0], [1])
    with pytest.raises(GameError):
        Player([0.0], [[1.0, 2.0]], box)
    with pytest.raises(GameError):
        Player([0.0], [[1.0]], box, (0,))
    p = Player([0.0], [[1.0], [2.0]], box)
    with pytest.raises(GameError):
        Game([p, p])


def _random_rbg(rng, n, m):
    players = []
    for i in range(n):
        c = rng.integers(-5, 6, m).astype(float)
        C = rng.integers(-5, 6, ((n - 1) * m, m)).astype(float)
        w = rng.integers(1, 5, m).astype(float)
        players.append(Player(c, C, Polyhedron(w[None, :], [float(w.sum() // 2 + 1)]), tuple(range(m)),
                              (np.zeros(m), np.ones(m))))
    return Game(players, str(rng.choice(["min", "max"])))


def _random_profile(rng, g, max_support=3):
    strategies = []
    for p in g.players:
        grid = [np.array(b, float) for b in itertools.product((0, 1), repeat=p.dim)]
        pts = [x for x in grid if p.region.contains(x)]
        k = int(rng.integers(1, min(max_support, len(pts)) + 1))
        idx = rng.choice(len(pts), k, replace=False)
        strategies.append(MixedStrategy.build([pts[a] for a in idx], rng.uniform(0.1, 1.0, k), p))
    return Profile(tuple(strategies))


def _product_sum(g, i, p):
    total = 0.0
    for combo in itertools.product(*[list(zip(s.points, s.probs)) for s in p.strategies]):
        w = float(np.prod([pr for _, pr in combo]))
        total += w * pure_payoff(g, i, [x for x, _ in combo])
    return total


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_mean_point_equivalence(seed):
    rng = np.random.default_rng(seed)
    g = _random_rbg(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)))
    p = _random_profile(rng, g)
    for i in range(g.n):
        assert expected_payoff(g, i, p) == pytest.approx(_product_sum(g, i, p), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_regret_never_negative(seed):
    rng = np.random.default_rng(seed)
    g = _random_rbg(rng, 2, int(rng.integers(1, 4)))
    rep = verify_equilibrium(g, _random_profile(rng, g))
    assert min(rep.regrets) >= -1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_negation_leaves_verdict_unchanged(seed):
    rng = np.random.default_rng(seed)
    g = _random_rbg(rng, 2, int(rng.integers(1, 4)))
    p = _random_profile(rng, g, 1)
    a, b = verify_equilibrium(g, p), verify_equilibrium(g.negated(), p)
    assert a.is_equilibrium == b.is_equilibrium
    assert np.allclose(a.regrets, b.regrets)
