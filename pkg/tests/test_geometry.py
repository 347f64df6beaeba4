import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutplay.geometry import (
    COVER_CUT,
    Cut,
    GeometryError,
    Polyhedron,
    add_cut,
    balas_union,
    contains,
    intersect_row,
    project_bounds,
)
from cutplay.solvers.lp import OPTIMAL, solve_lp

SQUARE = Polyhedron.box([0, 0], [1, 1])


def _extreme_points(P, k, rng, tries=40):
    pts = []
    for _ in range(tries):
        d = np.zeros(P.num_vars)
        d[:k] = rng.normal(size=k)
        res = solve_lp(P.lp(d, "max"))
        if res.status == OPTIMAL:
            pts.append(res.x[:k])
    return pts


def test_cut_rejects_zero_and_nonfinite():
    with pytest.raises(GeometryError):
        Cut(np.zeros(2), 1.0)
    with pytest.raises(GeometryError):
        Cut([np.inf, 1.0], 1.0)
    with pytest.raises(GeometryError):
        Cut([1.0], 1.0, "mystery")


def test_polyhedron_rejects_contradictory_row():
    with pytest.raises(GeometryError):
        Polyhedron(np.zeros((1, 2)), [-1.0])


def test_empty_polyhedron_has_witness():
    P = Polyhedron([[1.0]], [-1.0]).check_feasible()
    assert P.empty
    assert P.witness is not None
    assert not contains(P, [0.0])


def test_add_cut_appends():
    P = Polyhedron([[1.0]], [2.0])
    Q = add_cut(P, Cut([1.0], 1.0))
    assert Q.num_rows == 2
    assert np.allclose(Q.A[-1], [1.0]) and Q.b[-1] == 1.0
    assert P.num_rows == 1


def test_add_cut_square_to_triangle():
    T = add_cut(SQUARE, Cut([1.0, 1.0], 1.0))
    rng = np.random.default_rng(0)
    verts = {tuple(np.round(v, 9)) for v in _extreme_points(T, 2, rng)}
    assert verts == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}


def test_add_cut_twice_is_idempotent():
    c = Cut([1.0, 1.0], 1.0)
    once = add_cut(SQUARE, c)
    twice = add_cut(once, c)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-0.2, 1.2, size=(200, 2)):
        assert contains(once, x) == contains(twice, x)


def test_add_cut_dimension_mismatch():
    with pytest.raises(GeometryError):
        add_cut(SQUARE, Cut([1.0, 1.0, 1.0], 1.0))


def test_balas_two_points():
    Y = Polyhedron.box([0], [0])
    Z = Polyhedron.box([1], [1])
    H = balas_union(Y, Z)
    assert project_bounds(H, [1.0]) == pytest.approx(1.0)
    assert -project_bounds(H, [-1.0]) == pytest.approx(0.0)
    assert H.aux_start == 1


def test_balas_segments_give_triangle():
    Y = Polyhedron.from_rows([([1, 0], 0), ([0, 1], 1)], 2)
    Z = Polyhedron.from_rows([([1, 0], 1), ([0, 1], 0)], 2)
    H = balas_union(Y, Z)
    for d, v in [([1, 1], 1), ([-1, 0], 0), ([0, -1], 0), ([1, 0], 1), ([0, 1], 1)]:
        assert project_bounds(H, d) == pytest.approx(v, abs=1e-9)
    assert contains(H, [0.5, 0.5])
    assert not contains(H, [0.6, 0.5])


def test_balas_with_itself():
    P = add_cut(SQUARE, Cut([1.0, 2.0], 2.0))
    H = balas_union(P, P)
    rng = np.random.default_rng(2)
    for x in rng.uniform(-0.1, 1.1, size=(100, 2)):
        assert contains(H, x) == contains(P, x)


def test_balas_dimension_mismatch():
    with pytest.raises(GeometryError):
        balas_union(Polyhedron.box([0], [1]), SQUARE)


def test_contains_examples():
    assert contains(SQUARE, [0.5, 0.5], 1e-9)
    assert not contains(SQUARE, [1.1, 0.0], 1e-9)
    T = add_cut(SQUARE, Cut([1.0, 1.0], 1.0))
    assert contains(T, [0.5, 0.5 + 1e-10], 1e-9)


def test_intersect_row_zero_row():
    assert intersect_row(SQUARE, [0.0, 0.0], 1.0) is SQUARE
    assert intersect_row(SQUARE, [0.0, 0.0], -1.0).empty


def test_polyhedra_are_immutable():
    with pytest.raises(ValueError):
        SQUARE.A[0, 0] = 5.0


def _random_poly(rng, k):
    m = int(rng.integers(1, 4))
    A = rng.integers(-3, 4, (m, k)).astype(float)
    b = rng.integers(0, 5, m).astype(float)
    P = Polyhedron(np.vstack([A, np.eye(k)]), np.concatenate([b, np.full(k, 3.0)]))
    return P.check_feasible()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_balas_projection_property(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    Y, Z = _random_poly(rng, k), _random_poly(rng, k)
    if Y.empty or Z.empty:
        return
    H = balas_union(Y, Z)
    for v in _extreme_points(Y, k, rng, 10) + _extreme_points(Z, k, rng, 10):
        assert contains(H, v, 1e-7)
    for x in rng.uniform(-0.5, 3.5, size=(20, k)):
        if not contains(H, x, 1e-9):
            assert not contains(Y, x, 1e-9) and not contains(Z, x, 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_add_cut_keeps_points_satisfying_cut(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    P = _random_poly(rng, k)
    pi = rng.integers(-3, 4, k).astype(float)
    if not np.any(pi):
        pi[0] = 1.0
    c = Cut(pi, float(rng.integers(-2, 5)), COVER_CUT)
    Q = add_cut(P, c)
    for x in rng.uniform(-0.5, 3.5, size=(40, k)):
        if contains(P, x) and c.violation(x) <= 0:
            assert contains(Q, x)
        if contains(Q, x):
            assert contains(P, x)
