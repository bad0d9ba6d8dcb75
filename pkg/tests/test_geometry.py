import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballmap.geometry import (
    HPolytope,
    NotConnectedError,
    PLUnion,
    Simplex,
    bridge_between,
    bridge_graph,
    is_analytic_path_connected,
    triangulate,
    vertices_of,
    walk_order,
)
from ballmap.hexagon_data import HEXAGON_VERTICES

UNIT_SQUARE = HPolytope([[-1, 0], [1, 0], [0, -1], [0, 1]], [0, 1, 0, 1])
APEX_BOWTIE = [Simplex([(0, 0), (1, 1), (-1, 1)]), Simplex([(0, 0), (1, -1), (-1, -1)])]
# the two cones of the planar set {(4x^2 - y^2)(4y^2 - x^2) >= 0, y >= 0}, cut off at height 2
CONE_PAIR = [Simplex([(0, 0), (-1, 2), (-2, 1)]), Simplex([(0, 0), (1, 2), (2, 1)])]


def _pts(vs):
    return sorted(tuple(Fraction(c) for c in v) for v in vs)


def test_vertices_of_square_and_simplex():
    assert _pts(vertices_of(UNIT_SQUARE)) == _pts([(0, 0), (1, 0), (0, 1), (1, 1)])
    tri = HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    assert _pts(vertices_of(tri)) == _pts([(0, 0), (1, 0), (0, 1)])


def test_vertices_of_hexagon():
    H = HPolytope.from_vertices(HEXAGON_VERTICES)
    assert len(H.A) == 6
    assert _pts(vertices_of(H)) == _pts(HEXAGON_VERTICES)


def _nondegenerate(V):
    M = np.array([np.subtract(v, V[0]) for v in V[1:]], dtype=float)
    return abs(np.linalg.det(M)) > 0.5


def simplices(n):
    point = st.tuples(*[st.integers(-5, 5)] * n)
    return st.lists(point, min_size=n + 1, max_size=n + 1).filter(_nondegenerate)


@settings(max_examples=25, deadline=None)
@given(st.one_of(simplices(2), simplices(3)))
def test_vertex_facet_round_trip_is_idempotent(V):
    P = HPolytope.from_vertices(V)
    once = _pts(vertices_of(P))
    twice = _pts(vertices_of(HPolytope.from_vertices(once)))
    assert once == twice == _pts(V)


def test_triangulate_examples():
    tri = Simplex([(0, 0), (1, 0), (0, 1)])
    assert triangulate(PLUnion([tri])) == [tri]
    assert len(triangulate(PLUnion([UNIT_SQUARE]))) == 4
    fan = [Simplex([(1, 1), HEXAGON_VERTICES[k], HEXAGON_VERTICES[(k + 1) % 6]]) for k in range(6)]
    assert set(triangulate(PLUnion(fan))) == set(fan)


def test_triangulation_covers_the_union():
    S = PLUnion([UNIT_SQUARE, HPolytope.from_vertices([(1, 0), (2, 0), (2, 1), (1, 1)]),
                 HPolytope.from_vertices([(0, 1), (1, 1), (1 / 2, 2)])])
    simps = triangulate(S)
    rng = np.random.default_rng(0)
    X = S.to_set().sample(10_000, rng)
    best = np.max([s.distance_margin(X) for s in simps], axis=0)
    assert np.all(best >= -1e-9)
    for s in simps:
        W = rng.dirichlet(np.ones(3), 200)
        V = np.array([[float(c) for c in v] for v in s.vertices])
        assert np.all(S.margin(W @ V) >= -1e-9)


def test_bridge_between_adjacent_squares():
    right = HPolytope([[-1, 0], [1, 0], [0, -1], [0, 1]], [-1, 2, 0, 1])
    b = bridge_between(UNIT_SQUARE, right)
    assert b is not None
    assert b.q == (Fraction(1), Fraction(1, 2))
    assert b.v == (0, 0)
    assert b.w[0] > 0 and b.w[1] == 0


def test_bridge_between_overlapping_is_a_segment():
    b = bridge_between(UNIT_SQUARE, UNIT_SQUARE)
    assert b is not None and b.is_linear
    assert b.q == (Fraction(1, 2), Fraction(1, 2))


@pytest.mark.parametrize("pair", [
    [UNIT_SQUARE, HPolytope([[-1, 0], [1, 0], [0, -1], [0, 1]], [-1, 2, 0, 1])],
    [Simplex([(0, 0), (1, 0), (0, 1)]), Simplex([(1, 0), (0, 1), (1, 1)])],
    APEX_BOWTIE,
])
def test_bridge_certificate_revalidates(pair):
    b = bridge_between(*pair)
    assert b is not None
    K1, K2 = (p.to_hpolytope() if isinstance(p, Simplex) else p for p in pair)
    eps = float(b.eps)
    t = np.linspace(-eps, eps, 1001)
    t = t[t != 0]
    A = b.arc_float(t)
    assert np.all(K1.margins(A[t < 0]).min(axis=1) > 0)
    assert np.all(K2.margins(A[t > 0]).min(axis=1) > 0)


def test_cone_pair_has_no_bridge():
    t0 = time.perf_counter()
    assert bridge_between(*CONE_PAIR) is None
    assert not is_analytic_path_connected(PLUnion(CONE_PAIR))
    assert time.perf_counter() - t0 < 1.0


def test_vertex_touching_triangles_with_opposite_cones_are_bridged():
    # a vertical line crosses both open cones of this pair
    assert is_analytic_path_connected(PLUnion(APEX_BOWTIE))


def test_walk_order_examples():
    pair = PLUnion([Simplex([(0, 0), (1, 0), (0, 1)]), Simplex([(1, 0), (0, 1), (1, 1)])])
    assert walk_order(bridge_graph(pair)) == [0, 1]
    single = PLUnion([Simplex([(0, 0), (1, 0), (0, 1)])])
    assert walk_order(bridge_graph(single)) == [0]
    with pytest.raises(NotConnectedError):
        walk_order(bridge_graph(PLUnion(CONE_PAIR)))


def test_hexagon_fan_is_connected():
    fan = [Simplex([(1, 1), HEXAGON_VERTICES[k], HEXAGON_VERTICES[(k + 1) % 6]]) for k in range(6)]
    g = bridge_graph(PLUnion(fan))
    walk = walk_order(g)
    assert set(walk) == set(range(6))
    for a, b in zip(walk, walk[1:]):
        assert (min(a, b), max(a, b)) in g.edges


@settings(max_examples=10, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3))
def test_connectivity_is_monotone_under_overlapping_additions(dx, dy):
    base = [Simplex([(0, 0), (1, 0), (0, 1)]), Simplex([(1, 0), (0, 1), (1, 1)])]
    assert is_analytic_path_connected(PLUnion(base))
    # a square around the centroid of the first triangle overlaps its interior
    c = Fraction(1, 3)
    extra = HPolytope.from_vertices([(c + dx, c + dy), (c + dx + 1, c + dy), (c + dx, c + dy + 1), (c + dx + 1, c + dy + 1)])
    if np.all(extra.distance_margin(np.array([[1 / 3, 1 / 3]])) > 0) or (dx, dy) == (0, 0):
        assert is_analytic_path_connected(PLUnion(base + [extra]))
