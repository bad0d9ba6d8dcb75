from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballmap.assembler import (
    CoefficientSpace,
    build_brick_union_map,
    build_pl_union_map,
    hexagon_alpha,
    hexagon_reference,
    omega_region,
    oracle_bridge,
)
from ballmap.bricks import affine_brick, ball_map, cylinder_map, simplex_map
from ballmap.geometry import HPolytope, PLUnion, Simplex
from ballmap.hexagon_data import HEXAGON_VERTICES
from ballmap.polycore import MultiPoly, PolyMap
from ballmap.verify import sample_ball

F = Fraction
HEXAGON = HPolytope.from_vertices(HEXAGON_VERTICES)


def test_hexagon_alpha_waypoints_are_exact():
    ax, ay = hexagon_alpha()
    V = [tuple(F(c) for c in v) for v in HEXAGON_VERTICES]
    expected = {-3: (0, 0), -2: (1, 0), -1: (2, 1), 0: (2, 2), 1: (1, 2), 2: (0, 1), 3: (0, 0)}
    for t, p in expected.items():
        assert (ax(t), ay(t)) == p
    assert ax.degree == ay.degree == 34
    assert set(expected.values()) == set(V)


def test_hexagon_alpha_leaves_the_hexagon_near_a_vertex():
    # exact rational witness: the second coordinate of alpha is negative just past t = -2
    ax, ay = hexagon_alpha()
    t = F(-20235, 10000)
    x, y = ax(t), ay(t)
    assert y < 0 and 0 < x < 1
    assert float(HEXAGON.distance_margin(np.array([[float(x), float(y)]]))[0]) < 0


def test_hexagon_reference_waypoints():
    cert = hexagon_reference(certify=False)
    assert len(cert.waypoints.waypoints) == 25
    assert cert.waypoints.waypoints_exact
    assert cert.map.n_in == 3 and cert.map.n_out == 2
    assert "alpha_curve" in cert.reports


@pytest.mark.parametrize("m,n,d", [(1, 1, 0), (2, 2, 3), (2, 3, 1), (3, 2, 4)])
def test_coefficient_space_dimension(m, n, d):
    space = CoefficientSpace(m, n, d)
    assert space.K == comb(m + d, d)
    assert space.N == comb(m + d, d) * n
    assert len(set(space.monomials)) == space.K
    assert all(sum(e) <= d for e in space.monomials)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=7), min_size=12, max_size=12))
def test_coefficient_space_round_trip(c):
    space = CoefficientSpace(2, 2, 2)
    assert space.K == 6
    G = space.unflatten(c)
    assert space.flatten(G) == tuple(F(v) for v in c)
    X = sample_ball(2, 20, np.random.default_rng(0))
    Y = space.images([float(v) for v in c], space.design(X))[0]
    assert np.allclose(Y, G.eval_float(X))


def test_coefficient_space_constant_and_errors():
    space = CoefficientSpace(2, 2, 2)
    C = space.unflatten(space.constant((F(1, 3), 2)))
    assert C((F(5), F(-7))) == (F(1, 3), 2)
    with pytest.raises(ValueError):
        space.flatten(PolyMap([MultiPoly(2, {(3, 0): 1}), MultiPoly(2)], 2))
    with pytest.raises(ValueError):
        space.flatten(PolyMap.identity(3))


def test_omega_region_margins():
    r = cylinder_map(2)
    space = CoefficientSpace(2, 2, 3)
    grid = sample_ball(2, 500, np.random.default_rng(0), sphere_fraction=0.5)
    R = omega_region(space, r.set, grid, space.constant(r.homotopy_center))
    inside = [float(v) for v in space.constant((0, 0))]
    outside = [float(v) for v in space.constant((3, 0))]
    m = R.margin(np.array([inside, outside]))
    assert m[0] > 0 and m[1] < 0
    own = [float(v) for v in space.flatten(r.map.expand())]
    assert R.margin(np.array([own]))[0] >= -1e-6


def test_oracle_bridge_overlap_and_disjoint():
    rng = np.random.default_rng(0)
    disc = ball_map(2).set
    near = affine_brick(cylinder_map(2), [[1, 0], [0, 1]], [F(7, 4), 0]).set
    far = affine_brick(cylinder_map(2), [[1, 0], [0, 1]], [F(5), 0]).set
    b = oracle_bridge(disc, near, rng)
    assert b is not None and b.is_linear
    q = np.array([[float(c) for c in b.q]])
    assert disc.margin(q)[0] > 0 and near.margin(q)[0] > 0
    assert oracle_bridge(disc, far, rng) is None


def test_single_simplex_union():
    S = PLUnion([Simplex([(0, 0), (2, 0), (0, 1)])])
    cert = build_pl_union_map(S, n_samples=2000, n_image=20_000, n_target=500)
    assert cert.source_dim == 3
    assert cert.waypoints.waypoints_exact
    assert cert.reports["containment"].violations == 0
    assert cert.reports["coverage"].coverage_gap < 0.05


def test_single_brick_union():
    r = simplex_map([(0, 0), (1, 0), (0, 1)])
    cert = build_brick_union_map([r], n_samples=2000, n_image=20_000, n_target=500)
    assert cert.source_dim == 3
    assert cert.waypoints.waypoints_exact
    assert cert.passed()


def test_brick_union_rejects_mismatched_dimensions():
    with pytest.raises(ValueError):
        build_brick_union_map([ball_map(2), ball_map(3)], certify=False)
    with pytest.raises(ValueError):
        build_brick_union_map([], certify=False)
