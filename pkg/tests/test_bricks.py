import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballmap.bricks import (
    affine_brick,
    ball_product_map,
    brick_homotopy,
    build_brick,
    cubic_g,
    cylinder_map,
    elliptic_sector_map,
    hyperbolic_angle_plan,
    hypercube_map,
    inverse_h,
    peaked_inverse_h,
    parabolic2_map,
    parity_check,
    phi0,
    phi1,
    prism_map,
    psi1,
    revolution_map,
    simplex_map,
    spherical_star_map,
    triangle_map_symmetric,
    truncated_cone_map,
)
from ballmap.geometry import HPolytope
from ballmap.hexagon_data import HEXAGON_VERTICES
from ballmap.verify import check_containment, sample_ball


def _apply(stage, x):
    return tuple(p(x) for p in stage)


def test_cubic_g_identities():
    g = cubic_g()
    assert g(1) == -1 and g(-1) == 1
    assert g(Fraction(1, 2)) == 1 and g(Fraction(-1, 2)) == -1
    t = np.linspace(-1, 1, 2001)
    assert np.all(np.abs(g.eval_float(t)) <= 1 + 1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_peaked_inverse_h_values(n):
    h = peaked_inverse_h(n)
    assert h(0) == 0 and h(n) == 0 and h(1) == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_inverse_h_radial_profile(n):
    h = inverse_h(n)
    N = max(n, 3) + (max(n, 3) % 2 == 0)
    assert h(1) == 1
    r = np.linspace(0, math.sqrt(N), 4001)
    prof = r * h.eval_float(r ** 2)
    inside = r <= 1
    assert np.all(np.diff(prof[inside]) >= 0)
    assert np.all(prof >= -1e-15) and np.all(prof <= 1 + 1e-15)


def test_planar_building_blocks():
    assert _apply(phi0(), (1, 0)) == (1, 0)
    assert _apply(phi1(), (0, 1)) == (-1, 0)
    assert _apply(psi1(), (1, 0)) == (1, 0)
    assert abs(math.atan(math.sin(math.pi / 2)) - math.pi / 4) < 1e-12


def test_hyperbolic_angle_plan_hits_the_angle():
    for a in (0.3, 0.6, 0.7):
        m, beta = hyperbolic_angle_plan(a)
        x = beta
        for _ in range(m):
            x = math.atan(math.sin(2 * x))
        assert abs(x - a) < 1e-9
        assert beta <= math.atan(math.sqrt(2 / 3)) + 1e-12


def test_simplex_map_hits_vertices_exactly():
    V = [(0, 0), (2, 0), (0, 3)]
    F = simplex_map(V).map
    assert F((0, 0)) == (0, 0)
    assert F((1, 0)) == (2, 0)
    assert F((0, 1)) == (0, 3)


def test_prism_over_hexagon_fan_triangle():
    tri = [(1, 1), HEXAGON_VERTICES[0], HEXAGON_VERTICES[1]]
    r = prism_map(tri)
    assert r.map.n_in == 3 and r.map.n_out == 3
    rep = check_containment(r.map, r.set, 2000, 1e-9, seed=1)
    assert rep.violations == 0
    # g(1/2) = 1 reaches the top face; the origin lands on the first vertex
    assert r.map((0, 0, Fraction(1, 2)))[2] == 1
    assert r.map((0, 0, 0))[:2] == tuple(Fraction(c) for c in tri[0])


@pytest.mark.parametrize("make", [
    lambda: hypercube_map(2),
    lambda: cylinder_map(3),
    lambda: ball_product_map(1, 2),
    lambda: spherical_star_map(1, 2),
    lambda: truncated_cone_map(1, 2),
    lambda: parabolic2_map(2),
])
def test_small_containment_smoke(make):
    r = make()
    rep = check_containment(r.map, r.set, 2000, 1e-9, seed=3)
    assert rep.violations == 0


def test_truncated_cone_rejects_double_cone():
    with pytest.raises(ValueError):
        truncated_cone_map(-1, 1)
    with pytest.raises(ValueError):
        truncated_cone_map(2, 1)


def test_parity_forms():
    T = triangle_map_symmetric(1, Fraction(1, 2))
    assert parity_check(T)
    assert parity_check(elliptic_sector_map(math.pi / 2).map)
    assert not parity_check(simplex_map([(0, 0), (1, 0), (0, 1)]).map)


def test_revolution_of_sector_is_rotation_invariant():
    r2 = elliptic_sector_map(math.pi / 2)
    F3 = revolution_map(r2.map, 1)
    rng = np.random.default_rng(0)
    X = sample_ball(2, 200, rng)
    th = rng.uniform(0, 2 * np.pi, 200)
    X3 = np.column_stack([X[:, 0], X[:, 1] * np.cos(th), X[:, 1] * np.sin(th)])
    Y2 = r2.map.eval_float(X)
    Y3 = F3.eval_float(X3)
    assert np.allclose(Y3[:, 0], Y2[:, 0], atol=1e-12)
    assert np.allclose(np.hypot(Y3[:, 1], Y3[:, 2]), np.abs(Y2[:, 1]), atol=1e-12)
    with pytest.raises(ValueError):
        revolution_map(simplex_map([(0, 0), (1, 0), (0, 1)]).map, 1)


@settings(max_examples=15, deadline=None)
@given(st.fractions(min_value=0, max_value=1, max_denominator=16))
def test_homotopy_stays_inside_the_brick(t):
    r = simplex_map([(0, 0), (1, 0), (0, 1)])
    H = brick_homotopy(r, t)
    rep = check_containment(H, r.set, 300, 1e-12, seed=int(t.denominator))
    assert rep.violations == 0
    if t == 1:
        assert H((Fraction(1, 3), Fraction(1, 5))) == r.homotopy_center


@settings(max_examples=10, deadline=None)
@given(st.fractions(min_value=Fraction(1, 8), max_value=Fraction(7, 8), max_denominator=8),
       st.fractions(min_value=Fraction(1, 8), max_value=Fraction(7, 8), max_denominator=8))
def test_homotopy_images_are_nested(s, t):
    # larger contraction parameter gives a smaller image: H_t(B) lies inside H_s(B) for s <= t
    s, t = min(s, t), max(s, t)
    r = cylinder_map(2)
    rng = np.random.default_rng(0)
    X = sample_ball(2, 400, rng, sphere_fraction=0.5)
    inner = brick_homotopy(r, t).eval_float(X)
    # H_t = c + (1-t)(F - c), so H_t(B) = c + (1-t)/(1-s) (H_s(B) - c) and the brick is star-shaped about c
    c = np.array([float(v) for v in r.homotopy_center])
    back = c + (inner - c) * (1 - float(s)) / (1 - float(t))
    assert np.all(r.set.margin(back) >= -1e-9)


def test_homotopy_refuses_non_convex_flag():
    r = spherical_star_map(3, 2)
    assert not r.radially_convex
    with pytest.raises(ValueError):
        brick_homotopy(r, Fraction(1, 2))


def test_affine_brick_moves_set_and_center():
    r = affine_brick(cylinder_map(2), [[2, 0], [0, 1]], [Fraction(7, 4), 0])
    assert r.homotopy_center == (Fraction(7, 4), Fraction(0))
    assert np.all(r.set.margin(np.array([[7 / 4, 0.0], [3.5, 0.9]])) > 0)
    assert np.all(r.set.margin(np.array([[4.0, 0.0]])) < 0)
    with pytest.raises(ValueError):
        affine_brick(cylinder_map(2), [[1, 2], [2, 4]], [0, 0])


def test_build_brick_from_specs():
    r = build_brick({"type": "EllipticSector", "alpha": "pi/2", "n": 2})
    assert r.map.n_in == 2 and r.map.n_out == 2
    r = build_brick({"type": "SimplexBrick", "vertices": [[0, 0], [1, 0], [0, 1]],
                     "affine": {"A": [[1, 0], [0, 1]], "b": [1, 1]}})
    assert r.map((0, 0)) == (1, 1)
    with pytest.raises(ValueError):
        build_brick({"type": "Nonsense"})
    with pytest.raises(ValueError):
        build_brick({"alpha": 1})


def test_hexagon_vertices_form_a_convex_hexagon():
    H = HPolytope.from_vertices(HEXAGON_VERTICES)
    assert len(H.A) == 6
