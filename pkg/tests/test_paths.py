import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballmap.geometry import HPolytope, bridge_between
from ballmap.paths import (
    Piece,
    PiecewisePath,
    Region,
    RegionPlan,
    approx_interp,
    assemble_piecewise,
    hermite_interpolate,
    segment_path,
    smart_path,
    smooth_corners,
    validate_path,
)
from ballmap.polycore import UniPoly

F = Fraction


def _box(x0, x1, y0, y1):
    return HPolytope([[-1, 0], [1, 0], [0, -1], [0, 1]], [-x0, x1, -y0, y1])


def _plan(boxes, anchors, t, s):
    regions = [Region.from_polytope(b) for b in boxes]
    bridges = [bridge_between(a, b) for a, b in zip(boxes, boxes[1:])]
    return RegionPlan(regions, anchors, bridges, t, s)


def two_squares():
    return _plan([_box(0, 1, 0, 1), _box(1, 2, 0, 1)], [(F(1, 2), F(1, 2)), (F(3, 2), F(1, 2))],
                 [F(1, 4), F(3, 4)], [F(1, 2)])


def l_shape():
    boxes = [_box(0, 1, 0, 1), _box(1, 2, 0, 1), _box(1, 2, 1, 2)]
    anchors = [(F(1, 2), F(1, 2)), (F(3, 2), F(1, 2)), (F(3, 2), F(3, 2))]
    return _plan(boxes, anchors, [F(1, 10), F(1, 2), F(9, 10)], [F(3, 10), F(7, 10)])


def corner_path():
    # (t, 0) then (1/2, t - 1/2): a right-angle corner at t = 1/2
    R = Region.from_polytope(_box(-1, 2, -1, 2))
    a = Piece((UniPoly([0, 1]), UniPoly()), F(0), F(1, 2), R)
    b = Piece((UniPoly([F(1, 2)]), UniPoly([0, 1])), F(1, 2), F(1), R)
    return PiecewisePath([a, b])


def test_segment_path_examples():
    assert [p.degree for p in segment_path((1, 2), (1, 2))] == [0, 0]
    assert segment_path((0, 0), (1, 0)) == [UniPoly([0, 1]), UniPoly()]
    P = segment_path((0, 4), (2, 0), (1, 3))
    assert tuple(p(2) for p in P) == (1, 2)
    assert tuple(p(1) for p in P) == (0, 4) and tuple(p(3) for p in P) == (2, 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.fractions(-3, 3, max_denominator=9), st.lists(st.fractions(-3, 3, max_denominator=9), min_size=1, max_size=3)),
                min_size=1, max_size=4, unique_by=lambda d: d[0]))
def test_hermite_interpolant_matches_every_jet(data):
    p = hermite_interpolate(data)
    for t, ders in data:
        assert p.taylor_jet(t, len(ders) - 1) == [F(d) for d in ders]


def test_assemble_two_squares():
    plan = two_squares()
    beta = assemble_piecewise(plan)
    assert len(beta.pieces) == 5
    assert beta.is_continuous()
    assert beta(F(1, 2)) == (1, F(1, 2))
    assert beta(F(1, 4)) == (F(1, 2), F(1, 2)) and beta(F(3, 4)) == (F(3, 2), F(1, 2))


def test_assemble_single_region():
    plan = RegionPlan([Region.from_polytope(_box(0, 1, 0, 1))], [(F(1, 3), F(1, 3))], [], [F(1, 2)], [])
    beta = assemble_piecewise(plan)
    assert len(beta.pieces) == 1 and beta.pieces[0].polys[0].degree <= 1
    assert beta(F(1, 2)) == (F(1, 3), F(1, 3))


def test_smooth_corner_matches_hermite_conditions():
    beta = corner_path()
    assert beta.corners(1) == [0]
    gamma = smooth_corners(beta, 1)
    assert gamma.is_continuous() and gamma.corners(1) == []
    patch = next(p for p in gamma.pieces if p.lo < F(1, 2) < p.hi)
    assert patch.jet(patch.lo, 1) == beta.jet(patch.lo, 1)
    assert patch.jet(patch.hi, 1) == beta.jet(patch.hi, 1)


def test_smooth_corners_leaves_smooth_junctions_alone():
    a = Piece((UniPoly([0, 1]), UniPoly([0, 0, 1])), F(0), F(1, 2))
    b = Piece((UniPoly([F(1, 2), 1]), UniPoly([F(1, 4), 1, 1])), F(1, 2), F(1))
    beta = PiecewisePath([a, b])
    gamma = smooth_corners(beta, 2)
    T = np.linspace(0, 1, 101)
    assert np.allclose(gamma.eval_float(T), beta.eval_float(T), atol=1e-12)


def test_smoothing_patch_stays_near_corner_in_squares_example():
    plan = two_squares()
    beta = assemble_piecewise(plan)
    gamma = smooth_corners(beta, 1)
    assert gamma.corners(1) == []
    for p in gamma.pieces:
        if p.kind != "corner":
            continue
        c = np.array([float(v) for v in beta(p.lo)])
        R = next(r for r in plan.regions if r.margin(c)[0] > 0)
        eps = float(R.margin(c)[0])
        T = np.linspace(float(p.lo), float(p.hi), 400)
        P = PiecewisePath([p]).eval_float(T)
        assert np.max(np.linalg.norm(P - c, axis=1)) <= eps / 2 + float(np.linalg.norm(np.array([float(v) for v in beta(p.hi)]) - c))


def test_approx_interp_cubic_is_exact():
    f = [UniPoly([0, 0, 0, 1])]
    g = approx_interp(f, [(F(1, 2), 1)], 1e-3, interval=(0, 1))
    assert g[0] == f[0]


def test_approx_interp_kinked_path():
    a = Piece((UniPoly([F(1, 2), -1]),), F(0), F(1, 2))
    b = Piece((UniPoly([0, 1]),), F(1, 2), F(1))
    f = PiecewisePath([a, b])
    g = approx_interp(f, [(F(1, 5), 0)], 0.1)
    T = np.linspace(0, 1, 2001)
    assert np.max(np.abs(g[0].eval_float(T) - f.eval_float(T)[:, 0])) < 0.1
    assert g[0](F(1, 5)) == F(3, 10)


def test_approx_interp_single_node_value():
    f = [UniPoly([1, 2, 0, -1, 5])]
    g = approx_interp(f, [(F(1, 3), 0)], 1e-6, interval=(0, 1))
    assert g[0](F(1, 3)) == f[0](F(1, 3))


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
@pytest.mark.parametrize("basis", ["hermite", "product"])
def test_approx_interp_smoothed_corner(eps, basis):
    gamma = smooth_corners(corner_path(), 1)
    nodes = [(F(1, 4), 1), (F(3, 4), 1)]
    g = approx_interp(gamma, nodes, eps, basis=basis)
    for t, k in nodes:
        assert [tuple(p.taylor_jet(t, k)[j] for p in g) for j in range(k + 1)] == gamma.jet(t, k)
    T = np.linspace(0, 1, 5001)
    G = np.column_stack([p.eval_float(T) for p in g])
    assert np.max(np.abs(G - gamma.eval_float(T))) < eps


def test_approx_interp_rejects_bad_nodes():
    with pytest.raises(ValueError):
        approx_interp([UniPoly([0, 1])], [(F(0), 0)], 0.1, interval=(0, 1))
    with pytest.raises(ValueError):
        approx_interp([UniPoly([0, 1])], [(F(1, 2), 0), (F(1, 2), 1)], 0.1, interval=(0, 1))


def test_smart_path_two_squares_certificate():
    plan = two_squares()
    res = smart_path(plan)
    assert res.certificate["ok"]
    assert res((F(1, 4))) == (F(1, 2), F(1, 2))
    assert res(F(1, 2)) == (1, F(1, 2))
    assert res(F(3, 4)) == (F(3, 2), F(1, 2))


def test_smart_path_l_shape():
    plan = l_shape()
    res = smart_path(plan)
    cert = res.certificate
    assert cert["ok"] and all(w["exact"] for w in cert["waypoints"])
    again = validate_path(res.path, plan, samples=4000)
    assert again["ok"]


def test_smart_path_degree_grows_as_eps_shrinks():
    plan = l_shape()
    degs = []
    for eps in (0.2, 0.02, 0.002):
        res = smart_path(plan, eps=eps, nu=1, shortcut=False)
        assert res.certificate["ok"]
        degs.append(res.degree)
    assert degs == sorted(degs)


def test_plan_validation_errors():
    plan = two_squares()
    plan.s = [F(9, 10)]
    with pytest.raises(ValueError):
        plan.validate()
    plan = two_squares()
    plan.bridges = []
    with pytest.raises(ValueError):
        plan.validate()


def test_region_plan_json_round_trip():
    plan = l_shape()
    back = RegionPlan.from_json(json.loads(json.dumps(plan.to_json())))
    assert back.to_json() == plan.to_json()
    assert back.waypoints() == plan.waypoints()
