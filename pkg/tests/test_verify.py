from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballmap.bricks import ball_map, cylinder_map, simplex_map
from ballmap.geometry import HPolytope
from ballmap.polycore import MultiPoly, PolyMap, UniPoly
from ballmap.verify import (
    check_containment,
    check_coverage,
    check_waypoints,
    sample_ball,
    verify_map,
)

UNIT_SQUARE = HPolytope([[-1, 0], [1, 0], [0, -1], [0, 1]], [0, 1, 0, 1]).to_set()


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**16), st.sampled_from(["random", "sobol"]))
def test_ball_samples_lie_in_the_ball(m, seed, method):
    X = sample_ball(m, 256, np.random.default_rng(seed), method=method, sphere_fraction=0.25)
    assert X.shape == (256, m)
    assert np.all(np.linalg.norm(X, axis=1) <= 1 + 1e-12)


def test_identity_on_the_disc():
    r = ball_map(2)
    rep = verify_map(r.map, r.set, 10_000, 20_000)
    assert rep.violations == 0 and rep.coverage_gap < 0.05
    assert rep.passed(0.05)


def test_constant_map_misses_the_square():
    const = PolyMap([MultiPoly.constant(Fraction(1, 2), 2), MultiPoly.constant(Fraction(1, 2), 2)], 2)
    rep = check_coverage(const, UNIT_SQUARE, 100, 20_000)
    assert rep.coverage_gap == pytest.approx(np.sqrt(2) / 2, abs=0.02)
    assert not rep.passed(0.05)
    assert check_containment(const, UNIT_SQUARE, 100).violations == 0


def test_containment_counts_violations():
    # the doubled disc leaves the unit disc
    r = ball_map(2)
    double = PolyMap([MultiPoly(2, {(1, 0): 2}), MultiPoly(2, {(0, 1): 2})], 2)
    rep = check_containment(double, r.set, 2000, 1e-9, seed=0)
    assert rep.violations > 0 and rep.worst_margin < 0
    assert not rep.passed()


def test_waypoints_exact_and_inexact():
    path = [UniPoly([0, 1]), UniPoly([0, 0, 1])]
    rep = check_waypoints(path, [(Fraction(1, 2), (Fraction(1, 2), Fraction(1, 4))), (1, (1, 1))])
    assert rep.waypoints_exact
    rep = check_waypoints(path, [(Fraction(1, 3), (Fraction(1, 3), Fraction(1, 10)))])
    assert not rep.waypoints_exact
    F = simplex_map([(0, 0), (1, 0), (0, 1)]).map
    assert check_waypoints(F, [((0, 1), (0, 1))]).waypoints_exact


def test_verification_is_deterministic_per_seed():
    r = cylinder_map(2)
    a = verify_map(r.map, r.set, 3000, 5000, seed=7).to_json()
    b = verify_map(r.map, r.set, 3000, 5000, seed=7).to_json()
    a.pop("runtime_s"), b.pop("runtime_s")
    assert a == b


def test_refined_cloud_beats_plain_sampling_on_the_square():
    r = cylinder_map(2)
    plain = check_coverage(r.map, r.set, 20_000, seed=1, method="random")
    refined = check_coverage(r.map, r.set, 20_000, seed=1, method="refined")
    assert refined.coverage_gap <= plain.coverage_gap + 1e-12
    assert refined.coverage_gap < 0.05


def test_dimension_mismatch_is_rejected():
    with pytest.raises(ValueError):
        check_containment(PolyMap.identity(3), UNIT_SQUARE, 10)
