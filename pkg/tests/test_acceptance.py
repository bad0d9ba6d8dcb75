"""Acceptance suite: one group of checks per criterion, summarised at the end of the run."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from ballmap.assembler import build_brick_union_map, build_pl_union_map, hexagon_alpha, hexagon_reference
from ballmap.bricks import (
    affine_brick,
    ball_map,
    ball_product_map,
    cubic_g,
    cylinder_map,
    elliptic_sector_map,
    elliptic_segment_map,
    hyperbolic_sector_map,
    hyperbolic_segment_map,
    hypercube_map,
    peaked_inverse_h,
    parabolic2_map,
    parabolic_n_map,
    phi0,
    simplex_map,
    spherical_star_map,
    toeplitz_brick,
    truncated_cone_map,
)
from ballmap.geometry import HPolytope, PLUnion, Simplex, is_analytic_path_connected
from ballmap.paths import Piece, PiecewisePath, Region, approx_interp, smooth_corners
from ballmap.polycore import PolyMap, UniPoly
from ballmap.verify import sample_ball, verify_map

F = Fraction
N_SAMPLES, N_IMAGE, TOL, GAP = 10_000, 100_000, 1e-9, 0.05


# ---------------------------------------------------------------------------
# 1. reference hexagon


@pytest.fixture(scope="module")
def hexagon():
    t0 = time.perf_counter()
    cert = hexagon_reference(n_samples=N_SAMPLES, n_image=N_IMAGE, tol=TOL, seed=0)
    return cert, time.perf_counter() - t0


def test_c1_alpha_waypoints_exact(record):
    ax, ay = hexagon_alpha()
    expected = {-3: (0, 0), 3: (0, 0), -2: (1, 0), -1: (2, 1), 0: (2, 2), 1: (1, 2), 2: (0, 1)}
    got = {t: (ax(t), ay(t)) for t in expected}
    ok = all(got[t] == tuple(F(c) for c in p) for t, p in expected.items())
    record(1, "alpha waypoints exact", ok, "7/7" if ok else str(got))
    assert ok


@pytest.mark.xfail(strict=True, reason="alpha(t) leaves H by about 5e-5 near t = +-2 (exact witness in test_assembler)")
def test_c1_alpha_inside_hexagon(record, hexagon):
    rep = hexagon[0].reports["alpha_curve"]
    ok = rep.violations == 0
    record(1, "alpha(t) in H, 1e4 samples", ok, f"{rep.violations}/{rep.n_samples} outside, worst margin {rep.worst_margin:.3g}")
    assert ok


def test_c1_composed_map(record, hexagon):
    cert, elapsed = hexagon
    cont, cov = cert.reports["containment"], cert.reports["coverage"]
    ok = cont.violations == 0 and cov.coverage_gap < GAP and cert.waypoints.waypoints_exact
    n_exact = sum(w["exact"] for w in cert.waypoints.waypoints)
    record(1, "composed map B3 -> H", ok,
           f"{cont.violations}/{cont.n_samples} violations, gap {cov.coverage_gap:.4f} /{cov.n_image}, "
           f"{n_exact}/{len(cert.waypoints.waypoints)} exact waypoints")
    assert ok
    record(1, "runtime < 60 s", elapsed < 60, f"{elapsed:.1f} s")
    assert elapsed < 60


# ---------------------------------------------------------------------------
# 2. brick catalog

CATALOG = {
    "simplex2": lambda: simplex_map([(0, 0), (1, 0), (0, 1)]),
    "simplex3": lambda: simplex_map([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]),
    "cube2": lambda: hypercube_map(2),
    "cube3": lambda: hypercube_map(3),
    "cylinder2": lambda: cylinder_map(2),
    "cylinder3": lambda: cylinder_map(3),
    "ball_product(1,2)": lambda: ball_product_map(1, 2),
    "star(1,2)": lambda: spherical_star_map(1, 2),
    "star(3,2)": lambda: spherical_star_map(3, 2),
    "truncated_cone(1,2)": lambda: truncated_cone_map(1, 2),
    "parabolic_n2": lambda: parabolic_n_map(2),
    "parabolic2(a=1)": lambda: parabolic2_map(1),
    **{f"elliptic_sector({n})": (lambda a=a: elliptic_sector_map(a)) for n, a in (("pi/4", math.pi / 4), ("pi/2", math.pi / 2), ("pi", math.pi))},
    **{f"elliptic_segment({n})": (lambda a=a: elliptic_segment_map(a)) for n, a in (("pi/4", math.pi / 4), ("pi/2", math.pi / 2), ("pi", math.pi))},
    **{f"hyperbolic_sector({a})": (lambda a=a: hyperbolic_sector_map(a)) for a in (0.3, 0.6)},
    **{f"hyperbolic_segment({a})": (lambda a=a: hyperbolic_segment_map(a)) for a in (0.3, 0.6)},
    "revolved elliptic_sector(pi/2), n=3": lambda: elliptic_sector_map(math.pi / 2, 3),
}
_catalog_time = []


@pytest.mark.slow
@pytest.mark.parametrize("name", list(CATALOG))
def test_c2_brick_catalog(record, name):
    t0 = time.perf_counter()
    r = CATALOG[name]()
    rep = verify_map(r.map, r.set, N_SAMPLES, N_IMAGE, tol=TOL, seed=0)
    _catalog_time.append(time.perf_counter() - t0)
    ok = rep.violations == 0 and rep.coverage_gap < GAP
    record(2, name, ok, f"{rep.violations} violations, gap {rep.coverage_gap:.4f}")
    assert ok


@pytest.mark.slow
def test_c2_catalog_runtime(record):
    total = sum(_catalog_time)
    ok = len(_catalog_time) == len(CATALOG) and total < 600
    record(2, "runtime < 10 min", ok, f"{total:.0f} s over {len(_catalog_time)} bricks")
    assert ok


# ---------------------------------------------------------------------------
# 3. exact identities


def test_c3_identities(record):
    g = cubic_g()
    checks = {
        "g(+-1) = -+1": g(1) == -1 and g(-1) == 1,
        "g(+-1/2) = +-1": g(F(1, 2)) == 1 and g(F(-1, 2)) == -1,
        "h(0) = h(n) = 0, h(1) = 1 at n = 2, 3": all(
            peaked_inverse_h(n)(0) == 0 and peaked_inverse_h(n)(n) == 0 and peaked_inverse_h(n)(1) == 1 for n in (2, 3)),
        "phi0 fixes (1, 0)": tuple(p((1, 0)) for p in phi0()) == (1, 0),
        "arctan(sin(pi/2)) = pi/4": abs(math.atan(math.sin(math.pi / 2)) - math.pi / 4) <= 1e-12,
    }
    for name, ok in checks.items():
        record(3, name, ok)
    assert all(checks.values())


# ---------------------------------------------------------------------------
# 4. approximation with interpolation


def test_c4_cubic_residual_zero(record):
    f = [UniPoly([0, 0, 0, 1])]
    g = approx_interp(f, [(F(1, 2), 1)], 1e-3, interval=(0, 1))
    ok = (g[0] - f[0]).is_zero()
    record(4, "t^3 reproduced exactly", ok)
    assert ok


def _smoothed_two_piece():
    R = Region.from_polytope(HPolytope([[-1, 0], [1, 0], [0, -1], [0, 1]], [1, 2, 1, 2]))
    a = Piece((UniPoly([0, 1]), UniPoly()), F(0), F(1, 2), R)
    b = Piece((UniPoly([F(1, 2)]), UniPoly([0, 1])), F(1, 2), F(1), R)
    return smooth_corners(PiecewisePath([a, b]), 1)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_c4_smoothed_path(record, eps):
    gamma = _smoothed_two_piece()
    nodes = [(F(1, 4), 1), (F(1, 2), 1), (F(3, 4), 1)]
    g = approx_interp(gamma, nodes, eps)
    jets_ok = all([tuple(p.taylor_jet(t, k)[j] for p in g) for j in range(k + 1)] == gamma.jet(t, k) for t, k in nodes)
    T = np.linspace(0, 1, 10_001)
    err = float(np.max(np.abs(np.column_stack([p.eval_float(T) for p in g]) - gamma.eval_float(T))))
    ok = jets_ok and err < eps
    record(4, f"C1 path, eps={eps:g}", ok, f"jets exact={jets_ok}, sup error {err:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 5. connectivity decisions


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_c5_bowtie_not_connected(record):
    pair = PLUnion([Simplex([(0, 0), (-1, 2), (-2, 1)]), Simplex([(0, 0), (1, 2), (2, 1)])])
    conn, dt = _timed(lambda: is_analytic_path_connected(pair))
    ok = not conn and dt < 1
    record(5, "bowtie not connected", ok, f"{dt * 1000:.0f} ms")
    assert ok


def test_c5_edge_sharing_connected(record):
    pair = PLUnion([Simplex([(0, 0), (1, 0), (0, 1)]), Simplex([(1, 0), (0, 1), (1, 1)])])
    conn, dt = _timed(lambda: is_analytic_path_connected(pair))
    ok = conn and dt < 1
    record(5, "edge-sharing pair connected", ok, f"{dt * 1000:.0f} ms")
    assert ok


# ---------------------------------------------------------------------------
# 6. union of simplices


def test_c6_square_two_triangles(record):
    S = PLUnion([Simplex([(0, 0), (1, 0), (1, 1)]), Simplex([(0, 0), (1, 1), (0, 1)])])
    t0 = time.perf_counter()
    cert = build_pl_union_map(S, n_samples=N_SAMPLES, n_image=N_IMAGE, tol=TOL, seed=0)
    dt = time.perf_counter() - t0
    cont, cov = cert.reports["containment"], cert.reports["coverage"]
    record(6, "exact vertex hits", cert.waypoints.waypoints_exact, f"{len(cert.waypoints.waypoints)} rows")
    record(6, "containment", cont.violations == 0, f"{cont.violations}/{cont.n_samples}")
    record(6, "coverage", cov.coverage_gap < GAP, f"gap {cov.coverage_gap:.4f} /{cov.n_image}")
    record(6, "runtime < 5 min", dt < 300, f"{dt:.0f} s")
    assert cert.map.n_in == 3 and cert.map.n_out == 2
    assert cert.waypoints.waypoints_exact and cont.violations == 0 and cov.coverage_gap < GAP and dt < 300


# ---------------------------------------------------------------------------
# 7. union of bricks


def test_c7_disc_and_square(record):
    disc = ball_map(2)
    square = affine_brick(cylinder_map(2), [[1, 0], [0, 1]], [F(7, 4), 0])
    t0 = time.perf_counter()
    cert = build_brick_union_map([disc, square], n_samples=N_SAMPLES, n_image=N_IMAGE, tol=TOL, seed=0)
    dt = time.perf_counter() - t0
    rows = cert.waypoints.waypoints
    anchors = [r for r in rows if r["expected"] == "brick map"]
    bases = [r for r in rows if r["expected"] != "brick map"]
    # Phi(s_k, x) evaluated through the last two stages at rational x
    sweep = PolyMap.chain(list(cert.map.stages[-2:]))
    const_ok = True
    for r in bases:
        z = 2 * F(r["param"]) - 1
        q = tuple(F(c) for c in r["expected"])
        for x in [(F(0), F(0)), (F(1, 3), F(-1, 2)), (F(3, 5), F(4, 5))]:
            const_ok &= sweep(x + (z,)) == q
    cont, cov = cert.reports["containment"], cert.reports["coverage"]
    record(7, "phi(t_k) equals the brick maps", all(r["exact"] for r in anchors) and len(anchors) == 2)
    record(7, "Phi(s_k, .) constant at q_k", const_ok and all(r["exact"] for r in bases) and len(bases) == 1)
    record(7, "containment", cont.violations == 0, f"{cont.violations}/{cont.n_samples}")
    record(7, "coverage", cov.coverage_gap < GAP, f"gap {cov.coverage_gap:.4f} /{cov.n_image}")
    record(7, "runtime < 5 min", dt < 300, f"{dt:.0f} s")
    assert cert.map.n_in == 3 and cert.map.n_out == 2
    assert cert.waypoints.waypoints_exact and const_ok
    assert cont.violations == 0 and cov.coverage_gap < GAP and dt < 300


# ---------------------------------------------------------------------------
# 8. Toeplitz hull


def test_c8_toeplitz(record):
    r = toeplitz_brick()
    X = sample_ball(7, N_SAMPLES, np.random.default_rng(0), sphere_fraction=0.1)
    Y = r.map.eval_float(X)
    x, y, z = Y[:, 0], Y[:, 1], Y[:, 2]
    one = np.ones_like(x)
    T = np.stack([np.stack([one, x, y, z], -1), np.stack([x, one, x, y], -1),
                  np.stack([y, x, one, x], -1), np.stack([z, y, x, one], -1)], -2)
    lam = float(np.linalg.eigvalsh(T)[:, 0].min())
    ok = r.map.n_in == 7 and r.map.n_out == 3 and lam >= -1e-9
    record(8, "B7 -> R^3, PSD Toeplitz images", ok, f"min eigenvalue {lam:.3g} over {N_SAMPLES}")
    assert ok
