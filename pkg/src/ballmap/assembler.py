"""Polynomial maps from a ball onto unions of simplices or of bricks.

Both pipelines build one polynomial path per moving object (a vertex of a
simplex, or the coefficient vector of a brick map) and sweep a parameter
``t`` through it; the sweep variable is then fed from a prism or cylinder so
the source becomes a closed ball.
"""

from __future__ import annotations

import itertools
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .bricks import BrickResult, cylinder_map, prism_map
from .geometry import (
    BridgeGraph,
    BridgeSpec,
    NotConnectedError,
    PLUnion,
    SemialgebraicSet,
    Simplex,
    bridge_graph,
    triangulate,
    walk_order,
)
from .hexagon_data import HEXAGON_VERTICES, hexagon_h
from .paths import Region, RegionPlan, SmartPathResult, smart_path
from .polycore import MultiPoly, PolyMap, UniPoly, as_fraction, frac_str
from .verify import VerifyReport, check_containment, check_coverage, check_waypoints, sample_ball, sample_simplex

__all__ = [
    "UnionCertificate",
    "CoefficientSpace",
    "build_pl_union_map",
    "build_brick_union_map",
    "hexagon_reference",
    "hexagon_alpha",
    "oracle_bridge",
    "omega_region",
]

# affine change [-1, 1] -> [0, 1]
_HALF_SHIFT = UniPoly([Fraction(1, 2), Fraction(1, 2)])


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BALLMAP_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


@dataclass
class UnionCertificate:
    """A map ``B_{source_dim} -> R^n`` together with everything checked about it."""

    map: PolyMap
    source_dim: int
    target: SemialgebraicSet | None
    waypoints: VerifyReport
    reports: dict = field(default_factory=dict)
    walk: list = field(default_factory=list)
    paths: list = field(default_factory=list)
    runtime_s: float = 0.0
    notes: str = ""
    target_json: dict | None = None

    def passed(self, gap_tol: float = 0.05) -> bool:
        if not self.waypoints.waypoints_exact:
            return False
        for rep in self.reports.values():
            if isinstance(rep, VerifyReport) and not rep.passed(gap_tol):
                return False
            if isinstance(rep, dict) and rep.get("ok") is False:
                return False
        return True

    def to_json(self) -> dict:
        reps = {k: (v.to_json() if isinstance(v, VerifyReport) else v) for k, v in self.reports.items()}
        return {
            "source_dim": self.source_dim,
            "map": self.map.to_json(),
            "waypoints": self.waypoints.to_json(),
            "reports": reps,
            "walk": list(self.walk),
            "paths": [p.to_json() if isinstance(p, SmartPathResult) else p for p in self.paths],
            "runtime_s": self.runtime_s,
            "passed": self.passed(),
            "notes": self.notes,
            "target": self.target_json,
        }


def _sweep_poly(u: UniPoly, var: int, nvars: int) -> MultiPoly:
    """``u((z + 1) / 2)`` as a polynomial in variable ``var`` with a Chebyshev form on [-1, 1]."""
    w = u.compose(_HALF_SHIFT)
    return MultiPoly.from_unipoly(w.with_chebyshev((-1, 1)), var, nvars)


def _certify(cert_map: PolyMap, target: SemialgebraicSet, n_samples: int, n_image: int, n_target: int,
             tol: float, seed: int) -> dict:
    cont = check_containment(cert_map, target, n_samples, tol, seed=seed)
    cov = check_coverage(cert_map, target, n_image, n_target, seed=seed + 1, method="refined")
    return {"containment": cont, "coverage": cov}


# ---------------------------------------------------------------------------
# unions of simplices


def _simplex_sweep_stages(vertex_paths: list, n: int) -> list:
    """Stages taking ``(x_1..x_n, z)`` to ``(1 - sum x) a_0(t) + sum x_i a_i(t)``, ``t = (z+1)/2``."""
    N = n + 1
    first = [MultiPoly.variable(i, N) for i in range(n)]
    for path in vertex_paths:
        first.extend(_sweep_poly(u, n, N) for u in path)
    M = n + (n + 1) * n
    x = [MultiPoly.variable(i, M) for i in range(n)]

    def a(i, d):
        return MultiPoly.variable(n + i * n + d, M)

    second = []
    for d in range(n):
        comp = a(0, d)
        for i in range(n):
            comp = comp + x[i] * (a(i + 1, d) - a(0, d))
        second.append(comp)
    return [first, second]


def _interval_check(vertex_paths: list, plan_t: list, plan_s: list, simplices: list, n: int,
                    rng: np.random.Generator, n_t: int = 64, n_x: int = 64) -> dict:
    """Sample ``F(x, t)`` for ``t`` in each ``(t_k, s_k)`` and ``(s_{k-1}, t_k)`` against the simplex of slot k."""
    worst = np.inf
    rows = []
    std = [tuple(int(i == j) for i in range(n)) for j in range(-1, n)]
    for k, tk in enumerate(plan_t):
        spans = []
        if k < len(plan_s):
            spans.append((float(tk), float(plan_s[k])))
        if k > 0:
            spans.append((float(plan_s[k - 1]), float(tk)))
        for lo, hi in spans:
            T = np.linspace(lo, hi, n_t + 2)[1:-1]
            A = np.stack([np.column_stack([u.eval_float(T) for u in path]) for path in vertex_paths])  # (n+1, n_t, n)
            X = sample_simplex(std, n_x, rng)  # (n_x, n)
            W = np.column_stack([1 - X.sum(1), X])  # barycentric weights
            Y = np.einsum("xi,itd->txd", W, A).reshape(-1, n)
            m = simplices[k].distance_margin(Y)
            lo_m = float(m.min())
            worst = min(worst, lo_m)
            rows.append({"slot": k, "lo": lo, "hi": hi, "min_margin": lo_m, "ok": lo_m > -1e-9})
    return {"intervals": rows, "min_margin": worst, "ok": all(r["ok"] for r in rows)}


def build_pl_union_map(S, n_samples: int = 10_000, n_image: int = 100_000, n_target: int = 1000,
                       tol: float = 1e-9, seed: int = 0, degree_cap: int = 200, retry_cap: int = 8,
                       path_samples: int = 1000, certify: bool = True) -> UnionCertificate:
    """Polynomial map from ``B_{n+1}`` onto a union of polytopes connected through bridges.

    The union is triangulated, the simplices are ordered along a bridge walk
    and every vertex slot gets its own polynomial path through the matching
    vertices at ``t_k = (k - 1) / (l - 1)``, crossing each bridge at the
    shared base point ``q_k`` at the midpoint ``s_k``.
    """
    t0 = time.perf_counter()
    if not isinstance(S, PLUnion):
        S = PLUnion(S)
    n = S.dim
    simplices = triangulate(S)
    graph = bridge_graph(S, simplices)
    walk = walk_order(graph)
    ell = len(walk)
    ordered = [simplices[k] for k in walk]
    if ell == 1:
        t = [Fraction(0)]
        s = []
    else:
        t = [Fraction(k, ell - 1) for k in range(ell)]
        s = [(a + b) / 2 for a, b in zip(t, t[1:])]
    bridges = [graph.bridge(walk[k], walk[k + 1]) for k in range(ell - 1)]
    regions = [Region.from_polytope(sig, name=f"simplex{walk[k]}") for k, sig in enumerate(ordered)]

    def slot_path(i):
        plan = RegionPlan(regions, [sig.vertices[i] for sig in ordered], bridges, t, s)
        return smart_path(plan, retry_cap=retry_cap, degree_cap=degree_cap, samples=path_samples)

    with ThreadPoolExecutor(max_workers=min(n + 1, _threads())) as pool:
        results = list(pool.map(slot_path, range(n + 1)))
    vertex_paths = [r.path for r in results]
    stages = _simplex_sweep_stages(vertex_paths, n)
    pr = prism_map(n=n)
    F = PolyMap.chain(list(pr.map.stages) + stages, trace=f"pl-union{n}")

    wp = []
    for k, sig in enumerate(ordered):
        for i in range(n + 1):
            wp.append(((t[k],), sig.vertices[i], vertex_paths[i]))
        for i in range(n + 1):
            if k < len(s):
                wp.append(((s[k],), bridges[k].q, vertex_paths[i]))
    rows = []
    for (param,), expected, path in wp:
        rows.extend(check_waypoints(path, [(param, expected)]).waypoints)
    waypoints = VerifyReport(waypoints=rows)
    rng = np.random.default_rng(seed)
    reports = {"intervals": _interval_check(vertex_paths, t, s, [sig.to_hpolytope() for sig in ordered], n, rng)}
    target = S.to_set()
    if certify:
        reports.update(_certify(F, target, n_samples, n_image, n_target, tol, seed))
    return UnionCertificate(F, n + 1, target, waypoints, reports, walk, results, time.perf_counter() - t0,
                            notes=f"{ell} slots; vertex path degrees {[r.degree for r in results]}",
                            target_json=S.to_json())


# ---------------------------------------------------------------------------
# the reference hexagon


def hexagon_alpha() -> tuple[UniPoly, UniPoly]:
    """``alpha(t) = (h(t), h(-t))`` with Chebyshev forms on [-3, 3]."""
    h = hexagon_h()
    hm = h.compose(UniPoly([0, -1])).with_chebyshev((-3, 3))
    return h, hm


HEXAGON_PARAMS = tuple(Fraction(k, 5) for k in (-5, -3, -1, 1, 3, 5))


def hexagon_reference(n_samples: int = 10_000, n_image: int = 100_000, n_target: int = 1000,
                      tol: float = 1e-9, seed: int = 0, certify: bool = True) -> UnionCertificate:
    """The degree-34 hexagon construction composed with the prism of the triangle.

    ``alpha_1(t) = alpha(5t/2 - 1/2)`` and ``alpha_2(t) = alpha(5t/2 + 1/2)``
    run over consecutive vertices; ``G(l, m, t) = l alpha_1(t) + m alpha_2(t)
    + (1 - l - m)(1, 1)`` sweeps the fan of triangles around (1, 1).
    """
    t0 = time.perf_counter()
    ax, ay = hexagon_alpha()
    inner1 = UniPoly([Fraction(-1, 2), Fraction(5, 2)])
    inner2 = UniPoly([Fraction(1, 2), Fraction(5, 2)])
    a1 = [u.compose(inner1).with_chebyshev((-1, 1)) for u in (ax, ay)]
    a2 = [u.compose(inner2).with_chebyshev((-1, 1)) for u in (ax, ay)]
    first = [MultiPoly.variable(0, 3), MultiPoly.variable(1, 3)]
    first += [MultiPoly.from_unipoly(u, 2, 3) for u in a1 + a2]
    lam, mu = MultiPoly.variable(0, 6), MultiPoly.variable(1, 6)
    rest = 1 - lam - mu
    second = [lam * MultiPoly.variable(2 + d, 6) + mu * MultiPoly.variable(4 + d, 6) + rest for d in range(2)]
    G = PolyMap.chain([first, second], trace="hexagon-G")
    H = prism_map(n=2).map
    F = PolyMap.chain(list(H.stages) + [first, second], trace="hexagon")

    V = [tuple(Fraction(c) for c in v) for v in HEXAGON_VERTICES]
    alpha_pts = [(Fraction(k), V[(k + 3) % 6]) for k in range(-3, 3)] + [(Fraction(3), V[0])]
    rows = check_waypoints([ax, ay], alpha_pts).waypoints
    # vertex images of G at the six sweep parameters: (1,1) and two consecutive hexagon vertices
    center = (Fraction(1), Fraction(1))
    for k, tk in enumerate(HEXAGON_PARAMS):
        expected = [((Fraction(0), Fraction(0), tk), center),
                    ((Fraction(1), Fraction(0), tk), V[k % 6]),
                    ((Fraction(0), Fraction(1), tk), V[(k + 1) % 6])]
        rows.extend(check_waypoints(G, expected).waypoints)
    waypoints = VerifyReport(waypoints=rows)

    hexagon = PLUnion([Simplex([center, V[k], V[(k + 1) % 6]]) for k in range(6)])
    target = hexagon.to_set()
    rng = np.random.default_rng(seed)
    T = np.concatenate([np.linspace(-3, 3, 5001), rng.uniform(-3, 3, 4999)])
    A = np.column_stack([ax.eval_float(T), ay.eval_float(T)])
    m = target.margin(A)
    curve = VerifyReport(n_samples=len(T), violations=int(np.sum(~(m >= -tol))), worst_margin=float(m.min()),
                         tol=tol, notes="alpha([-3, 3]) inside the hexagon")
    reports = {"alpha_curve": curve}
    if certify:
        reports.update(_certify(F, target, n_samples, n_image, n_target, tol, seed))
    return UnionCertificate(F, 3, target, waypoints, reports, list(range(6)), [],
                            time.perf_counter() - t0, notes="degree-34 reference hexagon",
                            target_json=hexagon.to_json())


# ---------------------------------------------------------------------------
# unions of bricks: paths in coefficient space


def _monomials(m: int, d: int) -> list:
    """Exponents of total degree <= d in m variables, graded then lexicographic."""
    out = []
    for deg in range(d + 1):
        for e in itertools.product(range(deg + 1), repeat=m):
            if sum(e) == deg:
                out.append(tuple(e))
    out.sort(key=lambda e: (sum(e), tuple(-v for v in e)))
    return out


@dataclass
class CoefficientSpace:
    """Polynomial maps ``R^m -> R^n`` of degree <= d as flat coefficient vectors."""

    m: int
    n: int
    d: int

    def __post_init__(self):
        self.monomials = _monomials(self.m, self.d)
        self.index = {e: i for i, e in enumerate(self.monomials)}

    @property
    def K(self) -> int:
        return len(self.monomials)

    @property
    def N(self) -> int:
        return comb(self.m + self.d, self.d) * self.n

    def flatten(self, F: PolyMap) -> tuple:
        if F.n_in != self.m or F.n_out != self.n:
            raise ValueError("map has the wrong shape for this coefficient space")
        out = [Fraction(0)] * self.N
        for j, c in enumerate(F.components):
            for e, a in c.terms.items():
                if sum(e) > self.d:
                    raise ValueError(f"map has degree above {self.d}")
                out[j * self.K + self.index[e]] = as_fraction(a)
        return tuple(out)

    def constant(self, y) -> tuple:
        out = [Fraction(0)] * self.N
        for j, v in enumerate(y):
            out[j * self.K] = as_fraction(v)
        return tuple(out)

    def unflatten(self, c) -> PolyMap:
        comps = []
        for j in range(self.n):
            terms = {e: as_fraction(c[j * self.K + i]) for i, e in enumerate(self.monomials) if c[j * self.K + i] != 0}
            comps.append(MultiPoly(self.m, terms))
        return PolyMap(comps, self.m, trace="coefficients")

    def design(self, X) -> np.ndarray:
        """Monomial values ``X^e`` for every exponent (rows: points)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([np.prod(X ** np.array(e), axis=1) for e in self.monomials])

    def images(self, C, M) -> np.ndarray:
        """Images of the grid with design matrix ``M`` under each coefficient vector of ``C``."""
        C = np.atleast_2d(np.asarray(C, dtype=float)).reshape(-1, self.n, self.K)
        return np.einsum("bnk,gk->bgn", C, M)


def omega_region(space: CoefficientSpace, S: SemialgebraicSet, grid: np.ndarray, witness, name: str = "") -> Region:
    """Maps whose sampled image of the ball lies strictly inside ``S``.

    The margin of a coefficient vector is the smallest margin of ``S`` over
    the images of a fixed finite ball grid.
    """
    M = space.design(grid)
    G = len(grid)

    def margin(C):
        Y = space.images(C, M)
        B = Y.shape[0]
        return S.margin(Y.reshape(-1, space.n)).reshape(B, G).min(axis=1)

    return Region.from_oracle(margin, space.N, convex=False, witness=witness, name=name)


def _rational_point(x, limit: int = 2 ** 20) -> tuple:
    return tuple(Fraction(float(v)).limit_denominator(limit) for v in x)


def oracle_bridge(S1: SemialgebraicSet, S2: SemialgebraicSet, rng: np.random.Generator,
                  n: int = 4000, samples: int = 1000, max_halvings: int = 30) -> BridgeSpec | None:
    """Straight bridge through a sampled point of ``int S1 & int S2`` (None without overlap).

    The arc ``q + s e_1`` is validated on ``samples`` points for both sets.
    """
    if S1.dim != S2.dim:
        raise ValueError("dimension mismatch")
    P = np.vstack([S1.sample(n, rng), S2.sample(n, rng)])
    both = np.minimum(S1.margin(P), S2.margin(P))
    if both.max() <= 0:
        return None
    q = _rational_point(P[int(np.argmax(both))])
    qf = np.array([float(c) for c in q])
    if min(S1.margin(qf[None, :])[0], S2.margin(qf[None, :])[0]) <= 0:
        return None
    dim = S1.dim
    w = tuple(Fraction(int(i == 0)) for i in range(dim))
    v = tuple(Fraction(0) for _ in range(dim))
    eps = Fraction(1)
    s = np.linspace(-1.0, 1.0, samples)
    for _ in range(max_halvings):
        r = float(eps ** 3)
        A = qf + np.outer(s * r, [float(c) for c in w])
        m = min(S1.margin(A).min(), S2.margin(A).min())
        if m > 0:
            return BridgeSpec(q, v, w, eps, {"kind": "overlap", "min_margin": float(m), "samples": samples})
        eps /= 2
    return None


def _brick_order(bricks: Sequence[BrickResult], rng) -> tuple[list, list]:
    nodes = list(range(len(bricks)))
    edges = {}
    for i, j in itertools.combinations(nodes, 2):
        b = oracle_bridge(bricks[i].set, bricks[j].set, rng)
        if b is not None:
            edges[(i, j)] = b
    graph = BridgeGraph(nodes, edges)
    walk = walk_order(graph)
    return walk, [graph.bridge(walk[k], walk[k + 1]) for k in range(len(walk) - 1)]


def _union_set(sets: Sequence[SemialgebraicSet]) -> SemialgebraicSet:
    dim = sets[0].dim
    bs = [s.bounds for s in sets]
    bounds = None if any(b is None for b in bs) else [
        (min(b[i][0] for b in bs), max(b[i][1] for b in bs)) for i in range(dim)]

    def margin(X):
        return np.max([s.margin(X) for s in sets], axis=0)

    return SemialgebraicSet(dim, [], bounds=bounds, margin_fn=margin, name="brick-union")


def _lift_bridge(space: CoefficientSpace, b: BridgeSpec) -> BridgeSpec:
    """Constant maps along a spatial bridge arc."""
    return BridgeSpec(space.constant(b.q), space.constant(b.v), space.constant(b.w), b.eps, dict(b.certificate))


def build_brick_union_map(bricks: Sequence[BrickResult], bridges: Sequence[BridgeSpec] | None = None,
                          n_samples: int = 10_000, n_image: int = 100_000, n_target: int = 1000,
                          tol: float = 1e-9, seed: int = 0, degree_cap: int = 200, retry_cap: int = 8,
                          path_samples: int = 1000, grid_size: int = 1000, anchor_tol: float = 1e-6,
                          certify: bool = True) -> UnionCertificate:
    """Polynomial map from ``B_{m+1}`` onto a union of bricks with a common source ball ``B_m``.

    Each brick map is a point of the space of degree-d maps.  A single
    polynomial path ``phi`` in that space visits the brick maps at ``t_k``
    and the constant maps at the spatial base points at ``s_k``; in between
    it stays among maps whose (sampled) image of ``B_m`` lies inside the
    brick of the current slot.  ``Phi(t, x) = phi(t)(x)``.

    ``bridges`` gives the spatial bridge between consecutive bricks in the
    given order; without it the bricks are ordered by a walk of the graph of
    sampled overlap bridges.
    """
    t0 = time.perf_counter()
    bricks = list(bricks)
    if not bricks:
        raise ValueError("no bricks")
    m, n = bricks[0].source_dim, bricks[0].target_dim
    if any(b.source_dim != m or b.target_dim != n for b in bricks):
        raise ValueError("all bricks must share source and target dimension")
    rng = np.random.default_rng(seed)
    if bridges is None:
        walk, sp_bridges = _brick_order(bricks, rng)
    else:
        sp_bridges = list(bridges)
        if len(sp_bridges) != len(bricks) - 1:
            raise ValueError("one spatial bridge per consecutive pair of bricks")
        walk = list(range(len(bricks)))
    ordered = [bricks[k] for k in walk]
    ell = len(ordered)
    d = max(b.map.degree() for b in bricks)
    space = CoefficientSpace(m, n, d)

    grid = sample_ball(m, grid_size, np.random.default_rng(seed + 7), sphere_fraction=0.5)
    anchors = [space.flatten(b.map) for b in ordered]
    regions = []
    for k, b in enumerate(ordered):
        c = space.constant(b.homotopy_center)
        R = omega_region(space, b.set, grid, c, name=f"omega-{b.name or walk[k]}")
        am = float(R.margin(np.array([[float(v) for v in anchors[k]]]))[0])
        if am < -anchor_tol:
            raise ValueError(f"brick {walk[k]} ({b.name}) maps the ball grid outside its set (margin {am:.3g})")
        regions.append(R)
    if ell == 1:
        t, s = [Fraction(0)], []
    else:
        t = [Fraction(k, ell - 1) for k in range(ell)]
        s = [(a + b) / 2 for a, b in zip(t, t[1:])]
    lifted = [_lift_bridge(space, b) for b in sp_bridges]
    chains = {k: [R.witness] for k, R in enumerate(regions)}
    plan = RegionPlan(regions, anchors, lifted, t, s, chains)
    res = smart_path(plan, retry_cap=retry_cap, degree_cap=degree_cap, samples=path_samples)
    phi = res.path
    if ell == 1:
        # phi is constant at the brick map, which sits on the closure of its region
        for iv in res.certificate["intervals"]:
            iv["ok"] = iv["min_margin"] >= -anchor_tol
        res.certificate["ok"] = all(iv["ok"] for iv in res.certificate["intervals"]) and all(
            w["exact"] for w in res.certificate["waypoints"])

    # Phi(t, x) = phi(t)(x), with (x, z) from the cylinder and t = (z + 1) / 2
    V = m + 1
    first = [MultiPoly.variable(i, V) for i in range(m)] + [_sweep_poly(u, m, V) for u in phi]
    W = m + space.N
    mono = [MultiPoly(W, {e + (0,) * space.N: Fraction(1)}) for e in space.monomials]
    second = []
    for j in range(n):
        comp = MultiPoly(W)
        for i in range(space.K):
            comp = comp + MultiPoly.variable(m + j * space.K + i, W) * mono[i]
        second.append(comp)
    cyl = cylinder_map(m + 1).map
    F = PolyMap.chain(list(cyl.stages) + [first, second], trace=f"brick-union{m}")

    rows = []
    for k in range(ell):
        got = tuple(u(t[k]) for u in phi)
        rows.append({"param": frac_str(t[k]), "expected": "brick map", "got": "phi(t_k)", "exact": got == anchors[k]})
        if k < len(s):
            got = tuple(u(s[k]) for u in phi)
            const = space.constant(sp_bridges[k].q)
            rows.append({"param": frac_str(s[k]), "expected": [frac_str(c) for c in sp_bridges[k].q],
                         "got": [frac_str(got[j * space.K]) for j in range(n)], "exact": got == const})
    waypoints = VerifyReport(waypoints=rows)
    target = _union_set([b.set for b in bricks])
    reports = {"path": res.certificate}
    if certify:
        reports.update(_certify(F, target, n_samples, n_image, n_target, tol, seed))
    return UnionCertificate(F, m + 1, target, waypoints, reports, walk, [res], time.perf_counter() - t0,
                            notes=f"coefficient space dimension {space.N} (degree {d}); path degree {res.degree}")
