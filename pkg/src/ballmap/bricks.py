"""Catalog of polynomial maps from closed unit balls onto elementary sets ("bricks").

Every constructor returns a :class:`BrickResult` holding the map (a lazy chain
of polynomial stages), a membership description of the target, and an
interior point used as the centre of the shrinking homotopy
``(t, x) -> t p + (1 - t) F(x)``.

Maps whose construction needs irrational constants (square roots,
trigonometric values of the angle parameters) store the binary64 values as
exact fractions and are marked ``float_tagged``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .geometry import HPolytope, SemialgebraicSet, Simplex
from .polycore import MultiPoly, PolyMap, UniPoly, as_fraction, frac_str

__all__ = [
    "BrickResult",
    "cubic_g",
    "cylinder_h",
    "peaked_inverse_h",
    "inverse_h",
    "simplex_map",
    "square_map_2d",
    "cylinder_map",
    "hypercube_map",
    "prism_map",
    "ball_from_cube",
    "ball_product_map",
    "product_of_bricks",
    "product_map",
    "convex_hull_map",
    "spherical_star_map",
    "truncated_cone_map",
    "parabolic_n_map",
    "parabolic2_map",
    "triangle_map_symmetric",
    "phi0",
    "phi1",
    "phi2",
    "psi0",
    "psi1",
    "psi2",
    "elliptic_sector_map",
    "elliptic_segment_map",
    "hyperbolic_sector_map",
    "hyperbolic_segment_map",
    "hyperbolic_angle_plan",
    "revolution_map",
    "parity_check",
    "brick_homotopy",
    "affine_brick",
    "ball_map",
    "toeplitz_set",
    "toeplitz_brick",
    "build_brick",
    "parse_angle",
]


@dataclass
class BrickResult:
    """A polynomial map ``F`` with ``F(closed unit ball of dim m) = set``."""

    map: PolyMap
    set: SemialgebraicSet
    homotopy_center: tuple
    name: str = ""
    params: dict = field(default_factory=dict)
    radially_convex: bool = True

    @property
    def source_dim(self) -> int:
        return self.map.n_in

    @property
    def target_dim(self) -> int:
        return self.map.n_out

    @property
    def float_tagged(self) -> bool:
        return self.map.float_tagged

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": {k: (frac_str(v) if isinstance(v, Fraction) else v) for k, v in self.params.items()},
            "source_dim": self.source_dim,
            "homotopy_center": [frac_str(c) for c in self.homotopy_center],
            "radially_convex": self.radially_convex,
            "map": self.map.to_json(),
        }


# ---------------------------------------------------------------------------
# small helpers


def _x(i: int, n: int) -> MultiPoly:
    return MultiPoly.variable(i, n)


def _c(v, n: int, tagged: bool = False) -> MultiPoly:
    return MultiPoly.constant(v, n, float_tagged=tagged)


def _sqnorm(idx: Sequence[int], n: int) -> MultiPoly:
    out = MultiPoly(n)
    for i in idx:
        out = out + _x(i, n) * _x(i, n)
    return out


def _fl(v: float) -> Fraction:
    """Exact fraction of a binary64 constant."""
    return Fraction(float(v))


def _frac(v) -> Fraction:
    return as_fraction(v)


def _exact_sqrt(q: Fraction) -> Fraction | None:
    q = as_fraction(q)
    if q < 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def _tag(p: MultiPoly, tagged: bool) -> MultiPoly:
    return MultiPoly(p.nvars, p.terms, p.float_tagged or tagged, p.uni)


def _box(lo, hi) -> list:
    return [(float(a), float(b)) for a, b in zip(lo, hi)]


def parse_angle(a) -> float:
    """Angle in radians from a number or a string such as ``"0.6"``, ``"pi/4"`` or ``"3*pi/4"``."""
    if isinstance(a, (int, float, Fraction)):
        return float(a)
    s = str(a).strip().replace(" ", "")
    m = re.fullmatch(r"(?:([0-9.]+)\*?)?pi(?:/([0-9.]+))?", s)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    return float(Fraction(s))


# ---------------------------------------------------------------------------
# univariate building blocks


def cubic_g() -> UniPoly:
    """``g(t) = t (3 - 4 t^2)``: maps [-1/2, 1/2] onto [-1, 1] and keeps [-1, 1] inside it."""
    return UniPoly([0, 3, 0, -4])


def cylinder_h() -> UniPoly:
    """``h(t) = sqrt(3) (1 - 4 t^2 / 9)`` (float tagged)."""
    s3 = _fl(math.sqrt(3.0))
    return UniPoly([s3, 0, -s3 * Fraction(4, 9)], float_tagged=True)


def peaked_inverse_h(n: int) -> UniPoly:
    """``t^2 (t - n)^(2(n-1)) / (n-1)^(2(n-1))`` for ``n >= 2``.

    It satisfies ``h(0) = h(n) = 0`` and ``h(1) = 1``, but ``x -> h(|x|^2) x``
    leaves the unit ball just outside the unit sphere, so the ball-from-cube
    map uses :func:`inverse_h` instead.
    """
    if n < 2:
        raise ValueError("defined for n >= 2")
    k = 2 * (n - 1)
    base = UniPoly([-n, 1]) ** k
    return UniPoly([0, 0, 1]) * base * UniPoly([Fraction(1, (n - 1) ** k)])


def inverse_h(n: int) -> UniPoly:
    """Radial profile ``h`` with ``x -> h(|x|^2) x`` mapping ``[-1, 1]^n`` onto the unit ball.

    ``h(s) = ((N - s) / (N - 1))^((N - 1)/2)`` with ``N`` the least odd integer
    ``>= max(n, 3)``.  Then ``r h(r^2)`` increases on ``[0, 1]`` from 0 to 1,
    decreases on ``[1, sqrt(N)]`` and stays nonnegative there, and
    ``[-1, 1]^n`` lies in the ball of radius ``sqrt(n) <= sqrt(N)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    N = max(n, 3)
    if N % 2 == 0:
        N += 1
    k = (N - 1) // 2
    return UniPoly([Fraction(N, N - 1), Fraction(-1, N - 1)]) ** k


# ---------------------------------------------------------------------------
# lazy product of maps


def product_map(maps: Sequence[PolyMap], trace: str = "") -> PolyMap:
    """Block-diagonal product ``(x_1, ..., x_l) -> (f_1(x_1), ..., f_l(x_l))``."""
    maps = list(maps)
    L = max(len(m.stages) for m in maps)
    dims = [m.n_in for m in maps]
    stages = []
    for s in range(L):
        total = sum(dims)
        comps = []
        off = 0
        newdims = []
        for m, d in zip(maps, dims):
            pos = list(range(off, off + d))
            if s < len(m.stages):
                st = m.stages[s]
                comps += [c.embed(total, pos) for c in st]
                newdims.append(len(st))
            else:
                comps += [_x(p, total) for p in pos]
                newdims.append(d)
            off += d
        stages.append(comps)
        dims = newdims
    return PolyMap.chain(stages, trace=trace or "product(" + ", ".join(m.trace for m in maps) + ")")


def _append_stage(F: PolyMap, stage: Sequence[MultiPoly], trace: str) -> PolyMap:
    return PolyMap.chain(list(F.stages) + [tuple(stage)], trace=f"{trace} o {F.trace}")


def _affine_stage(A, b, tagged: bool = False) -> list:
    n_in = len(A[0])
    comps = []
    for row, bi in zip(A, b):
        p = _c(bi, n_in, tagged)
        for j, a in enumerate(row):
            if a != 0:
                p = p + _x(j, n_in) * _c(a, n_in, tagged)
        comps.append(_tag(p, tagged))
    return comps


# ---------------------------------------------------------------------------
# simplices, cylinders, cubes, prisms, balls


def _squaring_stage(n: int) -> list:
    return [_x(i, n) * _x(i, n) for i in range(n)]


def simplex_map(vertices) -> BrickResult:
    """``x -> v_0 + sum_i x_i^2 (v_i - v_0)`` maps the unit ball onto the simplex."""
    S = Simplex(vertices)  # validates affine independence
    V = [tuple(as_fraction(c) for c in v) for v in vertices]
    n = len(V) - 1
    v0 = V[0]
    A = [[V[j + 1][i] - v0[i] for j in range(n)] for i in range(n)]
    aff = _affine_stage(A, v0)
    F = PolyMap.chain([_squaring_stage(n), aff], trace=f"simplex{n}")
    return BrickResult(F, S.to_set(), S.centroid(), name="simplex", params={"vertices": [[frac_str(c) for c in v] for v in V]})


def square_map_2d() -> PolyMap:
    """Separable map of the disc onto ``[-1, 1]^2``: ``(x_1 h(x_1), g(x_2))``."""
    return cylinder_map(2).map


def _cylinder_stage(n: int) -> list:
    h = cylinder_h()
    s3 = h.coeffs[0]
    w = _sqnorm(range(n - 1), n)
    hx = _tag(_c(s3, n, True) - w * _c(s3 * Fraction(4, 9), n, True), True)
    comps = [_tag(_x(i, n) * hx, True) for i in range(n - 1)]
    comps.append(MultiPoly.from_unipoly(cubic_g(), n - 1, n))
    return comps


def cylinder_map(n: int) -> BrickResult:
    """``(x', x_n) -> (x' h(|x'|), g(x_n))`` maps the ball onto ``B_{n-1} x [-1, 1]``."""
    if n < 2:
        raise ValueError("the cylinder needs n >= 2")
    F = PolyMap.chain([_cylinder_stage(n)], trace=f"cylinder{n}")
    ineqs = [_c(1, n) - _sqnorm(range(n - 1), n), _c(1, n) - _x(n - 1, n) * _x(n - 1, n)]
    S = SemialgebraicSet(n, [ineqs], bounds=[(-1, 1)] * n, name=f"cylinder{n}")
    return BrickResult(F, S, tuple(Fraction(0) for _ in range(n)), name="cylinder", params={"n": n})


def _hypercube_polymap(n: int) -> PolyMap:
    if n == 1:
        return PolyMap.identity(1)
    cyl = PolyMap.chain([_cylinder_stage(n)], trace=f"cylinder{n}")
    rest = product_map([_hypercube_polymap(n - 1), PolyMap.identity(1)], trace=f"cube{n - 1} x id")
    return PolyMap.chain(list(cyl.stages) + list(rest.stages), trace=f"cube{n}")


def _cube_set(n: int) -> SemialgebraicSet:
    ineqs = [_c(1, n) - _x(i, n) * _x(i, n) for i in range(n)]
    return SemialgebraicSet(n, [ineqs], bounds=[(-1, 1)] * n, name=f"cube{n}")


def hypercube_map(n: int) -> BrickResult:
    """``[-1, 1]^n`` as the image of the ball: cylinder map, then the (n-1)-cube map on the first factor."""
    if n < 1:
        raise ValueError("n must be positive")
    F = _hypercube_polymap(n)
    return BrickResult(F, _cube_set(n), tuple(Fraction(0) for _ in range(n)), name="hypercube", params={"n": n})


def prism_map(vertices=None, n: int | None = None) -> BrickResult:
    """Simplicial prism ``simplex x [-1, 1]`` as the image of ``B_{n+1}``.

    The squaring of the cylinder map is carried out symbolically, so the
    first stage is exact: ``3 (1 - 4|x'|^2/9)^2 x_i^2`` and ``3 z - 4 z^3``.
    """
    if vertices is None:
        if n is None:
            raise ValueError("give the simplex vertices or the dimension")
        vertices = [tuple(Fraction(int(i == j)) for i in range(n)) for j in range(-1, n)]
    S = Simplex(vertices)
    V = [tuple(as_fraction(c) for c in v) for v in vertices]
    n = len(V) - 1
    N = n + 1
    w = _sqnorm(range(n), N)
    base = _c(1, N) - w * _c(Fraction(4, 9), N)
    base2 = base * base * _c(3, N)
    first = [base2 * _x(i, N) * _x(i, N) for i in range(n)]
    first.append(MultiPoly.from_unipoly(cubic_g(), n, N))
    v0 = V[0]
    A = [[V[j + 1][i] - v0[i] for j in range(n)] + [0] for i in range(n)]
    A.append([0] * n + [1])
    aff = _affine_stage(A, list(v0) + [0])
    F = PolyMap.chain([first, aff], trace=f"prism{n}")
    hp = S.to_hpolytope()
    ineqs = [g.embed(N, list(range(n))) for g in hp.to_set().pieces[0]]
    ineqs.append(_c(1, N) - _x(n, N) * _x(n, N))
    bounds = hp.bounds() + [(-1.0, 1.0)]
    T = SemialgebraicSet(N, [ineqs], bounds=bounds, name=f"prism{n}")
    return BrickResult(F, T, S.centroid() + (Fraction(0),), name="prism", params={"vertices": [[frac_str(c) for c in v] for v in V]})


def ball_from_cube(n: int) -> PolyMap:
    """``x -> h(|x|^2) x`` mapping ``[-1, 1]^n`` onto the closed unit ball."""
    if n == 1:
        return PolyMap([MultiPoly(1, {(1,): Fraction(3, 2), (3,): Fraction(-1, 2)})], 1, trace="ball_from_cube1")
    h = inverse_h(n)
    w = _sqnorm(range(n), n)
    hw = MultiPoly(n)
    for c in reversed(h.coeffs):
        hw = hw * w + _c(c, n)
    comps = [hw * _x(i, n) for i in range(n)]
    return PolyMap(comps, n, trace=f"ball_from_cube{n}")


def _ball_set(n: int) -> SemialgebraicSet:
    return SemialgebraicSet(n, [[_c(1, n) - _sqnorm(range(n), n)]], bounds=[(-1, 1)] * n, name=f"ball{n}")


def ball_map(n: int) -> BrickResult:
    """The closed ball itself (identity map)."""
    return BrickResult(PolyMap.identity(n), _ball_set(n), tuple(Fraction(0) for _ in range(n)), name="ball", params={"n": n})


def _product_set(sets: Sequence[SemialgebraicSet]) -> SemialgebraicSet:
    n = sum(s.dim for s in sets)
    offs = np.cumsum([0] + [s.dim for s in sets])
    bounds = None
    if all(s.bounds is not None for s in sets):
        bounds = [b for s in sets for b in s.bounds]
    if any(s.margin_fn is not None for s in sets):
        def margin(X, sets=sets, offs=offs):
            return np.min([s.margin(X[:, offs[i]:offs[i + 1]]) for i, s in enumerate(sets)], axis=0)
        return SemialgebraicSet(n, [[]], bounds=bounds, margin_fn=margin, name="product")
    pieces = [[]]
    for i, s in enumerate(sets):
        pos = list(range(offs[i], offs[i + 1]))
        new = []
        for acc in pieces:
            for pc in s.pieces:
                new.append(acc + [g.embed(n, pos) for g in pc])
        pieces = new
    return SemialgebraicSet(n, pieces, bounds=bounds, name="product")


def ball_product_map(*dims: int) -> BrickResult:
    """Product of closed balls ``B_{n_1} x ... x B_{n_l}`` from ``B_n``, ``n = sum n_i``.

    Route: ball -> cube -> per-factor ``ball_from_cube`` (identity on
    one-dimensional factors, where the cube factor already is the ball).
    """
    if len(dims) == 1 and isinstance(dims[0], (list, tuple)):
        dims = tuple(dims[0])
    if not dims or any(d < 1 for d in dims):
        raise ValueError("dimensions must be positive")
    n = sum(dims)
    center = tuple(Fraction(0) for _ in range(n))
    if len(dims) == 1:
        r = ball_map(dims[0])
        r.name, r.params = "ball_product", {"dims": list(dims)}
        return r
    cube = _hypercube_polymap(n)
    factors = product_map([PolyMap.identity(1) if d == 1 else ball_from_cube(d) for d in dims])
    F = PolyMap.chain(list(cube.stages) + list(factors.stages), trace=f"ball_product{tuple(dims)}")
    S = _product_set([_ball_set(d) for d in dims])
    return BrickResult(F, S, center, name="ball_product", params={"dims": list(dims)})


def product_of_bricks(results: Sequence[BrickResult]) -> BrickResult:
    """Product brick: ``B_m -> prod B_{m_i}`` (ball product map), then each factor's map."""
    results = list(results)
    if len(results) == 1:
        return results[0]
    dims = [r.source_dim for r in results]
    src = ball_product_map(*dims).map
    F = PolyMap.chain(list(src.stages) + list(product_map([r.map for r in results]).stages), trace="product_of_bricks")
    S = _product_set([r.set for r in results])
    center = tuple(c for r in results for c in r.homotopy_center)
    return BrickResult(F, S, center, name="product", params={"factors": [r.name for r in results]},
                       radially_convex=all(r.radially_convex for r in results))


# ---------------------------------------------------------------------------
# convex hulls


def _source_cloud(m: int, n_samples: int, rng) -> np.ndarray:
    if m == 1:
        return np.linspace(-1, 1, n_samples)[:, None]
    d = rng.standard_normal((n_samples, m))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    # half the points on the sphere, half inside
    r = np.ones(n_samples)
    r[n_samples // 2:] = rng.random(n_samples - n_samples // 2) ** (1.0 / m)
    return d * r[:, None]


def convex_hull_map(f: PolyMap, hull_samples: int = 20000, hull_pad: float = 1e-6, seed: int = 0,
                    target_set: SemialgebraicSet | None = None) -> BrickResult:
    """Convex hull of ``f(B_m)`` as the image of ``B_{m(n+1)+n}``.

    Source route: ball -> product ``B_m^{n+1} x B_n`` -> ``(f, ..., f, squaring)``
    -> ``(1 - sum l_k) f(y_0) + sum l_k f(y_k)``.

    Without ``target_set`` the membership description is the convex hull of a
    sampled image cloud, pushed outward by ``hull_pad`` (ambient dim <= 3).
    """
    m, n = f.n_in, f.n_out
    dims = [m] * (n + 1) + [n]
    src = ball_product_map(*dims).map
    lift = product_map([f] * (n + 1) + [PolyMap([_x(i, n) * _x(i, n) for i in range(n)], n)])
    # Caratheodory combination: variables y_0 (n), ..., y_n (n), lambda (n)
    N = n * (n + 1) + n
    lam = [_x(n * (n + 1) + k, N) for k in range(n)]
    lam0 = _c(1, N)
    for l in lam:
        lam0 = lam0 - l
    comb = []
    for i in range(n):
        p = lam0 * _x(i, N)
        for k in range(1, n + 1):
            p = p + lam[k - 1] * _x(k * n + i, N)
        comb.append(p)
    F = PolyMap.chain(list(src.stages) + list(lift.stages) + [comb], trace=f"conv({f.trace})")
    rng = np.random.default_rng(seed)
    cloud = f.eval_float(_source_cloud(m, hull_samples, rng))
    center = tuple(_fl(v) for v in cloud.mean(axis=0))
    if target_set is not None:
        S = target_set
    else:
        S = _hull_set(cloud, hull_pad)
    return BrickResult(F, S, center, name="convex_hull", params={"inner": f.trace})


def _hull_set(cloud: np.ndarray, pad: float) -> SemialgebraicSet:
    from scipy.spatial import ConvexHull

    n = cloud.shape[1]
    lo, hi = cloud.min(0), cloud.max(0)
    span = hi - lo
    flat = span <= 1e-12 * max(1.0, float(np.abs(cloud).max()))
    if flat.all():
        c = cloud.mean(0)
        ineqs = []
        for i in range(n):
            ineqs.append(_c(_fl(c[i] + pad), n, True) - _x(i, n))
            ineqs.append(_x(i, n) - _c(_fl(c[i] - pad), n, True))
        return SemialgebraicSet(n, [[_tag(g, True) for g in ineqs]], bounds=_box(c - pad, c + pad), name="hull")
    if n == 1:
        ineqs = [_tag(_c(_fl(hi[0] + pad), 1, True) - _x(0, 1), True), _tag(_x(0, 1) - _c(_fl(lo[0] - pad), 1, True), True)]
        return SemialgebraicSet(1, [ineqs], bounds=_box(lo - pad, hi + pad), name="hull")
    # lower-dimensional clouds: hull inside the affine span
    c0 = cloud.mean(0)
    U, s, Vt = np.linalg.svd(cloud - c0, full_matrices=False)
    rank = int((s > 1e-9 * s[0]).sum())
    basis = Vt[:rank]
    normal = Vt[rank:]
    proj = (cloud - c0) @ basis.T
    if rank == 1:
        a_list = [basis[0], -basis[0]]
        b_list = [proj.max() + pad, -proj.min() + pad]
    else:
        hull = ConvexHull(proj)
        a_list, b_list = [], []
        for eq in hull.equations:
            a, off = eq[:-1], eq[-1]
            a_list.append(a @ basis)
            b_list.append(-off + pad)
    ineqs = []
    for a, b in zip(a_list, b_list):
        b_amb = b + float(a @ c0)
        g = _c(_fl(b_amb), n, True)
        for j in range(n):
            g = g - _x(j, n) * _c(_fl(a[j]), n, True)
        ineqs.append(_tag(g, True))
    for nv in normal:
        for sgn in (1.0, -1.0):
            a = sgn * nv
            g = _c(_fl(pad + float(a @ c0)), n, True)
            for j in range(n):
                g = g - _x(j, n) * _c(_fl(a[j]), n, True)
            ineqs.append(_tag(g, True))
    return SemialgebraicSet(n, [ineqs], bounds=_box(lo - pad, hi + pad), name="hull")


def toeplitz_set() -> SemialgebraicSet:
    """``{(x, y, z) : [[1,x,y,z],[x,1,x,y],[y,x,1,x],[z,y,x,1]] is PSD}``.

    The polynomial description lists all principal minors; the numeric margin
    is the smallest eigenvalue.
    """
    n = 3
    X, Y, Z = _x(0, n), _x(1, n), _x(2, n)
    one = _c(1, n)
    M = [[one, X, Y, Z], [X, one, X, Y], [Y, X, one, X], [Z, Y, X, one]]

    def det(rows, cols):
        if len(rows) == 1:
            return M[rows[0]][cols[0]]
        out = MultiPoly(n)
        for j, c in enumerate(cols):
            sub = det(rows[1:], cols[:j] + cols[j + 1:])
            term = M[rows[0]][c] * sub
            out = out + term if j % 2 == 0 else out - term
        return out

    import itertools

    minors = []
    for k in range(1, 5):
        for idx in itertools.combinations(range(4), k):
            minors.append(det(list(idx), list(idx)))

    def margin(P):
        P = np.atleast_2d(P)
        x, y, z = P[:, 0], P[:, 1], P[:, 2]
        one_ = np.ones_like(x)
        T = np.stack([
            np.stack([one_, x, y, z], -1),
            np.stack([x, one_, x, y], -1),
            np.stack([y, x, one_, x], -1),
            np.stack([z, y, x, one_], -1),
        ], -2)
        return np.linalg.eigvalsh(T)[:, 0]

    S = SemialgebraicSet(3, [minors], bounds=[(-1, 1)] * 3, margin_fn=margin, name="toeplitz")
    return S


def toeplitz_brick() -> BrickResult:
    """Convex hull of the cosine moment curve ``(t, 2t^2 - 1, 4t^3 - 3t)`` from ``B_7``."""
    curve = PolyMap([
        MultiPoly(1, {(1,): 1}),
        MultiPoly(1, {(2,): 2, (0,): -1}),
        MultiPoly(1, {(3,): 4, (1,): -3}),
    ], 1, trace="cosine_moment_curve")
    r = convex_hull_map(curve, target_set=toeplitz_set())
    r.homotopy_center = (Fraction(0), Fraction(0), Fraction(0))
    r.name = "toeplitz"
    return r


# ---------------------------------------------------------------------------
# stars, cones, parabolic segments


def spherical_star_map(*weights: int) -> BrickResult:
    """``x -> (x_1^k_1, ..., x_n^k_n)``: image ``{sum |y_i|^(2/k_i) <= 1, y_i >= 0 for even k_i}``."""
    if len(weights) == 1 and isinstance(weights[0], (list, tuple)):
        weights = tuple(weights[0])
    ks = [int(k) for k in weights]
    if not ks or any(k < 1 for k in ks):
        raise ValueError("weights must be positive integers")
    n = len(ks)
    comps = [_x(i, n) ** k if k > 1 else _x(i, n) for i, k in enumerate(ks)]
    F = PolyMap(comps, n, trace=f"star{tuple(ks)}")
    even = [i for i, k in enumerate(ks) if k % 2 == 0]
    big = [i for i, k in enumerate(ks) if k >= 3]
    sign = [_x(i, n) for i in even]

    def term(i):
        # |y_i|^(2/k_i) for k_i in {1, 2}
        return _x(i, n) * _x(i, n) if ks[i] == 1 else _x(i, n)

    bounds = [(0.0, 1.0) if k % 2 == 0 else (-1.0, 1.0) for k in ks]
    if len(big) <= 1:
        if big:
            j = big[0]
            rest = _c(1, n)
            for i in range(n):
                if i != j:
                    rest = rest - term(i)
            # |y_j|^(2/k_j) <= rest  <=>  y_j^2 <= rest^k_j  (rest >= 0)
            main = [rest, rest ** ks[j] - _x(j, n) * _x(j, n)]
        else:
            acc = _c(1, n)
            for i in range(n):
                acc = acc - term(i)
            main = [acc]
        S = SemialgebraicSet(n, [main + sign], bounds=bounds, name=f"star{tuple(ks)}")
    else:
        def margin(X, ks=ks, even=even):
            X = np.atleast_2d(X)
            tot = np.zeros(X.shape[0])
            for i, k in enumerate(ks):
                tot += np.abs(X[:, i]) ** (2.0 / k)
            m = 1.0 - tot
            for i in even:
                m = np.minimum(m, X[:, i])
            return m
        S = SemialgebraicSet(n, [[]], bounds=bounds, margin_fn=margin, name=f"star{tuple(ks)}")
    x0 = [0.0 if k % 2 else 1.0 / (2.0 * math.sqrt(n)) for k in ks]
    center = tuple(_fl(v) ** k for v, k in zip(x0, ks))
    convex = all(k <= 2 for k in ks)
    return BrickResult(F, S, center, name="spherical_star", params={"weights": ks}, radially_convex=convex)


def truncated_cone_map(a, b, n: int = 2) -> BrickResult:
    """``{|x'|^2 <= x_n^2, a <= x_n <= b}`` from the cylinder via ``(x' x_n, x_n)``."""
    a, b = as_fraction(a), as_fraction(b)
    if not a < b:
        raise ValueError("need a < b")
    if a < 0 < b:
        raise ValueError("the double cone with a < 0 < b is not convex; use a >= 0 or b <= 0")
    if n < 2:
        raise ValueError("n >= 2")
    cyl = PolyMap.chain([_cylinder_stage(n)], trace=f"cylinder{n}")
    # last coordinate [-1, 1] -> [a, b]
    A = [[int(i == j) for j in range(n)] for i in range(n)]
    A[n - 1][n - 1] = (b - a) / 2
    shift = [0] * (n - 1) + [(a + b) / 2]
    aff = _affine_stage(A, shift)
    cone = [_x(i, n) * _x(n - 1, n) for i in range(n - 1)] + [_x(n - 1, n)]
    F = PolyMap.chain(list(cyl.stages) + [aff, cone], trace=f"truncated_cone{n}")
    xn = _x(n - 1, n)
    ineqs = [xn * xn - _sqnorm(range(n - 1), n), xn - _c(a, n), _c(b, n) - xn]
    R = float(max(abs(a), abs(b)))
    S = SemialgebraicSet(n, [ineqs], bounds=[(-R, R)] * (n - 1) + [(float(a), float(b))], name="truncated_cone")
    center = tuple([Fraction(0)] * (n - 1) + [(a + b) / 2])
    return BrickResult(F, S, center, name="truncated_cone", params={"a": a, "b": b, "n": n})


def parabolic_n_map(n: int) -> BrickResult:
    """``{0 <= x_n <= 2 (1 - |x'|^2)}`` from the cylinder via ``(x', (1 - |x'|^2)(x_n + 1))``."""
    if n < 2:
        raise ValueError("n >= 2")
    cyl = PolyMap.chain([_cylinder_stage(n)], trace=f"cylinder{n}")
    w = _sqnorm(range(n - 1), n)
    stage = [_x(i, n) for i in range(n - 1)] + [(_c(1, n) - w) * (_x(n - 1, n) + _c(1, n))]
    F = PolyMap.chain(list(cyl.stages) + [stage], trace=f"parabolic{n}")
    xn = _x(n - 1, n)
    S = SemialgebraicSet(n, [[xn, _c(2, n) - w * _c(2, n) - xn]], bounds=[(-1, 1)] * (n - 1) + [(0, 2)], name=f"parabolic{n}")
    center = tuple([Fraction(0)] * (n - 1) + [Fraction(1)])
    return BrickResult(F, S, center, name="parabolic_n", params={"n": n})


def parabolic2_map(a) -> BrickResult:
    """``{x - y^2 >= 0, sqrt(a) y - x >= 0}`` as ``(u v, v)`` of the triangle ``(0,0), (r,0), (r,r)``, ``r = sqrt(a)``."""
    a = as_fraction(a)
    if a <= 0:
        raise ValueError("need a > 0")
    r = _exact_sqrt(a)
    tagged = r is None
    if r is None:
        r = _fl(math.sqrt(float(a)))
    tri = simplex_map([(0, 0), (r, 0), (r, r)])
    eta = [_x(0, 2) * _x(1, 2), _x(1, 2)]
    stages = list(tri.map.stages)
    stages[-1] = tuple(_tag(c, tagged) for c in stages[-1])
    F = PolyMap.chain(stages + [eta], trace=f"parabolic2({a})")
    X, Y = _x(0, 2), _x(1, 2)
    S = SemialgebraicSet(2, [[X - Y * Y, _tag(Y * _c(r, 2, tagged) - X, tagged)]],
                         bounds=[(0, float(a)), (0, float(r))], name="parabolic2")
    center = (2 * r * r / 9, r / 3)
    return BrickResult(F, S, center, name="parabolic2", params={"a": a})


# ---------------------------------------------------------------------------
# the two-dimensional maps of the sector/segment chains


def _poly2(terms: dict, tagged: bool = False) -> MultiPoly:
    return MultiPoly(2, terms, float_tagged=tagged)


def triangle_map_symmetric(c, slope) -> PolyMap:
    """Disc onto the triangle ``(0,0), (c, c s), (c, -c s)`` in parity form.

    ``T o square`` with ``T(u, v) = (c (u+1)/2, s c (u+1)/2 v)``; the first
    component depends on ``x_1`` only and the second is ``x_2`` times a
    polynomial in ``x_1, x_2^2``.
    """
    c, s = as_fraction(c), as_fraction(slope)
    if c <= 0 or s <= 0:
        raise ValueError("degenerate triangle")
    half = c / 2
    T = [_poly2({(1, 0): half, (0, 0): half}), _poly2({(1, 1): half * s, (0, 1): half * s})]
    return PolyMap.chain([_cylinder_stage(2), T], trace="triangle")


def phi0() -> list:
    """``(3 - |x|^2)/2 (x_1, x_2)``."""
    h = Fraction(1, 2)
    return [_poly2({(1, 0): 3 * h, (3, 0): -h, (1, 2): -h}), _poly2({(0, 1): 3 * h, (2, 1): -h, (0, 3): -h})]


def phi1() -> list:
    """Complex squaring ``(x_1^2 - x_2^2, 2 x_1 x_2)``."""
    return [_poly2({(2, 0): 1, (0, 2): -1}), _poly2({(1, 1): 2})]


def phi2(alpha: float) -> list:
    """``(x_1^2 - x_2^2 + (1 - |x|^2) cos 2a, 2 x_1 x_2)``."""
    c = _fl(math.cos(2 * alpha))
    return [_poly2({(2, 0): 1 - c, (0, 2): -1 - c, (0, 0): c}, True), _poly2({(1, 1): 2})]


def psi0() -> list:
    """``(3 - (x_1^2 - x_2^2))/2 (x_1, x_2)``."""
    h = Fraction(1, 2)
    return [_poly2({(1, 0): 3 * h, (3, 0): -h, (1, 2): h}), _poly2({(0, 1): 3 * h, (2, 1): -h, (0, 3): h})]


def psi1() -> list:
    """``(x_1^2 + x_2^2, 2 x_1 x_2)``."""
    return [_poly2({(2, 0): 1, (0, 2): 1}), _poly2({(1, 1): 2})]


def psi2(alpha: float) -> list:
    """``(x_1^2 + x_2^2 + (1 - x_1^2 + x_2^2) / cos 2a, 2 x_1 x_2)``."""
    k = _fl(1.0 / math.cos(2 * alpha))
    return [_poly2({(2, 0): 1 - k, (0, 2): 1 + k, (0, 0): k}, True), _poly2({(1, 1): 2})]


def _check_elliptic(alpha) -> float:
    a = parse_angle(alpha)
    if not 0 < a <= math.pi + 1e-15:
        raise ValueError("elliptic sectors and segments need 0 < alpha <= pi")
    return min(a, math.pi)


def _elliptic_sector_stages(alpha: float) -> list:
    beta = alpha / 4
    tri = triangle_map_symmetric(1, _fl(math.tan(beta)))
    return list(tri.stages) + [phi0(), phi1(), phi1()]


def _elliptic_sector_set(alpha: float) -> SemialgebraicSet:
    X, Y = _x(0, 2), _x(1, 2)
    disc = _c(1, 2) - X * X - Y * Y
    s2, c2 = _fl(math.sin(alpha) ** 2), _fl(math.cos(alpha) ** 2)
    if abs(alpha - math.pi / 2) < 1e-12:
        pieces = [[disc, X]]
    elif alpha < math.pi / 2:
        pieces = [[disc, X, _tag(X * X * _c(s2, 2) - Y * Y * _c(c2, 2), True)]]
    else:
        pieces = [[disc, X], [disc, _tag(Y * Y * _c(c2, 2) - X * X * _c(s2, 2), True)]]
    return SemialgebraicSet(2, pieces, bounds=[(-1, 1), (-1, 1)], name="elliptic_sector")


def _revolve_set(S: SemialgebraicSet, ell: int, name: str) -> SemialgebraicSet:
    if ell == 0:
        return S
    pieces = [[_revolve_even(g, 2, ell) for g in p] for p in S.pieces]
    bounds = list(S.bounds) + [S.bounds[-1]] * ell if S.bounds is not None else None
    return SemialgebraicSet(2 + ell, pieces, bounds=bounds, name=name)


def _planar_brick(stages, S2, center2, n, name, params, convex=True) -> BrickResult:
    F = PolyMap.chain(stages, trace=name)
    if n < 2:
        raise ValueError("n >= 2")
    if n > 2:
        F = revolution_map(F, n - 2)
        F.trace = f"{name}_n{n}"
    S = _revolve_set(S2, n - 2, name)
    center = tuple(center2) + tuple(Fraction(0) for _ in range(n - 2))
    return BrickResult(F, S, center, name=name, params=params, radially_convex=convex)


def elliptic_sector_map(alpha, n: int = 2) -> BrickResult:
    """Circular sector ``{rho <= 1, |theta| <= alpha}``: ``phi1 o phi1 o phi0 o triangle(alpha/4)``."""
    a = _check_elliptic(alpha)
    return _planar_brick(_elliptic_sector_stages(a), _elliptic_sector_set(a), (Fraction(1, 2), Fraction(0)), n,
                         "elliptic_sector", {"alpha": a, "n": n})


def elliptic_segment_map(alpha, n: int = 2) -> BrickResult:
    """Circular segment ``{rho <= 1, x >= cos alpha}``: ``phi2[alpha/2] o sector(alpha/2)``."""
    a = _check_elliptic(alpha)
    stages = _elliptic_sector_stages(a / 2) + [phi2(a / 2)]
    X, Y = _x(0, 2), _x(1, 2)
    ca = _fl(math.cos(a))
    S = SemialgebraicSet(2, [[_c(1, 2) - X * X - Y * Y, _tag(X - _c(ca, 2), True)]],
                         bounds=[(min(float(ca), 1.0), 1), (-1, 1)], name="elliptic_segment")
    center = (_fl((1 + math.cos(a)) / 2), Fraction(0))
    return _planar_brick(stages, S, center, n, "elliptic_segment", {"alpha": a, "n": n})


def _check_hyperbolic(alpha) -> float:
    a = parse_angle(alpha)
    if not 0 < a < math.pi / 4:
        raise ValueError("hyperbolic sectors and segments need 0 < alpha < pi/4")
    return a


def _angle_step(x: float) -> float:
    return math.atan(math.sin(2 * x))


def hyperbolic_angle_plan(alpha: float, tol: float = 1e-12) -> tuple[int, float]:
    """``(m, beta)`` with ``f^m(beta) = alpha`` for ``f(x) = arctan(sin 2x)`` and ``beta <= arctan(sqrt(2/3))``."""
    x0 = math.atan(math.sqrt(2.0 / 3.0))
    if alpha <= x0:
        return 0, alpha
    m, xm = 0, x0
    while xm <= alpha:
        xm = _angle_step(xm)
        m += 1
        if m > 200:
            raise ValueError("angle too close to pi/4")

    def fm(b):
        for _ in range(m):
            b = _angle_step(b)
        return b

    lo, hi = 0.0, x0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if fm(mid) < alpha:
            lo = mid
        else:
            hi = mid
    return m, (lo + hi) / 2


def _hyperbolic_sector_stages(alpha: float) -> list:
    m, beta = hyperbolic_angle_plan(alpha)
    c = math.cos(beta) / math.sqrt(math.cos(2 * beta))
    tri = triangle_map_symmetric(_fl(c), _fl(math.tan(beta)))
    return list(tri.stages) + [psi0()] + [psi1() for _ in range(m)]


def _hyperbolic_wedge(alpha: float) -> list:
    X, Y = _x(0, 2), _x(1, 2)
    s2, c2 = _fl(math.sin(alpha) ** 2), _fl(math.cos(alpha) ** 2)
    return [X, _tag(X * X * _c(s2, 2) - Y * Y * _c(c2, 2), True)]


def hyperbolic_sector_map(alpha, n: int = 2) -> BrickResult:
    """``{|theta| <= alpha, x^2 - y^2 <= 1}``: ``psi1^m o psi0 o triangle(beta)``."""
    a = _check_hyperbolic(alpha)
    X, Y = _x(0, 2), _x(1, 2)
    c = math.cos(a) / math.sqrt(math.cos(2 * a))
    S = SemialgebraicSet(2, [[_c(1, 2) - X * X + Y * Y] + _hyperbolic_wedge(a)],
                         bounds=[(0, c), (-c * math.tan(a), c * math.tan(a))], name="hyperbolic_sector")
    return _planar_brick(_hyperbolic_sector_stages(a), S, (Fraction(1, 2), Fraction(0)), n,
                         "hyperbolic_sector", {"alpha": a, "n": n})


def hyperbolic_segment_map(alpha, n: int = 2) -> BrickResult:
    """``{x^2 - y^2 >= 1, x <= cos a / sqrt(cos 2a)}``: ``psi2[beta] o sector(beta)``, ``beta = arcsin(tan a)/2``."""
    a = _check_hyperbolic(alpha)
    beta = math.asin(math.tan(a)) / 2
    stages = _hyperbolic_sector_stages(beta) + [psi2(beta)]
    X, Y = _x(0, 2), _x(1, 2)
    c = math.cos(a) / math.sqrt(math.cos(2 * a))
    S = SemialgebraicSet(2, [[X * X - Y * Y - _c(1, 2), _tag(_c(_fl(c), 2) - X, True)] + _hyperbolic_wedge(a)],
                         bounds=[(1, c), (-c * math.tan(a), c * math.tan(a))], name="hyperbolic_segment")
    center = (_fl((1 + c) / 2), Fraction(0))
    return _planar_brick(stages, S, center, n, "hyperbolic_segment", {"alpha": a, "beta": beta, "n": n})


# ---------------------------------------------------------------------------
# revolution


def _is_even_in(p: MultiPoly, var: int) -> bool:
    return all(e[var] % 2 == 0 for e in p.terms)


def _is_odd_in(p: MultiPoly, var: int) -> bool:
    return all(e[var] % 2 == 1 for e in p.terms)


def _stage_parity(stage: Sequence[MultiPoly]) -> bool:
    if not stage:
        return False
    m = stage[0].nvars
    return all(_is_even_in(c, m - 1) for c in stage[:-1]) and _is_odd_in(stage[-1], m - 1)


def parity_check(F) -> bool:
    """True if every component but the last is even in the last variable and the last one is odd.

    For a chained map each stage is tested; a chain of parity-form stages is
    in parity form.  If some stage fails, the expanded map is tested instead.
    """
    if isinstance(F, PolyMap):
        if F.n_out < 1 or F.n_in < 1:
            return False
        if all(_stage_parity(s) for s in F.stages):
            return True
        if len(F.stages) == 1:
            return False
        return _stage_parity(F.components)
    return _stage_parity(list(F))


def _revolve_even(p: MultiPoly, m: int, ell: int) -> MultiPoly:
    """Substitute ``x_m^2 -> x_m^2 + ... + x_{m+ell}^2`` in a polynomial even in ``x_m``."""
    N = m + ell
    S = _sqnorm(range(m - 1, N), N)
    powers = {0: _c(1, N)}
    out = MultiPoly(N, float_tagged=p.float_tagged)
    for e, c in p.terms.items():
        k = e[m - 1]
        if k % 2:
            raise ValueError("polynomial is not even in the revolved variable")
        h = k // 2
        if h not in powers:
            powers[h] = S ** h
        mono = {tuple(list(e[: m - 1]) + [0] * (ell + 1)): c}
        out = out + MultiPoly(N, mono, p.float_tagged) * powers[h]
    return _tag(out, p.float_tagged)


def _revolve_stage(stage: Sequence[MultiPoly], ell: int) -> list:
    m = stage[0].nvars
    N = m + ell
    out = [_revolve_even(c, m, ell) for c in stage[:-1]]
    last = stage[-1]
    red = {}
    for e, c in last.terms.items():
        if e[m - 1] % 2 != 1:
            raise ValueError("last component is not odd in the revolved variable")
        ne = list(e)
        ne[m - 1] -= 1
        red[tuple(ne)] = c
    even = _revolve_even(MultiPoly(m, red, last.float_tagged), m, ell)
    for j in range(m - 1, N):
        out.append(_tag(_x(j, N) * even, last.float_tagged))
    return out


def revolution_map(F: PolyMap, ell: int) -> PolyMap:
    """``G(x', x'') = (F_1(x', |x''|), ..., x'' F~_k(x', |x''|))`` for a parity-form ``F``.

    Applied stage by stage: the revolution of a composition of parity-form
    maps is the composition of their revolutions.
    """
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if ell == 0:
        return F
    if all(_stage_parity(s) for s in F.stages):
        stages = [_revolve_stage(s, ell) for s in F.stages]
    elif _stage_parity(F.components):
        stages = [_revolve_stage(F.components, ell)]
    else:
        raise ValueError("map is not in parity form (components even in the last variable, last component odd)")
    return PolyMap.chain(stages, trace=f"rev{ell}({F.trace})")


# ---------------------------------------------------------------------------
# homotopy and affine images


def brick_homotopy(r: BrickResult, t, force: bool = False) -> PolyMap:
    """The map ``x -> t p + (1 - t) F(x)`` with ``p`` the homotopy centre."""
    t = as_fraction(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if not r.radially_convex and not force:
        raise ValueError("brick is not flagged strictly radially convex about its centre")
    if t == 0:
        return r.map
    n = r.target_dim
    stage = []
    for i, p in enumerate(r.homotopy_center):
        stage.append(_x(i, n) * _c(1 - t, n) + _c(t * as_fraction(p), n))
    return _append_stage(r.map, stage, f"homotopy({t})")


def affine_brick(r: BrickResult, A, b, name: str | None = None) -> BrickResult:
    """Image of a brick under an invertible affine map ``y -> A y + b``."""
    A = [[as_fraction(v) for v in row] for row in A]
    b = [as_fraction(v) for v in b]
    n = len(b)
    An = np.array([[float(v) for v in row] for row in A])
    if abs(np.linalg.det(An)) < 1e-14:
        raise ValueError("affine map must be invertible")
    F = _append_stage(r.map, _affine_stage(A, b), "affine")
    # membership through the inverse map (rational inverse)
    inv = _inverse(A)
    binv = [-sum(inv[i][j] * b[j] for j in range(n)) for i in range(n)]
    back = _affine_stage(inv, binv)
    pieces = [[g.compose(back) for g in p] for p in r.set.pieces]
    margin = None
    if r.set.margin_fn is not None:
        Ai, bi = np.array([[float(v) for v in row] for row in inv]), np.array([float(v) for v in binv])
        inner = r.set.margin_fn
        margin = lambda X: inner(np.atleast_2d(X) @ Ai.T + bi)
    bounds = None
    if r.set.bounds is not None:
        corners = np.array(np.meshgrid(*[list(bb) for bb in r.set.bounds])).reshape(n, -1).T
        img = corners @ An.T + np.array([float(v) for v in b])
        bounds = _box(img.min(0), img.max(0))
    S = SemialgebraicSet(n, pieces, bounds=bounds, margin_fn=margin, name=name or f"affine({r.set.name})")
    c = [sum(A[i][j] * as_fraction(r.homotopy_center[j]) for j in range(n)) + b[i] for i in range(n)]
    return BrickResult(F, S, tuple(c), name=name or f"affine({r.name})", params=dict(r.params), radially_convex=r.radially_convex)


def _inverse(A: list) -> list:
    n = len(A)
    aug = [list(A[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for c in range(n):
        p = next(i for i in range(c, n) if aug[i][c] != 0)
        aug[c], aug[p] = aug[p], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [row[n:] for row in aug]


# ---------------------------------------------------------------------------
# JSON specifications


def build_brick(spec: dict) -> BrickResult:
    """Build a brick from a tagged JSON spec such as ``{"type": "EllipticSector", "alpha": "pi/2", "n": 2}``.

    An optional ``"affine": {"A": [[...]], "b": [...]}`` entry moves the brick.
    """
    if "type" not in spec:
        raise ValueError("brick spec needs a 'type'")
    t = spec["type"]
    n = int(spec.get("n", 2))
    if t == "SimplexBrick":
        r = simplex_map(spec["vertices"])
    elif t == "Hypercube":
        r = hypercube_map(n)
    elif t == "Cylinder":
        r = cylinder_map(n)
    elif t == "Ball":
        r = ball_map(n)
    elif t == "Prism":
        r = prism_map(spec.get("simplex"), n=spec.get("n"))
    elif t == "BallProduct":
        r = ball_product_map(*[int(d) for d in spec["dims"]])
    elif t == "SphericalStar":
        r = spherical_star_map(*[int(k) for k in spec["weights"]])
    elif t == "TruncatedCone":
        r = truncated_cone_map(spec["a"], spec["b"], n)
    elif t == "ParabolicN":
        r = parabolic_n_map(n)
    elif t == "Parabolic2":
        r = parabolic2_map(spec["a"])
    elif t == "EllipticSector":
        r = elliptic_sector_map(spec["alpha"], n)
    elif t == "EllipticSegment":
        r = elliptic_segment_map(spec["alpha"], n)
    elif t == "HyperbolicSector":
        r = hyperbolic_sector_map(spec["alpha"], n)
    elif t == "HyperbolicSegment":
        r = hyperbolic_segment_map(spec["alpha"], n)
    elif t == "ConvexHullOfImage":
        r = convex_hull_map(PolyMap.from_json(spec["inner"]))
    elif t == "Toeplitz":
        r = toeplitz_brick()
    elif t == "Revolution":
        inner = PolyMap.from_json(spec["inner"])
        F = revolution_map(inner, int(spec["ell"]))
        raise_set = spec.get("set")
        S = SemialgebraicSet.from_json(raise_set) if raise_set else None
        if S is None:
            raise ValueError("Revolution spec needs a 'set' description of the revolved image")
        r = BrickResult(F, S, tuple(as_fraction(c) for c in spec.get("center", [0] * F.n_out)), name="revolution")
    elif t == "ProductOfBricks":
        r = product_of_bricks([build_brick(s) for s in spec["factors"]])
    else:
        raise ValueError(f"unknown brick type {t!r}")
    if "affine" in spec:
        r = affine_brick(r, spec["affine"]["A"], spec["affine"]["b"])
    return r
