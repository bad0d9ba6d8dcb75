"""Polynomial paths through waypoints that stay inside open regions.

The pipeline is: assemble a piecewise path out of anchor arcs, segments and
bridge arcs, smooth its corners with Hermite patches, then replace it by a
single polynomial that is close to it and has the same jets at the waypoints.
Every value that is checked against a waypoint is an exact rational.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.linalg import lstsq, null_space

from .geometry import BridgeSpec, HPolytope, SemialgebraicSet, Simplex, _as_hpoly
from .polycore import MultiPoly, UniPoly, as_fraction, frac_str

__all__ = [
    "Region",
    "RegionPlan",
    "Piece",
    "PiecewisePath",
    "SmartPathResult",
    "SmartPathError",
    "ApproximationError",
    "CornerError",
    "hermite_interpolate",
    "segment_path",
    "anchor_arc",
    "assemble_piecewise",
    "smooth_corners",
    "approx_interp",
    "vanishing_orders",
    "validate_path",
    "smart_path",
]

ORDER_CAP = 20
# oracle margins this small are treated as boundary contact when reading vanishing orders
ORACLE_BOUNDARY = 1e-12


class SmartPathError(RuntimeError):
    """Raised when the retry loop cannot certify a path."""

    def __init__(self, msg, interval=None, margin=None):
        super().__init__(msg)
        self.interval = interval
        self.margin = margin


class ApproximationError(RuntimeError):
    pass


class CornerError(RuntimeError):
    pass


def _vec(x) -> tuple:
    return tuple(as_fraction(c) for c in x)


# ---------------------------------------------------------------------------
# regions


class Region:
    """Open region with a float margin (positive exactly inside).

    ``inequalities`` describe the region as ``{g_1 > 0, ..., g_r > 0}`` when
    such a description is available; they are used for exact checks and for
    vanishing orders.  ``witness`` is an interior point; for a convex or
    star-shaped region every segment from it to a point of the closure other
    than the endpoint stays inside.
    """

    def __init__(self, dim: int, margin_fn: Callable, inequalities=None, convex: bool = False,
                 witness=None, polytope: HPolytope | None = None, name: str = ""):
        self.dim = int(dim)
        self._margin = margin_fn
        self.inequalities = list(inequalities) if inequalities is not None else None
        self.convex = bool(convex)
        self.witness = _vec(witness) if witness is not None else None
        self.polytope = polytope
        self.name = name

    @classmethod
    def from_polytope(cls, K, name: str = "") -> "Region":
        P = _as_hpoly(K)
        ineqs = P.to_set().pieces[0]
        w = K.centroid() if isinstance(K, Simplex) else P.interior_point()
        return cls(P.dim, P.distance_margin, ineqs, convex=True, witness=w, polytope=P, name=name or "polytope")

    @classmethod
    def from_set(cls, S: SemialgebraicSet, convex: bool = False, witness=None, name: str = "") -> "Region":
        ineqs = S.pieces[0] if (S.margin_fn is None and len(S.pieces) == 1) else None
        return cls(S.dim, S.margin, ineqs, convex=convex, witness=witness, name=name or S.name)

    @classmethod
    def from_oracle(cls, margin_fn: Callable, dim: int, convex: bool = False, witness=None, name: str = "") -> "Region":
        return cls(dim, margin_fn, None, convex=convex, witness=witness, name=name)

    def margin(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self._margin(X), dtype=float)

    def exact_margin(self, x) -> Fraction | None:
        """Smallest inequality value at a rational point (None without inequalities)."""
        if self.inequalities is None:
            return None
        x = _vec(x)
        return min(g.eval(x) for g in self.inequalities)

    def ball_radius(self, x) -> float | None:
        """Radius of a ball around ``x`` known to lie in the region (None if unknown)."""
        if self.polytope is not None:
            return float(self.polytope.distance_margin(np.asarray([float(c) for c in x])[None, :])[0])
        return None

    def to_json(self) -> dict:
        if self.inequalities is None:
            raise ValueError("oracle regions cannot be serialised")
        d = {"dim": self.dim, "inequalities": [g.to_json() for g in self.inequalities],
             "convex": self.convex, "name": self.name}
        if self.witness is not None:
            d["witness"] = [frac_str(c) for c in self.witness]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Region":
        ineqs = [MultiPoly.from_json(g) for g in d["inequalities"]]
        S = SemialgebraicSet(d["dim"], [ineqs])
        return cls(d["dim"], S.margin, ineqs, convex=d.get("convex", False), witness=d.get("witness"), name=d.get("name", ""))

    def __repr__(self):
        return f"Region(dim={self.dim}, name={self.name!r}, convex={self.convex})"


@dataclass
class RegionPlan:
    """Regions ``S_1..S_l``, anchors ``p_i`` at ``t_i``, bridges with base points ``q_i`` at ``s_i``.

    ``chains`` maps a region index to via points used to connect points
    inside a region that is not convex.
    """

    regions: list
    anchors: list
    bridges: list
    t: list
    s: list
    chains: dict = field(default_factory=dict)

    def __post_init__(self):
        self.anchors = [_vec(p) for p in self.anchors]
        self.t = [as_fraction(v) for v in self.t]
        self.s = [as_fraction(v) for v in self.s]
        self.chains = {int(k): [_vec(p) for p in v] for k, v in self.chains.items()}

    @property
    def ell(self) -> int:
        return len(self.regions)

    @property
    def dim(self) -> int:
        return len(self.anchors[0])

    @property
    def base_points(self) -> list:
        return [b.q for b in self.bridges]

    def nodes(self) -> list:
        """All waypoint parameters in increasing order with their kind and index."""
        out = []
        for i, ti in enumerate(self.t):
            out.append((ti, "anchor", i))
            if i < len(self.s):
                out.append((self.s[i], "base", i))
        return out

    def waypoints(self) -> list:
        out = []
        for tv, kind, i in self.nodes():
            out.append((tv, self.anchors[i] if kind == "anchor" else self.bridges[i].q))
        return out

    def validate(self) -> None:
        l = self.ell
        if l < 1:
            raise ValueError("a plan needs at least one region")
        if len(self.anchors) != l or len(self.t) != l:
            raise ValueError("one anchor and one parameter t_i per region")
        if len(self.bridges) != l - 1 or len(self.s) != l - 1:
            raise ValueError("one bridge and one parameter s_i per consecutive pair")
        params = [v for v, _, _ in self.nodes()]
        if any(b <= a for a, b in zip(params, params[1:])):
            raise ValueError("grid t_1 < s_1 < t_2 < ... must be strictly increasing")
        if params[0] < 0 or params[-1] > 1:
            raise ValueError("grid must lie in [0, 1]")
        n = self.dim
        for k, R in enumerate(self.regions):
            if R.dim != n:
                raise ValueError(f"region {k} has dimension {R.dim}, anchors have {n}")
            if R.witness is None:
                raise ValueError(f"region {k} needs an interior witness point")
            if not R.convex and k not in self.chains and R.inequalities is None and False:
                pass
        for i, b in enumerate(self.bridges):
            if len(b.q) != n:
                raise ValueError(f"bridge {i} lives in the wrong dimension")

    def to_json(self) -> dict:
        return {
            "regions": [R.to_json() for R in self.regions],
            "anchors": [[frac_str(c) for c in p] for p in self.anchors],
            "bridges": [b.to_json() for b in self.bridges],
            "t": [frac_str(v) for v in self.t],
            "s": [frac_str(v) for v in self.s],
            "chains": {str(k): [[frac_str(c) for c in p] for p in v] for k, v in self.chains.items()},
        }

    @classmethod
    def from_json(cls, d: dict) -> "RegionPlan":
        return cls(
            regions=[Region.from_json(r) for r in d["regions"]],
            anchors=d["anchors"],
            bridges=[BridgeSpec.from_json(b) for b in d["bridges"]],
            t=d["t"],
            s=d["s"],
            chains=d.get("chains", {}),
        )


# ---------------------------------------------------------------------------
# piecewise paths


@dataclass
class Piece:
    """Polynomial piece on ``[lo, hi]`` written in the local variable ``u = t - lo``."""

    polys: tuple
    lo: Fraction
    hi: Fraction
    region: Region | None = None
    kind: str = "segment"

    def value(self, t) -> tuple:
        u = as_fraction(t) - self.lo
        return tuple(p(u) for p in self.polys)

    def jet(self, t, order: int) -> list:
        u = as_fraction(t) - self.lo
        js = [p.taylor_jet(u, order) for p in self.polys]
        return [tuple(j[k] for j in js) for k in range(order + 1)]

    def global_polys(self) -> list:
        shift = UniPoly([-self.lo, 1])
        return [p.compose(shift) for p in self.polys]


class PiecewisePath:
    """Continuous concatenation of polynomial pieces."""

    def __init__(self, pieces: Sequence[Piece]):
        self.pieces = list(pieces)
        if not self.pieces:
            raise ValueError("empty path")
        for a, b in zip(self.pieces, self.pieces[1:]):
            if a.hi != b.lo:
                raise ValueError("pieces must tile the parameter interval")
        self.dim = len(self.pieces[0].polys)

    @property
    def domain(self) -> tuple:
        return self.pieces[0].lo, self.pieces[-1].hi

    @property
    def breakpoints(self) -> list:
        return [p.hi for p in self.pieces[:-1]]

    def locate(self, t) -> int:
        t = as_fraction(t)
        for i, p in enumerate(self.pieces):
            if t <= p.hi:
                return i
        return len(self.pieces) - 1

    def __call__(self, t) -> tuple:
        return self.pieces[self.locate(t)].value(t)

    def jet(self, t, order: int, side: str = "right") -> list:
        i = self.locate(t)
        if side == "right" and as_fraction(t) == self.pieces[i].hi and i + 1 < len(self.pieces):
            i += 1
        return self.pieces[i].jet(t, order)

    def is_continuous(self) -> bool:
        return all(a.value(a.hi) == b.value(b.lo) for a, b in zip(self.pieces, self.pieces[1:]))

    def corners(self, nu: int) -> list:
        """Junction indices where derivatives of order ``<= nu`` disagree."""
        out = []
        for i, (a, b) in enumerate(zip(self.pieces, self.pieces[1:])):
            if a.jet(a.hi, nu) != b.jet(b.lo, nu):
                out.append(i)
        return out

    def eval_float(self, T, k: int = 0) -> np.ndarray:
        """Values (or ``k``-th derivatives) at float parameters, shape ``(N, dim)``."""
        T = np.asarray(T, dtype=float)
        out = np.zeros((T.size, self.dim))
        edges = np.array([float(p.hi) for p in self.pieces[:-1]])
        idx = np.searchsorted(edges, T, side="left")
        for i, p in enumerate(self.pieces):
            sel = idx == i
            if not np.any(sel):
                continue
            u = T[sel] - float(p.lo)
            for j, q in enumerate(p.polys):
                out[sel, j] = (q.derivative(k) if k else q).eval_float(u)
        return out

    def to_json(self) -> dict:
        return {
            "pieces": [
                {"lo": frac_str(p.lo), "hi": frac_str(p.hi), "kind": p.kind, "polys": [q.to_json() for q in p.polys]}
                for p in self.pieces
            ]
        }

    @classmethod
    def from_polys(cls, polys: Sequence[UniPoly], interval) -> "PiecewisePath":
        lo, hi = (as_fraction(v) for v in interval)
        shift = UniPoly([lo, 1])
        return cls([Piece(tuple(p.compose(shift) for p in polys), lo, hi, kind="poly")])


# ---------------------------------------------------------------------------
# elementary paths


def hermite_interpolate(data) -> UniPoly:
    """Exact Hermite interpolant.

    ``data`` is a sequence of ``(t_i, [y_i, y_i', ..., y_i^(k_i)])``.  The result
    has degree ``< sum(k_i + 1)`` and matches every listed derivative.
    """
    z, fac = [], []
    for t, ders in data:
        t = as_fraction(t)
        ders = [as_fraction(d) for d in ders]
        for j in range(len(ders)):
            z.append(t)
            fac.append(ders)
    m = len(z)
    if m == 0:
        return UniPoly()
    # divided difference table, column by column
    col = [fac[i][0] for i in range(m)]
    coef = [col[0]]
    for j in range(1, m):
        new = []
        for i in range(m - j):
            if z[i + j] == z[i]:
                new.append(fac[i][j] / math.factorial(j))
            else:
                new.append((col[i + 1] - col[i]) / (z[i + j] - z[i]))
        col = new
        coef.append(col[0])
    p = UniPoly([coef[-1]])
    for j in range(m - 2, -1, -1):
        p = p * UniPoly([-z[j], 1]) + coef[j]
    return p


def segment_path(p, q, interval=(0, 1)) -> list:
    """Affine path with ``path(lo) = p`` and ``path(hi) = q``."""
    p, q = _vec(p), _vec(q)
    if len(p) != len(q):
        raise ValueError("endpoints have different dimensions")
    lo, hi = (as_fraction(v) for v in interval)
    if hi <= lo:
        raise ValueError("empty interval")
    out = []
    for a, b in zip(p, q):
        slope = (b - a) / (hi - lo)
        out.append(UniPoly([a - slope * lo, slope]))
    return out


def _segment_piece(p, q, lo, hi, region) -> Piece:
    p, q = _vec(p), _vec(q)
    L = hi - lo
    return Piece(tuple(UniPoly([a, (b - a) / L]) for a, b in zip(p, q)), lo, hi, region, "segment")


def anchor_arc(p, witness, scale=Fraction(1, 2)) -> list:
    """Arc ``tau -> p + scale tau^2 (witness - p)`` through ``p`` at ``tau = 0``.

    Both halves head into the region when ``witness`` is an interior point
    that sees ``p`` along a segment.  When ``p`` is the witness itself the
    arc is constant.
    """
    p, w = _vec(p), _vec(witness)
    v = tuple(scale * (b - a) for a, b in zip(p, w))
    return [UniPoly([a, 0, c]) for a, c in zip(p, v)]


def _scaled_piece(polys, center, lo, hi, half, region, kind) -> Piece:
    """Piece ``t -> polys((t - center) * half / width)`` on ``[lo, hi]`` in local variable."""
    width = max(center - lo, hi - center)
    lam = half / width
    inner = UniPoly([(lo - center) * lam, lam])
    return Piece(tuple(q.compose(inner) for q in polys), lo, hi, region, kind)


def assemble_piecewise(plan: RegionPlan, arc_fraction=Fraction(1, 4)) -> PiecewisePath:
    """Continuous piecewise path through every waypoint of ``plan``.

    Anchor arcs sit around each ``t_i``, bridge arcs around each ``s_i`` and
    straight segments (or via chains for non-convex regions) fill the gaps.
    """
    plan.validate()
    nodes = plan.nodes()
    params = [v for v, _, _ in nodes]
    arc_fraction = as_fraction(arc_fraction)
    if len(params) == 1:
        # single region: the constant path at p_1
        R = plan.regions[0]
        polys = tuple(UniPoly([c]) for c in plan.anchors[0])
        return PiecewisePath([Piece(polys, Fraction(0), Fraction(1), R, "anchor")])
    gaps = [b - a for a, b in zip(params, params[1:])]
    halfw = []
    for j in range(len(params)):
        nb = [gaps[j - 1]] if j > 0 else []
        nb += [gaps[j]] if j < len(gaps) else []
        halfw.append(min(nb) * arc_fraction)
    arcs = []  # (lo, hi, piece)
    for j, (tv, kind, i) in enumerate(nodes):
        h = halfw[j]
        lo, hi = tv - h, tv + h
        if j == 0:
            lo = min(lo, Fraction(0))
        if j == len(nodes) - 1:
            hi = max(hi, Fraction(1))
        if kind == "anchor":
            R = plan.regions[i]
            arc = anchor_arc(plan.anchors[i], R.witness)
            piece = _scaled_piece(arc, tv, lo, hi, Fraction(1), R, "anchor")
        else:
            polys, half = plan.bridges[i].path_arc()
            piece = _scaled_piece(polys, tv, lo, hi, half, None, "bridge")
        arcs.append(piece)
    pieces = [arcs[0]]
    for j in range(1, len(arcs)):
        prev, nxt = arcs[j - 1], arcs[j]
        # the gap belongs to the region entered after node j-1
        kind_prev, i_prev = nodes[j - 1][1], nodes[j - 1][2]
        k = i_prev if kind_prev == "anchor" else i_prev + 1
        R = plan.regions[k]
        A = prev.value(prev.hi)
        B = nxt.value(nxt.lo)
        via = [] if R.convex else plan.chains.get(k, [R.witness])
        pts = [A] + list(via) + [B]
        lo, hi = prev.hi, nxt.lo
        step = (hi - lo) / (len(pts) - 1)
        for m in range(len(pts) - 1):
            pieces.append(_segment_piece(pts[m], pts[m + 1], lo + m * step, lo + (m + 1) * step, R))
        pieces.append(nxt)
    # bridge pieces straddle two regions; give them the region on each side for smoothing lookups
    return PiecewisePath(pieces)


# ---------------------------------------------------------------------------
# corner smoothing


def _patch_ok(patch: Piece, center: tuple, radius: float | None, region: Region | None, n: int = 200) -> bool:
    T = np.linspace(float(patch.lo), float(patch.hi), n)
    P = PiecewisePath([patch]).eval_float(T)
    if radius is not None:
        c = np.array([float(v) for v in center])
        return bool(np.all(np.linalg.norm(P - c, axis=1) <= radius / 2))
    if region is not None:
        return bool(np.all(region.margin(P) > 0))
    return True


def smooth_corners(path: PiecewisePath, nu: int, delta=None, max_halvings: int = 40) -> PiecewisePath:
    """Replace each corner by a two-point Hermite patch matching derivatives ``0..nu``.

    The patch around a corner at ``lam`` spans ``[lam - rho, lam + rho]``.
    ``rho`` starts at ``delta`` (default: 45% of the shorter neighbouring
    piece) and is halved until the patch stays in the ball of radius
    ``eps/2`` about the corner value, ``eps`` being the distance from the
    corner value to the boundary of the region.  Regions without a distance
    estimate are checked by sampled membership instead.
    """
    nu = int(nu)
    corners = path.corners(nu)
    if not corners:
        return path
    pieces = list(path.pieces)
    cuts = {}
    for c in corners:
        a, b = pieces[c], pieces[c + 1]
        lam = a.hi
        x0 = a.value(lam)
        region = a.region if a.region is not None else b.region
        if region is None:
            raise CornerError(f"corner at t={lam} has no enclosing region")
        radius = region.ball_radius(x0)
        if radius is not None and radius <= 0:
            raise CornerError(f"corner at t={lam} is not interior (margin {radius:.3g})")
        rho = Fraction(9, 20) * min(a.hi - a.lo, b.hi - b.lo)
        if delta is not None:
            rho = min(rho, as_fraction(delta))
        for _ in range(max_halvings):
            tau, theta = lam - rho, lam + rho
            ja, jb = a.jet(tau, nu), b.jet(theta, nu)
            L = theta - tau
            polys = []
            for d in range(path.dim):
                polys.append(hermite_interpolate([(0, [ja[k][d] for k in range(nu + 1)]), (L, [jb[k][d] for k in range(nu + 1)])]))
            patch = Piece(tuple(polys), tau, theta, region, "patch")
            if _patch_ok(patch, x0, radius, region):
                cuts[c] = patch
                break
            rho /= 2
        else:
            raise CornerError(f"no Hermite patch around t={lam} stays inside the margin ball")
    out = []
    for i, p in enumerate(pieces):
        lo, hi = p.lo, p.hi
        if i - 1 in cuts:
            lo = cuts[i - 1].hi
        if i in cuts:
            hi = cuts[i].lo
        shift = UniPoly([lo - p.lo, 1])
        out.append(Piece(tuple(q.compose(shift) for q in p.polys), lo, hi, p.region, p.kind))
        if i in cuts:
            out.append(cuts[i])
    return PiecewisePath(out)


# ---------------------------------------------------------------------------
# approximation with exact interpolation


def _cheb_eval_exact(c: Sequence[Fraction], u: Fraction) -> Fraction:
    b1 = b2 = Fraction(0)
    for ck in reversed(c[1:]):
        b1, b2 = 2 * u * b1 - b2 + ck, b1
    return u * b1 - b2 + (c[0] if c else 0)


def _cheb_der_exact(c: list, scale: Fraction) -> list:
    n = len(c)
    if n <= 1:
        return [Fraction(0)]
    d = [Fraction(0)] * (n + 1)
    for j in range(n - 1, 0, -1):
        d[j - 1] = d[j + 1] + 2 * j * c[j]
    d[0] /= 2
    return [v * scale for v in d[: n - 1]]


def _product_basis(nodes: list, i: int, k: int, nu: int) -> UniPoly:
    """Product basis ``(t-t_i)^k prod_{j!=i} ((t-t_i)^(nu+1) - (t_j-t_i)^(nu+1))^(nu+1)``,
    rescaled so its ``k``-th derivative at ``t_i`` is exactly 1."""
    ti = nodes[i]
    x = UniPoly([-ti, 1])
    P = x ** k
    for j, tj in enumerate(nodes):
        if j != i:
            P = P * (x ** (nu + 1) - (tj - ti) ** (nu + 1)) ** (nu + 1)
    c = P.derivative(k)(ti)
    return P * UniPoly([1 / c])


def _correction(nodes: list, b: list, orders: list, basis: str) -> UniPoly:
    if basis == "hermite":
        return hermite_interpolate([(t, bi) for t, bi in zip(nodes, b)])
    if basis == "product":
        nu = max(orders)
        g = UniPoly()
        for i, t in enumerate(nodes):
            for k in range(orders[i] + 1):
                if b[i][k] != 0:
                    g = g + _product_basis(nodes, i, k, nu) * UniPoly([b[i][k]])
        # lower per-node orders are padded with exact zeros of the same basis
        return g
    raise ValueError(f"unknown correction basis {basis!r}")


def _fit_grid(a: float, b: float, D: int, n_grid: int) -> np.ndarray:
    k = np.arange(max(n_grid, 4 * D))
    cheb = np.cos(np.pi * (k + 0.5) / len(k))
    uni = np.linspace(-1, 1, n_grid)
    u = np.unique(np.concatenate([cheb, uni]))
    return a + (b - a) * (u + 1) / 2


def _constraint_rows(D: int, u_nodes: list, orders: list, scale: float) -> np.ndarray:
    rows = []
    eye = np.eye(D + 1)
    for u, k_max in zip(u_nodes, orders):
        for k in range(k_max + 1):
            rows.append([npcheb.chebval(u, npcheb.chebder(eye[j], k)) * scale ** k for j in range(D + 1)])
    return np.array(rows)


def approx_interp(f, nodes, eps, degree_cap: int = 200, min_degree: int | None = None, basis: str = "hermite",
                  n_grid: int = 1000, check_derivatives: bool = False, interval=None, info: dict | None = None) -> list:
    """Polynomial ``g`` with ``|g - f| < eps`` on ``[a, b]`` and exact jets at the nodes.

    ``f`` is a :class:`PiecewisePath` (or a sequence of :class:`UniPoly` with
    ``interval``); ``nodes`` is a sequence of ``(t_i, nu_i)`` with ``a < t_i < b``.

    Step 1 is a Chebyshev least-squares fit on a dense grid with the node
    jets imposed as linear constraints; the degree doubles from a small start
    until the sup error (and the derivative errors up to ``max nu_i`` when
    ``check_derivatives``) on the grid is below ``eps``.  Step 2 converts the
    fit to exact rationals and adds ``sum b_ik P_ik`` where ``b_ik`` are the
    exact jet residuals, so ``g^(k)(t_i) = f^(k)(t_i)`` holds exactly.
    ``basis`` picks ``P_ik``: ``"hermite"`` (one Hermite interpolant of the
    residuals, lowest degree) or ``"product"`` (product basis).
    """
    if not isinstance(f, PiecewisePath):
        if interval is None:
            raise ValueError("give an interval for a polynomial f")
        f = PiecewisePath.from_polys(list(f), interval)
    a, b = f.domain
    fa, fb = float(a), float(b)
    nodes = [(as_fraction(t), int(k)) for t, k in nodes]
    for t, k in nodes:
        if not a < t < b:
            raise ValueError(f"node {t} is not interior to [{a}, {b}]")
        if k < 0:
            raise ValueError("orders must be nonnegative")
    if len({t for t, _ in nodes}) != len(nodes):
        raise ValueError("nodes must be distinct")
    nodes.sort()
    ts = [t for t, _ in nodes]
    orders = [k for _, k in nodes]
    n = f.dim
    jets = [f.jet(t, k) for t, k in nodes]  # jets[i][k][d]
    r_cons = sum(k + 1 for k in orders)
    nu_check = max(orders, default=0) if check_derivatives else 0
    scale = Fraction(2) / (b - a)
    u_nodes = [(2 * t - a - b) / (b - a) for t in ts]

    report = np.linspace(fa, fb, n_grid)
    f_rep = [f.eval_float(report, k) for k in range(nu_check + 1)]

    # a single polynomial piece of low degree is its own best fit
    single = f.pieces[0].global_polys() if len(f.pieces) == 1 else None

    D = max(min_degree or 0, r_cons + 2, 8)
    D = min(D, degree_cap) if degree_cap >= r_cons else D
    last_err = None
    while True:
        if single is not None and max(p.degree for p in single) <= D:
            g = [p.with_chebyshev((a, b)) if p.degree > 0 else p for p in single]
            errs = [0.0] * (nu_check + 1)
            if info is not None:
                info.update(degree=max(p.degree for p in g), sup_error=0.0, derivative_errors=errs, basis=basis)
            return g
        grid = _fit_grid(fa, fb, D, 2 * n_grid)
        U = (2 * grid - fa - fb) / (fb - fa)
        V = npcheb.chebvander(U, D)
        F = f.eval_float(grid)
        C = _constraint_rows(D, [float(u) for u in u_nodes], orders, float(scale)) if r_cons else np.zeros((0, D + 1))
        Z = null_space(C) if r_cons else np.eye(D + 1)
        g_float, g_exact_parts = [], []
        for d in range(n):
            rhs = np.array([float(jets[i][k][d]) for i in range(len(ts)) for k in range(orders[i] + 1)])
            cp = lstsq(C, rhs)[0] if r_cons else np.zeros(D + 1)
            z = lstsq(V @ Z, F[:, d] - V @ cp)[0]
            c = cp + Z @ z
            hc = [Fraction(float(v)) for v in c]
            # exact jet residuals of the rational fit
            bres = []
            for i, (u, kmax) in enumerate(zip(u_nodes, orders)):
                cd = list(hc)
                row = []
                for k in range(kmax + 1):
                    row.append(jets[i][k][d] - _cheb_eval_exact(cd, u))
                    cd = _cheb_der_exact(cd, scale)
                bres.append(row)
            corr = _correction(ts, bres, orders, basis) if r_cons else UniPoly()
            cc = list(corr.to_chebyshev((a, b))) if not corr.is_zero() else []
            L = max(len(hc), len(cc))
            tot = [(hc[j] if j < len(hc) else 0) + (cc[j] if j < len(cc) else 0) for j in range(L)]
            g_exact_parts.append(tot)
            g_float.append(np.array([float(v) for v in tot]))
        Ur = (2 * report - fa - fb) / (fb - fa)
        errs = []
        for k in range(nu_check + 1):
            worst = 0.0
            for d in range(n):
                ck = npcheb.chebder(g_float[d], k) * float(scale) ** k if k else g_float[d]
                worst = max(worst, float(np.max(np.abs(npcheb.chebval(Ur, ck) - f_rep[k][:, d]))))
            errs.append(worst)
        last_err = errs
        if all(e < eps for e in errs):
            g = [UniPoly.from_chebyshev(tot, (a, b)) for tot in g_exact_parts]
            if info is not None:
                info.update(degree=max(p.degree for p in g), sup_error=errs[0], derivative_errors=errs, basis=basis)
            return g
        if D >= degree_cap:
            raise ApproximationError(f"degree cap {degree_cap} reached; grid errors {last_err} vs eps {eps}")
        D = min(2 * D, degree_cap)


# ---------------------------------------------------------------------------
# vanishing orders


def _order_exact(g: MultiPoly, piece: Piece, t: Fraction, cap: int) -> int | None:
    comp = g.compose([MultiPoly.from_unipoly(q, 0, 1) for q in piece.polys]).as_unipoly(0)
    jet = comp.taylor_jet(t - piece.lo, cap)
    for k, v in enumerate(jet):
        if v != 0:
            return k
    return None


def _order_numeric(region: Region, piece: Piece, t: Fraction, side: int, cap: int) -> int | None:
    width = float(piece.hi - piece.lo)
    hs = width * 0.25 * 2.0 ** -np.arange(4, 12)
    T = float(t) + side * hs
    P = PiecewisePath([piece]).eval_float(T)
    m = region.margin(P)
    if np.any(m <= 0):
        return None
    slope = np.polyfit(np.log(hs), np.log(m), 1)[0]
    return int(min(cap, max(0, round(slope))))


def vanishing_orders(path: PiecewisePath, plan: RegionPlan, cap: int = ORDER_CAP) -> dict:
    """First nonvanishing derivative order of the active constraints at each waypoint.

    Polynomial regions use exact Taylor coefficients of ``g o path``; oracle
    regions use the slope of ``log margin`` against ``log |t - t_i|``.
    """
    out = {}
    for tv, kind, i in plan.nodes():
        piece = path.pieces[path.locate(tv)]
        if kind == "anchor":
            sides = [(plan.regions[i], -1), (plan.regions[i], 1)]
        else:
            sides = [(plan.regions[i], -1), (plan.regions[i + 1], 1)]
        x = piece.value(tv)
        orders = []
        for R, side in sides:
            if R.inequalities is not None:
                for g in R.inequalities:
                    if g.eval(x) == 0:
                        o = _order_exact(g, piece, tv, cap)
                        orders.append(cap if o is None else o)
            else:
                if float(R.margin(np.array([[float(c) for c in x]]))[0]) <= ORACLE_BOUNDARY:
                    o = _order_numeric(R, piece, tv, side, cap)
                    orders.append(2 if o is None else o)
        out[(kind, i)] = max(orders, default=0)
    return out


# ---------------------------------------------------------------------------
# validation and the driver


def _interval_samples(lo: float, hi: float, n: int) -> np.ndarray:
    L = hi - lo
    k = n // 4
    g = np.geomspace(1e-6, 0.5, k)
    u = np.concatenate([g, 1 - g, np.linspace(0, 1, n - 2 * k + 2)[1:-1]])
    return lo + L * np.unique(u)


def _eval_polys(polys, T) -> np.ndarray:
    return np.column_stack([p.eval_float(T) for p in polys])


def validate_path(polys: Sequence[UniPoly], plan: RegionPlan, samples: int = 1000, exact_below: float = 1e-10) -> dict:
    """Sampled membership on every open interval plus exact waypoint hits.

    Samples whose float margin is within ``exact_below`` of zero are
    re-evaluated in rational arithmetic when the region has inequalities.
    """
    intervals = []
    nodes = plan.nodes()
    params = [v for v, _, _ in nodes]
    spans = []
    if params[0] > 0:
        spans.append((Fraction(0), params[0], 0))
    for j in range(len(nodes) - 1):
        kind, i = nodes[j][1], nodes[j][2]
        spans.append((params[j], params[j + 1], i if kind == "anchor" else i + 1))
    if params[-1] < 1:
        spans.append((params[-1], Fraction(1), plan.ell - 1))
    ok_all = True
    for lo, hi, k in spans:
        R = plan.regions[k]
        T = _interval_samples(float(lo), float(hi), samples)
        m = R.margin(_eval_polys(polys, T))
        worst = float(m.min())
        ok = worst > 0
        n_exact = 0
        if (not ok or worst < exact_below) and R.inequalities is not None:
            bad = np.flatnonzero(m < exact_below)
            checked = bad[:200]
            rest = np.delete(m, checked)
            ok = bool(np.all(rest > 0))
            worst = float(rest.min()) if rest.size else math.inf
            for idx in checked:
                t = Fraction(float(T[idx]))
                em = R.exact_margin(tuple(p(t) for p in polys))
                n_exact += 1
                worst = min(worst, float(em))
                if em <= 0:
                    ok = False
                    break
        intervals.append({"lo": frac_str(lo), "hi": frac_str(hi), "region": k, "min_margin": worst,
                          "samples": len(T), "exact_checks": n_exact, "ok": bool(ok)})
        ok_all &= bool(ok)
    wps = []
    for tv, target in plan.waypoints():
        got = tuple(p(tv) for p in polys)
        wps.append({"param": frac_str(tv), "expected": [frac_str(c) for c in target],
                    "got": [frac_str(c) for c in got], "exact": got == tuple(target)})
    return {"intervals": intervals, "waypoints": wps, "ok": ok_all and all(w["exact"] for w in wps)}


@dataclass
class SmartPathResult:
    path: list
    nu: int
    degree: int
    certificate: dict
    eps: float | None = None
    attempts: int = 0
    runtime_s: float = 0.0

    def __call__(self, t):
        return tuple(p(t) for p in self.path)

    def eval_float(self, T) -> np.ndarray:
        return _eval_polys(self.path, np.asarray(T, dtype=float))

    def to_json(self) -> dict:
        return {"path": [p.to_json() for p in self.path], "nu": self.nu, "degree": self.degree,
                "eps": self.eps, "attempts": self.attempts, "certificate": self.certificate,
                "runtime_s": self.runtime_s}


def _lagrange_candidate(plan: RegionPlan) -> list:
    pts = plan.waypoints()
    return [hermite_interpolate([(t, [p[d]]) for t, p in pts]) for d in range(plan.dim)]


def _path_scale(path: PiecewisePath) -> float:
    a, b = path.domain
    P = path.eval_float(np.linspace(float(a), float(b), 400))
    return float(np.max(P.max(0) - P.min(0))) or 1.0


def smart_path(plan: RegionPlan, eps: float | None = None, retry_cap: int = 8, degree_cap: int = 200,
               samples: int = 1000, nu: int | None = None, basis: str = "hermite",
               shortcut: bool = True) -> SmartPathResult:
    """Single polynomial path with exact waypoints that stays in the planned regions.

    The cheapest candidate (the interpolant of the waypoint values alone) is
    tried first unless ``shortcut`` is off.  Otherwise the piecewise path is assembled, its corners
    smoothed to ``C^nu`` with ``nu = 1 + max vanishing order``, and
    approximated with jets of order ``nu`` imposed at every waypoint;
    ``eps`` is halved after each failed validation.
    """
    t0 = time.perf_counter()
    plan.validate()
    if plan.ell == 1:
        polys = [UniPoly([c]) for c in plan.anchors[0]]
        cert = validate_path(polys, plan, samples)
        return SmartPathResult(polys, 0, 0, cert, None, 0, time.perf_counter() - t0)
    if shortcut:
        cand = _lagrange_candidate(plan)
        cert = validate_path(cand, plan, samples)
    if shortcut and cert["ok"]:
        return SmartPathResult(cand, 0, max(p.degree for p in cand), cert, None, 0, time.perf_counter() - t0)
    beta = assemble_piecewise(plan)
    orders = vanishing_orders(beta, plan)
    if nu is None:
        nu = 1 + max(orders.values(), default=0)
    gamma = smooth_corners(beta, nu)
    node_list = [(v, nu) for v, _, _ in plan.nodes()]
    if eps is None:
        eps = 0.05 * _path_scale(beta)
    deg = None
    failure = None
    for attempt in range(1, retry_cap + 1):
        info = {}
        try:
            g = approx_interp(gamma, node_list, eps, degree_cap=degree_cap, min_degree=deg, basis=basis, info=info)
        except ApproximationError as exc:
            raise SmartPathError(f"approximation failed at eps={eps:.3g}: {exc}", margin=None) from exc
        deg = info["degree"]
        cert = validate_path(g, plan, samples)
        if cert["ok"]:
            cert["vanishing_orders"] = {f"{k[0]}{k[1]}": v for k, v in orders.items()}
            cert["sup_error"] = info["sup_error"]
            return SmartPathResult(g, nu, deg, cert, eps, attempt, time.perf_counter() - t0)
        failure = next(iv for iv in cert["intervals"] if not iv["ok"]) if not all(iv["ok"] for iv in cert["intervals"]) else None
        eps /= 2
    iv = failure or {}
    raise SmartPathError(
        f"retry cap {retry_cap} exhausted; failing interval ({iv.get('lo')}, {iv.get('hi')}) in region "
        f"{iv.get('region')} with margin {iv.get('min_margin')}",
        interval=(iv.get("lo"), iv.get("hi")),
        margin=iv.get("min_margin"),
    )
