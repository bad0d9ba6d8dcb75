"""Target sets: polytopes, PL unions, semialgebraic sets, bridges between polytopes.

Polytope data is exact (rational); the small linear programs used to find
bridge directions are solved in floating point with ``scipy.optimize.linprog``
and their solutions are rounded to rationals and re-checked exactly.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .polycore import MultiPoly, UniPoly, as_fraction, frac_str

__all__ = [
    "Membership",
    "HPolytope",
    "Simplex",
    "PLUnion",
    "SemialgebraicSet",
    "BridgeSpec",
    "BridgeGraph",
    "vertices_of",
    "triangulate",
    "bridge_between",
    "bridge_graph",
    "walk_order",
    "is_analytic_path_connected",
    "membership",
    "NotConnectedError",
]


class NotConnectedError(ValueError):
    """Raised when a bridge graph has several components."""


class Membership(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


# ---------------------------------------------------------------------------
# exact linear algebra on small matrices


def _vec(x) -> tuple:
    return tuple(as_fraction(v) for v in x)


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _rref(rows: list) -> tuple[list, list]:
    """Reduced row echelon form; returns (rows, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    ncol = len(m[0])
    piv = []
    r = 0
    for c in range(ncol):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], piv


def _solve_square(A: list, b: list):
    """Unique solution of a square system, or None if singular."""
    n = len(A)
    aug = [list(A[i]) + [b[i]] for i in range(n)]
    red, piv = _rref(aug)
    if len(piv) < n or piv[-1] >= n:
        return None
    return tuple(red[i][n] for i in range(n))


def _nullspace(rows: list, ncol: int) -> list:
    """Exact basis of {v : rows . v = 0}."""
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncol)) for i in range(ncol)]
    red, piv = _rref(rows)
    free = [c for c in range(ncol) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncol
        v[f] = Fraction(1)
        for i, pc in enumerate(piv):
            v[pc] = -red[i][f]
        basis.append(tuple(v))
    return basis


def _affine_rank(points: Sequence) -> int:
    if len(points) <= 1:
        return 0
    p0 = points[0]
    rows = [[a - b for a, b in zip(p, p0)] for p in points[1:]]
    red, piv = _rref(rows)
    return len(piv)


def _centroid(points: Sequence) -> tuple:
    k = len(points)
    return tuple(sum(c) / k for c in zip(*points))


# ---------------------------------------------------------------------------
# polytopes


class HPolytope:
    """Bounded polytope ``{x : A x <= b}`` with exact rational data."""

    def __init__(self, A, b):
        self.A = tuple(_vec(r) for r in A)
        self.b = _vec(b)
        if len(self.A) != len(self.b):
            raise ValueError("A and b have different numbers of rows")
        if not self.A:
            raise ValueError("a polytope needs at least one inequality")
        self.dim = len(self.A[0])
        if any(len(r) != self.dim for r in self.A):
            raise ValueError("ragged constraint matrix")
        self._vertices = None

    @classmethod
    def from_vertices(cls, vertices) -> "HPolytope":
        """Facet description of the convex hull of full-dimensional points (brute force)."""
        V = sorted({_vec(v) for v in vertices})
        n = len(V[0])
        if _affine_rank(V) < n:
            raise ValueError("vertices do not span a full-dimensional polytope")
        A, b = [], []
        seen = set()
        for combo in itertools.combinations(V, n):
            p0 = combo[0]
            rows = [[x - y for x, y in zip(p, p0)] for p in combo[1:]]
            ns = _nullspace(rows, n)
            if len(ns) != 1:
                continue
            a = ns[0]
            c = _dot(a, p0)
            s = [_dot(a, v) - c for v in V]
            if all(x <= 0 for x in s):
                pass
            elif all(x >= 0 for x in s):
                a = tuple(-x for x in a)
                c = -c
            else:
                continue
            # normalise so the constraint is stored once
            lead = next(x for x in a if x != 0)
            scale = abs(lead)
            key = (tuple(x / scale for x in a), c / scale)
            if key in seen:
                continue
            seen.add(key)
            A.append(key[0])
            b.append(key[1])
        P = cls(A, b)
        return P

    @property
    def vertices(self) -> list:
        if self._vertices is None:
            self._vertices = vertices_of(self)
        return self._vertices

    def margins(self, X) -> np.ndarray:
        """Signed slacks ``b - A x`` (shape ``(N, r)``)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        A = np.array([[float(v) for v in r] for r in self.A])
        b = np.array([float(v) for v in self.b])
        return b[None, :] - X @ A.T

    def distance_margin(self, X) -> np.ndarray:
        """Smallest slack normalised by the row norm; positive iff strictly inside."""
        A = np.array([[float(v) for v in r] for r in self.A])
        norms = np.linalg.norm(A, axis=1)
        return (self.margins(X) / norms[None, :]).min(axis=1)

    def exact_slacks(self, x) -> tuple:
        x = _vec(x)
        return tuple(bi - _dot(a, x) for a, bi in zip(self.A, self.b))

    def contains_exact(self, x) -> bool:
        return all(s >= 0 for s in self.exact_slacks(x))

    def interior_point(self) -> tuple:
        return _centroid(self.vertices)

    def is_full_dimensional(self) -> bool:
        return _affine_rank(self.vertices) == self.dim

    def bounds(self) -> list:
        V = np.array([[float(c) for c in v] for v in self.vertices])
        return [(float(lo), float(hi)) for lo, hi in zip(V.min(0), V.max(0))]

    def to_set(self) -> "SemialgebraicSet":
        ineqs = []
        for a, bi in zip(self.A, self.b):
            terms = {(0,) * self.dim: bi}
            for j, aj in enumerate(a):
                if aj != 0:
                    e = [0] * self.dim
                    e[j] = 1
                    terms[tuple(e)] = -aj
            ineqs.append(MultiPoly(self.dim, terms))
        return SemialgebraicSet(self.dim, [ineqs], bounds=self.bounds(), name="polytope")

    def to_json(self) -> dict:
        return {"A": [[frac_str(v) for v in r] for r in self.A], "b": [frac_str(v) for v in self.b]}

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, rows={len(self.A)})"


class Simplex:
    """Simplex given by ``n+1`` affinely independent vertices (stored in lexicographic order)."""

    def __init__(self, vertices):
        V = [_vec(v) for v in vertices]
        n = len(V[0])
        if len(V) != n + 1 or any(len(v) != n for v in V):
            raise ValueError(f"a simplex in R^{n} needs {n + 1} vertices")
        if _affine_rank(V) != n:
            raise ValueError("simplex vertices are affinely dependent")
        self.vertices = tuple(sorted(V))
        self.dim = n
        self._hp = None

    def to_hpolytope(self) -> HPolytope:
        if self._hp is None:
            self._hp = HPolytope.from_vertices(self.vertices)
            self._hp._vertices = list(self.vertices)
        return self._hp

    @property
    def A(self):
        return self.to_hpolytope().A

    @property
    def b(self):
        return self.to_hpolytope().b

    def centroid(self) -> tuple:
        return _centroid(self.vertices)

    def margins(self, X):
        return self.to_hpolytope().margins(X)

    def distance_margin(self, X):
        return self.to_hpolytope().distance_margin(X)

    def to_set(self) -> "SemialgebraicSet":
        return self.to_hpolytope().to_set()

    def __eq__(self, other):
        return isinstance(other, Simplex) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        vs = ", ".join("(" + ", ".join(str(c) for c in v) + ")" for v in self.vertices)
        return f"Simplex({vs})"


def _as_hpoly(K) -> HPolytope:
    if isinstance(K, HPolytope):
        return K
    if isinstance(K, Simplex):
        return K.to_hpolytope()
    raise TypeError(f"expected a polytope, got {type(K).__name__}")


def vertices_of(K) -> list:
    """Exact vertex list of a bounded polytope by brute force over constraint subsets."""
    K = _as_hpoly(K)
    n = K.dim
    if n > 4:
        raise ValueError("vertex enumeration is limited to dimension <= 4")
    rows = list(zip(K.A, K.b))
    found = set()
    for combo in itertools.combinations(range(len(rows)), n):
        A = [list(rows[i][0]) for i in combo]
        b = [rows[i][1] for i in combo]
        x = _solve_square(A, b)
        if x is None:
            continue
        if all(_dot(a, x) <= bi for a, bi in rows):
            found.add(x)
    if not found:
        raise ValueError("polytope is empty")
    # boundedness: a bounded polytope is the hull of its vertices, so the
    # recession cone must be trivial
    A = np.array([[float(v) for v in r] for r in K.A])
    for j in range(n):
        for sgn in (1.0, -1.0):
            c = np.zeros(n)
            c[j] = -sgn
            res = linprog(c, A_ub=A, b_ub=np.zeros(len(rows)), bounds=[(-1, 1)] * n, method="highs")
            if res.status == 0 and -res.fun > 1e-9:
                raise ValueError("polytope is unbounded")
    return sorted(found)


def _vertices_or_empty(K: HPolytope) -> list:
    try:
        return vertices_of(K)
    except ValueError:
        return []


class PLUnion:
    """Finite union of full-dimensional polytopes in a common space."""

    def __init__(self, polyhedra: Sequence, dim: int | None = None):
        polys = [p.to_hpolytope() if isinstance(p, Simplex) else p for p in polyhedra]
        if not polys:
            raise ValueError("empty union")
        d = polys[0].dim if dim is None else dim
        if any(p.dim != d for p in polys):
            raise ValueError("members live in different dimensions")
        for p in polys:
            if not p.is_full_dimensional():
                raise ValueError("every member must be full-dimensional")
        self.polyhedra = tuple(polys)
        self.dim = d

    @classmethod
    def from_json(cls, d) -> "PLUnion":
        if isinstance(d, str):
            d = json.loads(d)
        polys = []
        for i, item in enumerate(d["polyhedra"]):
            if "vertices" in item:
                polys.append(HPolytope.from_vertices(item["vertices"]))
            elif "A" in item and "b" in item:
                polys.append(HPolytope(item["A"], item["b"]))
            else:
                raise ValueError(f"polyhedra[{i}] needs either 'vertices' or 'A' and 'b'")
        return cls(polys, dim=d.get("dim"))

    def to_json(self) -> dict:
        return {"dim": self.dim, "polyhedra": [p.to_json() for p in self.polyhedra]}

    def bounds(self) -> list:
        bs = [p.bounds() for p in self.polyhedra]
        return [(min(b[i][0] for b in bs), max(b[i][1] for b in bs)) for i in range(self.dim)]

    def margin(self, X) -> np.ndarray:
        return np.max([p.distance_margin(X) for p in self.polyhedra], axis=0)

    def to_set(self) -> "SemialgebraicSet":
        pieces = [p.to_set().pieces[0] for p in self.polyhedra]
        return SemialgebraicSet(self.dim, pieces, bounds=self.bounds(), name="pl-union")


# ---------------------------------------------------------------------------
# semialgebraic sets


class SemialgebraicSet:
    """Union of basic sets ``{g_1 >= 0, ..., g_r >= 0}``.

    ``margin_fn`` replaces the polynomial margin for sets whose natural
    description is not polynomial (it must be positive exactly on the
    interior).  ``bounds`` is a bounding box used for uniform sampling.
    """

    def __init__(self, dim: int, pieces, bounds=None, margin_fn: Callable | None = None, name: str = ""):
        self.dim = int(dim)
        self.pieces = [list(p) for p in pieces]
        for p in self.pieces:
            for g in p:
                if g.nvars != self.dim:
                    raise ValueError("inequality lives in the wrong number of variables")
        self.bounds = [tuple(map(float, b)) for b in bounds] if bounds is not None else None
        self.margin_fn = margin_fn
        self.name = name

    def margin(self, X) -> np.ndarray:
        """max over pieces of min over inequalities of ``g(x)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.margin_fn is not None:
            return np.asarray(self.margin_fn(X), dtype=float)
        best = np.full(X.shape[0], -np.inf)
        for piece in self.pieces:
            if piece:
                m = np.min(np.column_stack([g.eval_float(X) for g in piece]), axis=1)
            else:
                m = np.full(X.shape[0], np.inf)
            best = np.maximum(best, m)
        return best

    def contains(self, X, tol: float = 1e-9) -> np.ndarray:
        return self.margin(X) >= -tol

    def membership(self, x, tol: float = 1e-9) -> Membership:
        m = float(self.margin(np.asarray(x, dtype=float)[None, :])[0])
        if m > tol:
            return Membership.INSIDE
        if m >= -tol:
            return Membership.BOUNDARY
        return Membership.OUTSIDE

    def contains_exact(self, x) -> bool:
        if self.margin_fn is not None:
            raise ValueError("set has no polynomial description")
        return any(all(g.eval(x) >= 0 for g in piece) for piece in self.pieces)

    def sample(self, n: int, rng: np.random.Generator, max_batches: int = 10_000) -> np.ndarray:
        """Uniform samples by rejection from the bounding box."""
        if self.bounds is None:
            raise ValueError("set has no bounding box")
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        out = []
        got = 0
        batch = max(1024, 4 * n)
        for _ in range(max_batches):
            X = lo + (hi - lo) * rng.random((batch, self.dim))
            keep = X[self.margin(X) >= 0]
            out.append(keep)
            got += len(keep)
            if got >= n:
                break
        if got < n:
            raise RuntimeError("rejection sampling failed; is the set empty?")
        return np.concatenate(out)[:n]

    def to_json(self) -> dict:
        if self.margin_fn is not None:
            raise ValueError("sets with a numeric margin function cannot be serialised")
        d = {"dim": self.dim, "pieces": [[g.to_json() for g in p] for p in self.pieces], "name": self.name}
        if self.bounds is not None:
            d["bounds"] = [list(b) for b in self.bounds]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SemialgebraicSet":
        pieces = [[MultiPoly.from_json(g) for g in p] for p in d["pieces"]]
        return cls(d["dim"], pieces, bounds=d.get("bounds"), name=d.get("name", ""))

    def __repr__(self):
        return f"SemialgebraicSet(dim={self.dim}, pieces={len(self.pieces)}, name={self.name!r})"


def membership(S, x, tol: float = 1e-9) -> Membership:
    """Classify ``x`` as inside, on the boundary (within ``tol``) or outside ``S``."""
    if isinstance(S, (HPolytope, Simplex, PLUnion)):
        S = S.to_set()
    if len(x) != S.dim:
        raise ValueError("dimension mismatch")
    return S.membership(x, tol)


# ---------------------------------------------------------------------------
# triangulation


def _fan(points: list, A, b, k: int) -> list:
    """Centroid fan of a k-dimensional face given by its vertices."""
    if len(points) == k + 1:
        return [list(points)]
    c = _centroid(points)
    subfaces = []
    seen = set()
    for a, bi in zip(A, b):
        sub = tuple(sorted(p for p in points if _dot(a, p) == bi))
        if len(sub) >= k and sub not in seen and _affine_rank(sub) == k - 1:
            seen.add(sub)
            subfaces.append(list(sub))
    out = []
    for sub in subfaces:
        for simp in _fan(sub, A, b, k - 1):
            out.append(simp + [c])
    return out


def triangulate(S) -> list:
    """Cover a PL union by simplices (centroid fan of each member polytope)."""
    if isinstance(S, (HPolytope, Simplex)):
        S = PLUnion([S])
    if not S.polyhedra:
        raise ValueError("empty union")
    out = []
    for P in S.polyhedra:
        for simp in _fan(list(P.vertices), P.A, P.b, P.dim):
            out.append(Simplex(simp))
    return out


# ---------------------------------------------------------------------------
# bridges


@dataclass(frozen=True)
class BridgeSpec:
    """Arc ``t -> q + t^2 v + t^3 w`` crossing from ``int K1`` (t<0) to ``int K2`` (t>0)."""

    q: tuple
    v: tuple
    w: tuple
    eps: Fraction
    certificate: dict = field(default_factory=dict, compare=False)

    @property
    def is_linear(self) -> bool:
        """With ``v = 0`` the arc is a reparametrised segment ``q + s w``."""
        return all(c == 0 for c in self.v)

    def arc(self) -> list:
        """Arc components as exact univariate polynomials in t."""
        return [UniPoly([qi, 0, vi, wi]) for qi, vi, wi in zip(self.q, self.v, self.w)]

    def path_arc(self) -> tuple[list, Fraction]:
        """The arc used for path assembly and its half-width.

        For ``v = 0`` the segment ``q + s w`` with ``|s| <= eps^3`` (same trace, linear
        speed); otherwise the cubic arc on ``|t| <= eps``.
        """
        if self.is_linear:
            return [UniPoly([qi, wi]) for qi, wi in zip(self.q, self.w)], self.eps ** 3
        return self.arc(), self.eps

    def arc_float(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)[:, None]
        q = np.array([float(c) for c in self.q])
        v = np.array([float(c) for c in self.v])
        w = np.array([float(c) for c in self.w])
        return q + t ** 2 * v + t ** 3 * w

    def to_json(self) -> dict:
        return {
            "q": [frac_str(c) for c in self.q],
            "v": [frac_str(c) for c in self.v],
            "w": [frac_str(c) for c in self.w],
            "eps": frac_str(self.eps),
            "certificate": self.certificate,
        }

    @classmethod
    def from_json(cls, d: dict) -> "BridgeSpec":
        return cls(_vec(d["q"]), _vec(d["v"]), _vec(d["w"]), as_fraction(d["eps"]), d.get("certificate", {}))


def _slack_polys(K: HPolytope, q, v, w) -> list:
    """Per facet, ``b - a.(q + t^2 v + t^3 w)`` as exact polynomials in t."""
    out = []
    for a, bi in zip(K.A, K.b):
        out.append(UniPoly([bi - _dot(a, q), 0, -_dot(a, v), -_dot(a, w)]))
    return out


def _arc_ok(K1: HPolytope, K2: HPolytope, q, v, w, eps: Fraction, n: int = 1000) -> tuple[bool, float]:
    """Sampled check that the arc is strictly inside K1 for t<0 and K2 for t>0."""
    half = n // 2
    e = float(eps)
    # geometric spacing near 0 plus uniform spacing
    ts = np.unique(np.concatenate([np.geomspace(e * 1e-3, e, half // 2), np.linspace(e / half, e, half - half // 2)]))
    worst = np.inf
    for K, sign in ((K1, -1.0), (K2, 1.0)):
        polys = _slack_polys(K, q, v, w)
        vals = np.min(np.column_stack([p.eval_float(sign * ts) for p in polys]), axis=1)
        worst = min(worst, float(vals.min()))
        if np.any(vals <= 0):
            return False, worst
    return True, worst


def _validate_eps(K1, K2, q, v, w, n: int = 1000, max_halvings: int = 60):
    eps = Fraction(1)
    for _ in range(max_halvings):
        ok, worst = _arc_ok(K1, K2, q, v, w, eps, n)
        if ok:
            return eps, {"samples": n, "min_slack": worst}
        eps /= 2
    return None, {}


def _rationalize(x: np.ndarray, limit: int) -> tuple:
    return tuple(Fraction(float(v)).limit_denominator(limit) for v in x)


def _max_slack_lp(G: np.ndarray, n: int):
    """maximise s subject to G y + s <= 0, |y| <= 1, s <= 1; returns (s, y)."""
    m = G.shape[0]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A = np.hstack([G, np.ones((m, 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(m), bounds=[(-1, 1)] * n + [(None, 1)], method="highs")
    if res.status != 0:
        return 0.0, None
    return -res.fun, res.x[:n]


def _strict_exact(rows: list, y: tuple, signs: list) -> bool:
    return all(s * _dot(r, y) > 0 for r, s in zip(rows, signs))


def _solve_vw(K1: HPolytope, K2: HPolytope, q) -> tuple | None:
    """Find (v, w) satisfying the active-facet sign system at q, or None."""
    n = K1.dim
    act = [(a, 1) for a, bi in zip(K1.A, K1.b) if _dot(a, q) == bi]
    act += [(a, 2) for a, bi in zip(K2.A, K2.b) if _dot(a, q) == bi]
    if not act:
        return None
    normals = np.array([[float(x) for x in a] for a, _ in act])
    # v level: which facets can be made strict (a.v < 0) inside the cone a.v <= 0
    strictable = []
    for j in range(len(act)):
        res = linprog(normals[j], A_ub=normals, b_ub=np.zeros(len(act)), bounds=[(-1, 1)] * n, method="highs")
        strictable.append(res.status == 0 and -res.fun > 1e-9)
    E = [act[j] for j in range(len(act)) if not strictable[j]]
    S = [act[j] for j in range(len(act)) if strictable[j]]
    zero = tuple(Fraction(0) for _ in range(n))
    v = zero
    if S:
        basis = _nullspace([list(a) for a, _ in E], n)
        B = np.array([[float(x) for x in b] for b in basis]).T  # n x k
        G = np.array([[float(x) for x in a] for a, _ in S]) @ B
        s, y = _max_slack_lp(G, B.shape[1])
        if y is None or s <= 1e-12:
            return None
        for limit in (10, 1000, 10 ** 6, 10 ** 12):
            yr = _rationalize(y, limit)
            vv = tuple(sum((bb[i] * yr[k] for k, bb in enumerate(basis)), Fraction(0)) for i in range(n))
            if _strict_exact([a for a, _ in S], vv, [-1] * len(S)):
                v = vv
                break
        else:
            return None
    if not E:
        # every active facet is strict for v: the open sets overlap near q
        return None
    rows = [a for a, _ in E]
    signs = [1 if side == 1 else -1 for _, side in E]
    # first try the signed sum of the normals, which gives tidy directions
    w0 = [sum((s * a[i] for a, s in zip(rows, signs)), Fraction(0)) for i in range(n)]
    if any(x != 0 for x in w0):
        scale = max(abs(x) for x in w0)
        w0 = tuple(x / scale for x in w0)
        if _strict_exact(rows, w0, signs):
            return v, w0
    G = -np.array([[float(x) * s for x in a] for a, s in zip(rows, signs)])
    s, y = _max_slack_lp(G, n)
    if y is None or s <= 1e-12:
        return None
    for limit in (10, 1000, 10 ** 6, 10 ** 12):
        w = _rationalize(y, limit)
        if _strict_exact(rows, w, signs):
            return v, w
    return None


def _faces(I: HPolytope, V: list) -> list:
    """Faces of a polytope as vertex tuples (closure of vertex active sets under intersection)."""
    act = [frozenset(j for j, (a, bi) in enumerate(zip(I.A, I.b)) if _dot(a, v) == bi) for v in V]
    sets = set(act)
    frontier = set(act)
    while frontier:
        new = set()
        for s1 in frontier:
            for s2 in sets:
                s = s1 & s2
                if s not in sets:
                    new.add(s)
        sets |= new
        frontier = new
    faces = set()
    for J in sets:
        faces.add(tuple(v for v, a in zip(V, act) if J <= a))
    faces.add(tuple(V))
    return [f for f in faces if f]


def bridge_between(K1, K2, samples: int = 1000) -> BridgeSpec | None:
    """Polynomial bridge from ``int K1`` to ``int K2``, or None if the arc search fails."""
    K1, K2 = _as_hpoly(K1), _as_hpoly(K2)
    if K1.dim != K2.dim:
        raise ValueError("dimension mismatch")
    n = K1.dim
    I = HPolytope(K1.A + K2.A, K1.b + K2.b)
    V = _vertices_or_empty(I)
    if not V:
        return None
    if _affine_rank(V) == n:
        q = _centroid(V)
        v = tuple(Fraction(0) for _ in range(n))
        w = tuple(Fraction(int(i == 0)) for i in range(n))
        eps, cert = _validate_eps(K1, K2, q, v, w, samples)
        if eps is None:
            return None
        cert["kind"] = "overlap"
        return BridgeSpec(q, v, w, eps, cert)
    faces = _faces(I, V)
    cands = sorted(((_affine_rank(f), _centroid(f)) for f in faces), key=lambda c: (-c[0], c[1]))
    for dim_f, q in cands:
        sol = _solve_vw(K1, K2, q)
        if sol is None:
            continue
        v, w = sol
        eps, cert = _validate_eps(K1, K2, q, v, w, samples)
        if eps is None:
            continue
        cert["kind"] = "arc"
        cert["face_dim"] = dim_f
        return BridgeSpec(q, v, w, eps, cert)
    return None


# ---------------------------------------------------------------------------
# bridge graph


@dataclass
class BridgeGraph:
    nodes: list
    edges: dict  # (i, j) with i < j -> BridgeSpec oriented from i to j

    def adjacency(self) -> dict:
        adj = {i: set() for i in range(len(self.nodes))}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def components(self) -> list:
        adj = self.adjacency()
        seen = set()
        comps = []
        for s in range(len(self.nodes)):
            if s in seen:
                continue
            stack = [s]
            comp = []
            seen.add(s)
            while stack:
                u = stack.pop()
                comp.append(u)
                for v in adj[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def bridge(self, i: int, j: int) -> BridgeSpec:
        """Bridge oriented from node i to node j."""
        if (i, j) in self.edges:
            return self.edges[(i, j)]
        b = self.edges[(j, i)]
        # reverse orientation: t -> -t flips the sign of w
        return BridgeSpec(b.q, b.v, tuple(-c for c in b.w), b.eps, b.certificate)


def _boxes_touch(P: HPolytope, Q: HPolytope) -> bool:
    bp, bq = P.bounds(), Q.bounds()
    return all(a[0] <= b[1] + 1e-12 and b[0] <= a[1] + 1e-12 for a, b in zip(bp, bq))


def bridge_graph(S, simplices: Sequence | None = None) -> BridgeGraph:
    """Graph on the covering simplices of ``S`` with an edge per bridge."""
    nodes = list(simplices) if simplices is not None else triangulate(S)
    polys = [_as_hpoly(s) for s in nodes]
    edges = {}
    for i, j in itertools.combinations(range(len(nodes)), 2):
        if not _boxes_touch(polys[i], polys[j]):
            continue
        b = bridge_between(polys[i], polys[j])
        if b is not None:
            edges[(i, j)] = b
    return BridgeGraph(nodes, edges)


def walk_order(graph: BridgeGraph, start: int = 0) -> list:
    """Depth-first walk visiting every node, consecutive entries bridged (repeats allowed)."""
    if not graph.nodes:
        raise ValueError("empty graph")
    if not graph.is_connected():
        raise NotConnectedError("not connected by analytic paths: bridge graph has several components")
    adj = graph.adjacency()
    walk = [start]
    seen = {start}

    def dfs(u):
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                walk.append(v)
                dfs(v)
                walk.append(u)

    dfs(start)
    # drop the trailing return trip after the last new node
    last_new = max(walk.index(v) for v in range(len(graph.nodes)))
    return walk[: last_new + 1]


def is_analytic_path_connected(S) -> bool:
    """True iff the bridge graph of the covering simplices is connected.

    The criterion is sufficient: each edge is an explicit polynomial bridge.
    Whether every analytic connection between convex polytopes is detected by
    arcs of the form ``q + t^2 v + t^3 w`` is not settled.
    """
    return bridge_graph(S).is_connected()
