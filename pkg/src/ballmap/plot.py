"""Deterministic SVG pictures of planar targets, image clouds and paths."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .geometry import HPolytope, PLUnion, SemialgebraicSet, Simplex, vertices_of

__all__ = ["plot2d", "boundary_segments"]

SIZE = 512
PAD = 24


def _polygon(P: HPolytope) -> list:
    """Vertices of a planar polytope in counter-clockwise order."""
    V = np.array([[float(c) for c in v] for v in vertices_of(P)])
    c = V.mean(axis=0)
    ang = np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0])
    return [tuple(V[i]) for i in np.argsort(ang)]


def _key(p) -> tuple:
    return (round(p[0], 12), round(p[1], 12))


def _union_edges(polys: Sequence[HPolytope]) -> list:
    """Polygon edges that are not shared by two members (the outer boundary of a tiling)."""
    count = {}
    first = {}
    for P in polys:
        V = _polygon(P)
        for a, b in zip(V, V[1:] + V[:1]):
            k = tuple(sorted((_key(a), _key(b))))
            count[k] = count.get(k, 0) + 1
            first.setdefault(k, (a, b))
    return [first[k] for k in sorted(first) if count[k] == 1]


def _contour(S: SemialgebraicSet, n: int = 160) -> list:
    """Marching squares on the zero level of the margin of ``S``."""
    (x0, x1), (y0, y1) = S.bounds
    dx, dy = 0.05 * (x1 - x0 or 1), 0.05 * (y1 - y0 or 1)
    xs = np.linspace(x0 - dx, x1 + dx, n)
    ys = np.linspace(y0 - dy, y1 + dy, n)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    M = S.margin(np.column_stack([XX.ravel(), YY.ravel()])).reshape(n, n)
    M = np.where(np.isfinite(M), M, -1.0)
    segs = []

    def cross(pa, pb, ma, mb):
        s = ma / (ma - mb)
        return (pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1]))

    for i in range(n - 1):
        for j in range(n - 1):
            corners = [(xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])]
            vals = [M[i, j], M[i + 1, j], M[i + 1, j + 1], M[i, j + 1]]
            pts = []
            for a in range(4):
                b = (a + 1) % 4
                if (vals[a] >= 0) != (vals[b] >= 0):
                    pts.append(cross(corners[a], corners[b], vals[a], vals[b]))
            for k in range(0, len(pts) - 1, 2):
                segs.append((pts[k], pts[k + 1]))
    return segs


def boundary_segments(target) -> list:
    """Boundary of a planar target as a list of segments ``((x, y), (x, y))``."""
    if isinstance(target, (HPolytope, Simplex)):
        target = PLUnion([target])
    if isinstance(target, PLUnion):
        if target.dim != 2:
            raise ValueError("plots need a planar target")
        return _union_edges(target.polyhedra)
    if isinstance(target, SemialgebraicSet):
        if target.dim != 2:
            raise ValueError("plots need a planar target")
        if target.bounds is None:
            raise ValueError("set needs a bounding box to be drawn")
        return _contour(target)
    raise TypeError(f"cannot draw {type(target).__name__}")


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def plot2d(target, points: np.ndarray | None = None, paths: Sequence = (), title: str = "") -> str:
    """SVG document with the target boundary, image points as circles and paths as polylines.

    Each entry of ``paths`` is a callable ``T -> (len(T), 2)`` array with a
    ``domain`` attribute, or a pair ``(callable, (a, b))``; it is sampled at
    512 parameters.
    """
    segs = boundary_segments(target)
    traces = []
    for p in paths:
        f, (a, b) = p if isinstance(p, tuple) else (p, p.domain)
        T = np.linspace(float(a), float(b), 512)
        traces.append(np.asarray(f(T), dtype=float))
    pts = [np.array(s).reshape(-1, 2) for s in segs]
    if points is not None and len(points):
        pts.append(np.asarray(points, dtype=float))
    pts.extend(traces)
    allp = np.vstack(pts) if pts else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    scale = (SIZE - 2 * PAD) / span

    def X(p):
        return PAD + (p[0] - lo[0]) * scale

    def Y(p):
        return SIZE - PAD - (p[1] - lo[1]) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">']
    if title:
        out.append(f"<title>{title}</title>")
    for a, b in segs:
        out.append(f'<path class="boundary" d="M {_fmt(X(a))} {_fmt(Y(a))} L {_fmt(X(b))} {_fmt(Y(b))}" '
                   'stroke="black" fill="none" stroke-width="1.5"/>')
    if points is not None:
        for p in np.asarray(points, dtype=float):
            out.append(f'<circle cx="{_fmt(X(p))}" cy="{_fmt(Y(p))}" r="0.8" fill="steelblue"/>')
    for tr in traces:
        coords = " ".join(f"{_fmt(X(p))},{_fmt(Y(p))}" for p in tr)
        out.append(f'<polyline points="{coords}" stroke="crimson" fill="none" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
