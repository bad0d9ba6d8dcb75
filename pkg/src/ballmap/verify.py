"""Sampling certificates: containment, coverage gap, exact waypoints."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import norm, qmc

from .geometry import SemialgebraicSet
from .polycore import PolyMap, UniPoly, as_fraction, frac_str

__all__ = [
    "VerifyReport",
    "sample_ball",
    "sample_sphere",
    "sample_cube",
    "sample_simplex",
    "sample_source",
    "check_containment",
    "check_coverage",
    "refined_image_cloud",
    "check_waypoints",
    "verify_map",
]


@dataclass
class VerifyReport:
    """Outcome of a sampling or exact check.

    ``coverage_gap`` is the largest distance from a target sample to the image
    cloud; it certifies nothing symbolically.  ``rigorous`` is reserved for
    interval-arithmetic proofs and is always ``None`` here.
    """

    n_samples: int = 0
    violations: int = 0
    worst_margin: float | None = None
    tol: float | None = None
    coverage_gap: float | None = None
    n_image: int = 0
    n_target: int = 0
    waypoints: list = field(default_factory=list)
    runtime_s: float = 0.0
    seed: int | None = None
    rigorous: None = None
    notes: str = ""

    @property
    def waypoints_exact(self) -> bool:
        return all(w["exact"] for w in self.waypoints)

    def passed(self, gap_tol: float | None = None) -> bool:
        ok = self.violations == 0 and self.waypoints_exact
        if gap_tol is not None and self.coverage_gap is not None:
            ok = ok and self.coverage_gap < gap_tol
        return ok

    def merge(self, other: "VerifyReport") -> "VerifyReport":
        out = VerifyReport(**asdict(self))
        for k in ("n_samples", "violations", "n_image", "n_target"):
            setattr(out, k, getattr(self, k) + getattr(other, k))
        if other.worst_margin is not None:
            out.worst_margin = other.worst_margin if self.worst_margin is None else min(self.worst_margin, other.worst_margin)
        if other.coverage_gap is not None:
            out.coverage_gap = other.coverage_gap if self.coverage_gap is None else max(self.coverage_gap, other.coverage_gap)
        out.tol = self.tol if self.tol is not None else other.tol
        out.waypoints = self.waypoints + other.waypoints
        out.runtime_s = self.runtime_s + other.runtime_s
        out.notes = "; ".join(n for n in (self.notes, other.notes) if n)
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d["waypoints_exact"] = self.waypoints_exact
        return d


# ---------------------------------------------------------------------------
# samplers


def sample_sphere(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.standard_normal((n, m))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def sample_ball(m: int, n: int, rng: np.random.Generator, method: str = "random", sphere_fraction: float = 0.0) -> np.ndarray:
    """Uniform points of the closed unit ball.

    ``method="random"`` uses a Gaussian direction and radius ``U^(1/m)``;
    ``method="sobol"`` feeds a scrambled Sobol sequence through the same
    transform.  A fraction of the points can be put on the sphere, where
    images of the ball usually reach the boundary of the target.
    """
    n_sph = int(round(n * sphere_fraction))
    n_in = n - n_sph
    if method == "sobol":
        eng = qmc.Sobol(d=m + 1, scramble=True, seed=rng)
        u = eng.random(n_in)
        u = np.clip(u, 1e-12, 1 - 1e-12)
        d = norm.ppf(u[:, :m])
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        pts = d * (u[:, m] ** (1.0 / m))[:, None]
    elif method == "random":
        pts = sample_sphere(m, n_in, rng) * (rng.random(n_in) ** (1.0 / m))[:, None]
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    if n_sph:
        pts = np.vstack([pts, sample_sphere(m, n_sph, rng)])
    return pts


def sample_cube(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, (n, m))


def sample_simplex(vertices, n: int, rng: np.random.Generator) -> np.ndarray:
    V = np.array([[float(c) for c in v] for v in vertices])
    w = rng.dirichlet(np.ones(len(V)), n)
    return w @ V


def sample_source(kind: str, m: int, n: int, rng: np.random.Generator, **kw) -> np.ndarray:
    """Samples of ``ball``, ``cube``, ``cylinder`` (ball x interval) or ``prism`` (standard simplex x interval)."""
    if kind == "ball":
        return sample_ball(m, n, rng, **kw)
    if kind == "cube":
        return sample_cube(m, n, rng)
    if kind == "cylinder":
        return np.column_stack([sample_ball(m - 1, n, rng), rng.uniform(-1, 1, n)])
    if kind == "prism":
        V = [[0] * (m - 1)] + [[int(i == j) for i in range(m - 1)] for j in range(m - 1)]
        return np.column_stack([sample_simplex(V, n, rng), rng.uniform(-1, 1, n)])
    raise ValueError(f"unknown source {kind!r}")


# ---------------------------------------------------------------------------
# checks


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def check_containment(f: PolyMap, target: SemialgebraicSet, n_samples: int = 10_000, tol: float = 1e-9,
                      seed=0, source: str = "ball", method: str = "random", sphere_fraction: float = 0.1,
                      points: np.ndarray | None = None) -> VerifyReport:
    """Count sampled source points whose image misses ``target`` by more than ``tol``."""
    t0 = time.perf_counter()
    if f.n_out != target.dim:
        raise ValueError(f"map lands in R^{f.n_out}, target lives in R^{target.dim}")
    rng = _as_rng(seed)
    if points is None:
        if source == "ball":
            points = sample_ball(f.n_in, n_samples, rng, method=method, sphere_fraction=sphere_fraction)
        else:
            points = sample_source(source, f.n_in, n_samples, rng)
    Y = f.eval_float(points)
    m = target.margin(Y)
    bad = int(np.sum(~(m >= -tol)))
    return VerifyReport(n_samples=len(points), violations=bad, worst_margin=float(np.min(m)), tol=tol,
                        runtime_s=time.perf_counter() - t0, seed=seed if isinstance(seed, int) else None)


def _project_ball(X: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(X, axis=1, keepdims=True)
    return np.where(r > 1.0, X / np.maximum(r, 1e-300), X)


def _lattice_in(target: SemialgebraicSet, n: int) -> np.ndarray:
    """About ``n`` points of a regular lattice restricted to the target set."""
    lo = np.array([b[0] for b in target.bounds])
    hi = np.array([b[1] for b in target.bounds])
    vol = float(np.prod(hi - lo))
    # estimate the fill ratio to size the lattice
    probe = lo + (hi - lo) * np.random.default_rng(12345).random((4000, target.dim))
    frac = max(float(np.mean(target.margin(probe) >= 0)), 1e-3)
    h = (vol * frac / n) ** (1.0 / target.dim)
    for _ in range(20):
        axes = [np.arange(a + h / 2, b, h) for a, b in zip(lo, hi)]
        G = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, target.dim)
        G = G[target.margin(G) >= 0]
        if len(G) <= n:
            return G
        h *= (len(G) / n) ** (1.0 / target.dim)
    return G[:n]


def _gauss_newton(f: PolyMap, X: np.ndarray, G: np.ndarray, iterations: int) -> np.ndarray:
    """Move ball points ``X`` so that ``f(X)`` approaches ``G`` (per-point damping)."""
    m = f.n_in
    step = 1e-6
    mu = np.full(len(X), 1e-4)
    for _ in range(iterations):
        R = f.eval_float(X) - G
        res = np.linalg.norm(R, axis=1)
        # central-difference Jacobian, shape (N, n, m)
        cols = []
        for j in range(m):
            E = np.zeros(m)
            E[j] = step
            cols.append((f.eval_float(X + E) - f.eval_float(X - E)) / (2 * step))
        J = np.stack(cols, axis=-1)
        JJt = J @ np.swapaxes(J, 1, 2) + mu[:, None, None] * np.eye(J.shape[1])[None]
        z = np.linalg.solve(JJt, R[..., None])[..., 0]
        D = -(np.swapaxes(J, 1, 2) @ z[..., None])[..., 0]
        Xn = _project_ball(X + D)
        better = np.linalg.norm(f.eval_float(Xn) - G, axis=1) < res
        X[better] = Xn[better]
        mu = np.where(better, mu * 0.3, mu * 10.0).clip(1e-12, 1e6)
    return X


def refined_image_cloud(f: PolyMap, target: SemialgebraicSet, n_image: int, rng: np.random.Generator,
                        seed_fraction: float = 0.25, iterations: int = 40, sphere_fraction: float = 0.2,
                        restarts: int = 5, tol: float = 1e-4) -> np.ndarray:
    """``n_image`` points of ``f(ball)``, placed to spread over the target.

    A quarter are images of uniform ball samples.  The rest are images of ball
    points found by damped Gauss-Newton steps towards a lattice inside the
    target, started from the nearest uniform images.  Every point is an exact
    image ``f(x)`` with ``|x| <= 1``, so distances to the cloud only ever
    over-estimate distances to the true image.
    """
    n_seed = max(1, int(n_image * seed_fraction))
    X0 = sample_ball(f.n_in, n_seed, rng, sphere_fraction=sphere_fraction)
    Y0 = f.eval_float(X0)
    G = _lattice_in(target, n_image - n_seed)
    if len(G) == 0:
        return Y0
    k = min(restarts + 1, n_seed)
    _, nbr = cKDTree(Y0).query(G, k=k)
    nbr = nbr.reshape(len(G), k)
    X = _gauss_newton(f, X0[nbr[:, 0]].copy(), G, iterations)
    # restart unconverged points from their next-nearest seeds
    for j in range(1, k):
        res = np.linalg.norm(f.eval_float(X) - G, axis=1)
        bad = np.flatnonzero(res > tol)
        if len(bad) == 0:
            break
        Xr = _gauss_newton(f, X0[nbr[bad, j]].copy(), G[bad], iterations)
        gain = np.linalg.norm(f.eval_float(Xr) - G[bad], axis=1) < res[bad]
        X[bad[gain]] = Xr[gain]
    # the few left over get random starts
    for _ in range(4 * restarts):
        res = np.linalg.norm(f.eval_float(X) - G, axis=1)
        bad = np.flatnonzero(res > tol)
        if len(bad) == 0:
            break
        Xr = _gauss_newton(f, sample_ball(f.n_in, len(bad), rng), G[bad], iterations)
        gain = np.linalg.norm(f.eval_float(Xr) - G[bad], axis=1) < res[bad]
        X[bad[gain]] = Xr[gain]
    return np.vstack([Y0, f.eval_float(X)])


def check_coverage(f: PolyMap, target, n_image: int = 100_000, n_target: int = 1000, seed=0,
                   source: str = "ball", method: str = "random", sphere_fraction: float = 0.2,
                   target_points: np.ndarray | None = None, image_points: np.ndarray | None = None) -> VerifyReport:
    """Largest distance from a target sample to the nearest image sample.

    ``target`` is a :class:`SemialgebraicSet` (sampled uniformly by rejection)
    or a callable ``(n, rng) -> points``.  ``method`` selects the image cloud:
    ``"random"`` or ``"sobol"`` ball samples, or ``"refined"``
    (:func:`refined_image_cloud`, needs a set with bounds).
    """
    t0 = time.perf_counter()
    rng = _as_rng(seed)
    if image_points is None:
        if method == "refined":
            if source != "ball" or not isinstance(target, SemialgebraicSet):
                raise ValueError("refined clouds need a ball source and a target set")
            image_points = refined_image_cloud(f, target, n_image, rng, sphere_fraction=sphere_fraction)
        else:
            if source == "ball":
                src = sample_ball(f.n_in, n_image, rng, method=method, sphere_fraction=sphere_fraction)
            else:
                src = sample_source(source, f.n_in, n_image, rng)
            image_points = f.eval_float(src)
    if target_points is None:
        if isinstance(target, SemialgebraicSet):
            target_points = target.sample(n_target, rng)
        else:
            target_points = target(n_target, rng)
    tree = cKDTree(image_points)
    dist, _ = tree.query(target_points, k=1)
    return VerifyReport(coverage_gap=float(dist.max()), n_image=len(image_points), n_target=len(target_points),
                        runtime_s=time.perf_counter() - t0, seed=seed if isinstance(seed, int) else None,
                        notes=f"image cloud: {method}")


def _eval_any(obj, t):
    if isinstance(obj, PolyMap):
        return obj(t if isinstance(t, (list, tuple)) else (t,))
    if isinstance(obj, UniPoly):
        return (obj(t),)
    if callable(obj) and not isinstance(obj, (list, tuple)):
        return tuple(obj(t))
    return tuple(u(t) for u in obj)


def check_waypoints(path, waypoints: Sequence, tol: float = 0.0) -> VerifyReport:
    """Compare ``path(param)`` with expected values.

    ``path`` is a :class:`PolyMap`, a :class:`UniPoly` or a sequence of them.
    With rational parameters and coefficients the comparison is exact; for
    float-tagged data the entry records ``exact = |error| <= tol``.
    """
    t0 = time.perf_counter()
    rows = []
    for param, expected in waypoints:
        p = as_fraction(param) if not isinstance(param, (list, tuple)) else tuple(as_fraction(v) for v in param)
        got = _eval_any(path, p)
        exp = tuple(as_fraction(v) for v in (expected if isinstance(expected, (list, tuple)) else (expected,)))
        if tol == 0:
            ok = tuple(as_fraction(g) for g in got) == exp
        else:
            ok = all(abs(float(g) - float(e)) <= tol for g, e in zip(got, exp))
        rows.append({
            "param": frac_str(p) if not isinstance(p, tuple) else [frac_str(v) for v in p],
            "expected": [frac_str(v) for v in exp],
            "got": [frac_str(as_fraction(g)) for g in got],
            "exact": bool(ok),
        })
    return VerifyReport(waypoints=rows, runtime_s=time.perf_counter() - t0)


def verify_map(f: PolyMap, target: SemialgebraicSet, n_samples: int = 10_000, n_image: int = 100_000,
               n_target: int = 1000, tol: float = 1e-9, seed: int = 0, method: str = "random",
               cloud: str = "refined") -> VerifyReport:
    """Containment on ``n_samples`` ball points plus coverage gap against ``n_image`` image points.

    ``method`` is the ball sampler for containment; ``cloud`` picks the image
    cloud for coverage (``"refined"``, ``"random"`` or ``"sobol"``).
    """
    rep = check_containment(f, target, n_samples, tol, seed=seed, method=method)
    cov = check_coverage(f, target, n_image, n_target, seed=seed + 1, method=cloud)
    return rep.merge(cov)
