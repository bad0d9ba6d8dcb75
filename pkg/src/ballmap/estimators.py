"""scikit-learn style wrappers around the constructions.

The constructions take no training data: ``fit`` builds the map from the
parameters (``X`` and ``y`` are accepted and ignored) and ``transform`` maps
points of the source ball.  ``score`` is minus the coverage gap, so larger is
better.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .verify import check_containment, check_coverage


class _MapTransformer(TransformerMixin, BaseEstimator):
    def _build(self):
        raise NotImplementedError

    def fit(self, X=None, y=None):
        self.map_, self.target_ = self._build()
        self.n_features_in_ = self.map_.n_in
        return self

    def _check(self):
        if not hasattr(self, "map_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def transform(self, X):
        self._check()
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} coordinates, got {X.shape[1]}")
        return self.map_.eval_float(X)

    def containment(self, n_samples=10_000, tol=1e-9, seed=0):
        self._check()
        return check_containment(self.map_, self.target_, n_samples, tol, seed=seed)

    def score(self, X=None, y=None, n_image=20_000, seed=0):
        """Minus the coverage gap of the image of ``X`` (or of ``n_image`` ball samples)."""
        self._check()
        pts = None if X is None else self.transform(X)
        rep = check_coverage(self.map_, self.target_, n_image, seed=seed, image_points=pts)
        return -rep.coverage_gap


class BrickTransformer(_MapTransformer):
    """Map of a single brick, described by a JSON-style spec dict."""

    def __init__(self, spec=None):
        self.spec = spec

    def _build(self):
        from .bricks import build_brick

        if not self.spec:
            raise ValueError("BrickTransformer needs a brick spec")
        r = build_brick(self.spec)
        return r.map, r.set


class PLUnionTransformer(_MapTransformer):
    """Map from ``B_{n+1}`` onto a union of polytopes given by vertex lists."""

    def __init__(self, polyhedra=None, seed=0, certify=False):
        self.polyhedra = polyhedra
        self.seed = seed
        self.certify = certify

    def _build(self):
        from .assembler import build_pl_union_map
        from .geometry import HPolytope, PLUnion

        S = PLUnion([HPolytope.from_vertices(v) for v in self.polyhedra])
        self.certificate_ = build_pl_union_map(S, seed=self.seed, certify=self.certify)
        return self.certificate_.map, S.to_set()


def image_cloud(estimator, n, seed=0):
    """``n`` image points of ball samples under a fitted transformer."""
    from .verify import sample_ball

    estimator._check()
    rng = np.random.default_rng(seed)
    return estimator.transform(sample_ball(estimator.n_features_in_, n, rng))
