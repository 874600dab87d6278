"""Estimator-style wrappers (fit / transform / predict) over the packer and the 3D pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .extrude import emit_hollowed, propagate, slice_mesh
from .packer import pack
from .validation import check_direction, check_mesh, check_params, check_points, check_polygons


class _ParamsMixin:
    def _params(self):
        return check_params(self.sigma0, self.delta0, self.theta0, self.delta_wall, self.rho, self.a_min, self.eps0)


class EllipsePacker(_ParamsMixin, TransformerMixin, BaseEstimator):
    """Greedy support-free ellipse packing of 2D polygons.

    ``fit`` packs each polygon; ``transform`` returns one ``(n, 4)`` array of
    ``cx, cy, a, b`` per polygon; ``predict`` labels 2D points with the index
    of the void containing them, or -1.
    """

    def __init__(self, sigma0=0.2, delta0=5.0, theta0=60.0, delta_wall=25.0, rho=0.7, a_min=1.0, eps0=None,
                 max_ellipses=None, cover="adaptive", cover_radius=None):
        self.sigma0 = sigma0
        self.delta0 = delta0
        self.theta0 = theta0
        self.delta_wall = delta_wall
        self.rho = rho
        self.a_min = a_min
        self.eps0 = eps0
        self.max_ellipses = max_ellipses
        self.cover = cover
        self.cover_radius = cover_radius

    def _pack(self, polys):
        p = self._params()
        return [pack(q, p, max_count=self.max_ellipses or None, cover_radius=self.cover_radius, cover=self.cover)
                for q in polys]

    def fit(self, X, y=None):
        self.polygons_ = check_polygons(X)
        self.results_ = self._pack(self.polygons_)
        self.ellipses_ = [_as_array(r.ellipses) for r in self.results_]
        self.packing_ratios_ = np.array([r.packing_ratio for r in self.results_])
        return self

    def transform(self, X):
        check_is_fitted(self, "results_")
        return [_as_array(r.ellipses) for r in self._pack(check_polygons(X))]

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).ellipses_

    def predict(self, points, polygon: int = 0):
        check_is_fitted(self, "results_")
        P = check_points(points, 2)
        E = self.ellipses_[polygon]
        labels = np.full(len(P), -1, dtype=np.int64)
        for i, (cx, cy, a, b) in enumerate(E):
            inside = ((P[:, 0] - cx) / a) ** 2 + ((P[:, 1] - cy) / b) ** 2 <= 1.0
            labels[(labels < 0) & inside] = i
        return labels

    def score(self, X=None, y=None):
        """Mean packing ratio of the fitted polygons."""
        check_is_fitted(self, "results_")
        return float(self.packing_ratios_.mean())


class Hollower(_ParamsMixin, TransformerMixin, BaseEstimator):
    """Slice, propagate and emit a hollowed mesh.

    ``transform`` returns the hollowed TriMesh; ``predict`` tells which 3D
    points lie in printed material of the fitted result.
    """

    def __init__(self, sigma0=0.2, delta0=5.0, theta0=60.0, delta_wall=25.0, rho=0.7, a_min=1.0, eps0=None,
                 axis="auto", spacing=None, max_tracks=None, n_ring=64):
        self.sigma0 = sigma0
        self.delta0 = delta0
        self.theta0 = theta0
        self.delta_wall = delta_wall
        self.rho = rho
        self.a_min = a_min
        self.eps0 = eps0
        self.axis = axis
        self.spacing = spacing
        self.max_tracks = max_tracks
        self.n_ring = n_ring

    def _run(self, X):
        mesh = check_mesh(X)
        stack = slice_mesh(mesh, check_direction(self.axis), self.spacing, self._params())
        propagate(stack, max_tracks=self.max_tracks or None)
        return mesh, stack, emit_hollowed(stack, mesh, self.n_ring)

    def fit(self, X, y=None):
        self.mesh_, self.stack_, self.hollowed_ = self._run(X)
        self.n_tracks_ = sum(1 for t in self.stack_.tracks.values() if t.members)
        return self

    def transform(self, X):
        check_is_fitted(self, "hollowed_")
        return self._run(X)[2]

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).hollowed_

    def predict(self, points):
        check_is_fitted(self, "hollowed_")
        return self.hollowed_.contains(check_points(points, 3))


def _as_array(ellipses) -> np.ndarray:
    return np.array([[e.cx, e.cy, e.a, e.b] for e in ellipses], dtype=float).reshape(-1, 4)


__all__ = ["EllipsePacker", "Hollower"]
