"""Input coercion and checks shared by the estimators and the command line."""
from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .mesh import TriMesh, read_mesh
from .polygon import Polygon
from .supportfree import FabricationParams


def check_polygon(X) -> Polygon:
    """A Polygon from a Polygon, a polygon dict, an (n, 2) array or a JSON path."""
    from .io import load_polygon, polygon_from_dict

    if isinstance(X, Polygon):
        return X
    if isinstance(X, Mapping):
        return polygon_from_dict(dict(X))
    if isinstance(X, (str, bytes)) or hasattr(X, "__fspath__"):
        return load_polygon(X)
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 3:
        raise ConfigError(f"expected an (n, 2) outline with n >= 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("outline contains non-finite coordinates")
    return Polygon(arr)


def check_polygons(X) -> list[Polygon]:
    """One or several polygons as a list."""
    if isinstance(X, (Polygon, Mapping, str)) or hasattr(X, "__fspath__"):
        return [check_polygon(X)]
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [check_polygon(X)]
    if isinstance(X, Sequence) and X and np.ndim(X[0]) == 1:
        return [check_polygon(X)]
    return [check_polygon(x) for x in X]


def check_mesh(X) -> TriMesh:
    """A closed TriMesh from a TriMesh, a (vertices, faces) pair or a mesh file path."""
    if isinstance(X, TriMesh):
        m = X
    elif isinstance(X, (str, bytes)) or hasattr(X, "__fspath__"):
        m = read_mesh(X)
    elif isinstance(X, tuple) and len(X) == 2:
        m = TriMesh(np.asarray(X[0], dtype=float), np.asarray(X[1], dtype=np.int64))
    else:
        raise ConfigError(f"cannot interpret {type(X).__name__} as a mesh")
    m.check_closed()
    return m


def check_points(P, dim: int) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(P, dtype=float))
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ConfigError(f"expected points of shape (n, {dim}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("points contain non-finite coordinates")
    return arr


def check_params(sigma0=0.2, delta0=5.0, theta0=60.0, delta_wall=25.0, rho=0.7, a_min=1.0, eps0=None) -> FabricationParams:
    """FabricationParams with range checks; raises ConfigError."""
    return FabricationParams(float(sigma0), float(delta0), float(theta0), float(delta_wall), float(rho), float(a_min),
                             None if eps0 is None else float(eps0))


def check_direction(axis) -> np.ndarray | None:
    """None for automatic choice, else a unit horizontal direction."""
    if axis is None or axis == "auto":
        return None
    if isinstance(axis, str):
        table = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0)}
        if axis not in table:
            raise ConfigError(f"axis must be 'auto', 'x' or 'y', got {axis!r}")
        return np.array(table[axis])
    d = np.asarray(axis, dtype=float)
    if d.shape != (3,) or abs(d[2]) > 1e-12 or np.linalg.norm(d) == 0:
        raise ConfigError("a slice normal must be a non-zero horizontal 3-vector")
    return d / np.linalg.norm(d)


__all__ = ["check_direction", "check_mesh", "check_params", "check_points", "check_polygon", "check_polygons"]
