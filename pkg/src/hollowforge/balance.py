"""Static balance by re-filling voids: per-void shrink factors that bring the centre of mass over the support."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import MultiPoint, Point

from .geom import Ellipse
from .mesh import TriMesh

log = logging.getLogger(__name__)


@dataclass
class VoidTerm:
    """One void cross-section: a slab of ellipse area times thickness, centred at ``center``."""

    slice: int
    ellipse: Ellipse
    center: np.ndarray
    volume: float
    gamma: float = 1.0
    group: int = 0

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"shrink factor {self.gamma} outside [0, 1]")


@dataclass
class BalanceProblem:
    voids: list[VoidTerm]
    contacts: np.ndarray
    density: float = 1.0
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))

    def __post_init__(self):
        self.contacts = np.asarray(self.contacts, dtype=float).reshape(-1, 2)
        if len(self.contacts) == 0:
            raise ValueError("contact set is empty")
        g = np.asarray(self.gravity, dtype=float)
        n = np.linalg.norm(g)
        if n == 0:
            raise ValueError("gravity direction is zero")
        self.gravity = g / n
        if not self.density > 0:
            raise ValueError("density must be positive")

    @property
    def groups(self) -> list[int]:
        return sorted({v.group for v in self.voids})

    def gammas(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for v in self.voids:
            out.setdefault(v.group, v.gamma)
        return out

    def with_gammas(self, gammas: dict[int, float]) -> "BalanceProblem":
        vs = [VoidTerm(v.slice, v.ellipse, v.center, v.volume, gammas.get(v.group, v.gamma), v.group) for v in self.voids]
        return BalanceProblem(vs, self.contacts, self.density, self.gravity)

    @classmethod
    def from_stack(cls, stack, mesh: TriMesh, tol: float = 0.1, density: float = 1.0) -> "BalanceProblem":
        """Voids of a propagated slice stack; all slices of one track share a factor."""
        vs = []
        for t in sorted(stack.tracks.values(), key=lambda t: t.id):
            for k in sorted(t.members):
                e = stack.ellipse(t.id, k)
                c = stack.offsets[k] * stack.normal + e.cx * stack.u + e.cy * stack.v
                vs.append(VoidTerm(k, e, c, e.area * stack.spacing, 1.0, t.id))
        return cls(vs, contact_points(mesh, tol=tol), density)


def ground_frame(gravity) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal axes of the ground plane; x and y for the default gravity -z."""
    g = np.asarray(gravity, dtype=float)
    g = g / np.linalg.norm(g)
    if np.allclose(g, [0.0, 0.0, -1.0]):
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    ref = np.array([1.0, 0.0, 0.0]) if abs(g[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(g, ref)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(g, e1)


def contact_points(mesh: TriMesh, gravity=(0.0, 0.0, -1.0), tol: float = 0.1) -> np.ndarray:
    """Ground-plane coordinates of the mesh vertices within ``tol`` of the lowest point."""
    g = np.asarray(gravity, dtype=float)
    g = g / np.linalg.norm(g)
    h = mesh.vertices @ g
    low = mesh.vertices[h >= h.max() - tol]
    e1, e2 = ground_frame(g)
    return np.column_stack([low @ e1, low @ e2])


def center_of_mass(problem: BalanceProblem, mesh: TriMesh) -> np.ndarray:
    """Centre of mass of the solid minus the voids, each void scaled by gamma^2 in volume."""
    mesh.check_closed()
    M = mesh.volume
    c = mesh.centroid
    if not problem.voids:
        return c
    w = np.array([v.volume * v.gamma * v.gamma for v in problem.voids])
    C = np.array([v.center for v in problem.voids])
    m = M - w.sum()
    if m <= 0:
        raise ValueError("voids remove all of the material")
    return (M * c - (w[:, None] * C).sum(0)) / m


def _hull(contacts: np.ndarray):
    return MultiPoint([tuple(p) for p in contacts]).convex_hull


def signed_hull_distance(point2, contacts: np.ndarray) -> float:
    """Distance from a ground-plane point to the support hull; negative strictly inside."""
    hull = _hull(contacts)
    p = Point(float(point2[0]), float(point2[1]))
    if hull.geom_type == "Polygon" and hull.contains(p):
        return -float(hull.exterior.distance(p))
    return float(hull.distance(p))


def projected(problem: BalanceProblem, point3) -> np.ndarray:
    e1, e2 = ground_frame(problem.gravity)
    p = np.asarray(point3, dtype=float)
    return np.array([p @ e1, p @ e2])


class _Model:
    """Vectorised COM and hull distance over group factors."""

    def __init__(self, problem: BalanceProblem, mesh: TriMesh):
        mesh.check_closed()
        self.groups = problem.groups
        gi = {g: i for i, g in enumerate(self.groups)}
        n = len(self.groups)
        self.M = mesh.volume
        self.Mc = self.M * mesh.centroid
        self.V = np.zeros(n)
        self.VC = np.zeros((n, 3))
        for v in problem.voids:
            i = gi[v.group]
            self.V[i] += v.volume
            self.VC[i] += v.volume * v.center
        self.hull = _hull(problem.contacts)
        shapely.prepare(self.hull)
        self.e1, self.e2 = ground_frame(problem.gravity)
        self.problem = problem

    def com(self, g: np.ndarray) -> np.ndarray:
        g2 = np.asarray(g, dtype=float) ** 2
        m = self.M - g2 @ self.V
        return (self.Mc - g2 @ self.VC) / m

    def coms(self, G: np.ndarray) -> np.ndarray:
        G2 = np.asarray(G, dtype=float) ** 2
        m = self.M - G2 @ self.V
        return (self.Mc[None] - G2 @ self.VC) / m[:, None]

    def distance(self, g) -> float:
        c = self.com(g)
        return self._dist(np.array([[c @ self.e1, c @ self.e2]]))[0]

    def distances(self, G) -> np.ndarray:
        C = self.coms(G)
        return self._dist(np.column_stack([C @ self.e1, C @ self.e2]))

    def _dist(self, P: np.ndarray) -> np.ndarray:
        pts = shapely.points(P)
        d = shapely.distance(self.hull, pts)
        if self.hull.geom_type == "Polygon":
            inside = shapely.contains(self.hull, pts)
            d = np.where(inside, -shapely.distance(self.hull.exterior, pts), d)
        return np.asarray(d, dtype=float)


@dataclass
class BalanceResult:
    gammas: dict
    distance: float
    initial_distance: float
    status: str
    order: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return max(0.0, self.distance)

    @property
    def infeasible(self) -> bool:
        return self.status == "infeasible"

    def to_dict(self) -> dict:
        return {
            "gammas": {str(k): v for k, v in sorted(self.gammas.items())},
            "distance": self.distance,
            "initial_distance": self.initial_distance,
            "status": self.status,
            "order": list(self.order),
        }


def optimize(
    problem: BalanceProblem,
    mesh: TriMesh,
    continuous: bool = False,
    margin: float = 1e-3,
    pair_limit: int = 200,
) -> BalanceResult:
    """Greedy re-filling: repeatedly fill the void whose filling lowers the hull distance most.

    Factors only decrease.  With ``continuous`` the last void filled is
    instead shrunk just enough to put the centre of mass ``margin`` inside.
    """
    model = _Model(problem, mesh)
    init = problem.gammas()
    g = np.array([init[k] for k in model.groups], dtype=float)
    d0 = model.distance(g) if len(g) else signed_hull_distance(projected(problem, mesh.centroid), problem.contacts)
    if d0 < 0:
        return BalanceResult(dict(init), d0, d0, "balanced")
    solid = model.distance(np.zeros_like(g)) if len(g) else d0
    if solid >= 0:
        log.info("even the solid object is not balanced (distance %.6g)", solid)
    best_g, best_d, best_len = g.copy(), d0, 0
    cur, d = g.copy(), d0
    order, path = [], []
    while d >= 0 and np.any(cur > 0):
        cand = np.flatnonzero(cur > 0)
        G = np.repeat(cur[None], len(cand), axis=0)
        G[np.arange(len(cand)), cand] = 0.0
        ds = model.distances(G)
        j = int(np.argmin(ds))
        path.append((cur, int(cand[j])))
        cur, d = G[j], float(ds[j])
        order.append(model.groups[int(cand[j])])
        if max(0.0, d) < max(0.0, best_d) or (d < 0 <= best_d):
            best_g, best_d, best_len = cur.copy(), d, len(order)
    order = order[:best_len]
    if best_d >= 0 and len(g):
        # single flips between filled and the input factor, best first
        while True:
            G = np.repeat(best_g[None], len(g), axis=0)
            idx = np.arange(len(g))
            G[idx, idx] = np.where(best_g == 0.0, g, 0.0)
            if len(g) <= pair_limit:
                # pairs as well; one pass costs n^2 evaluations
                a, b = np.triu_indices(len(g), 1)
                H = np.repeat(best_g[None], len(a), axis=0)
                H[np.arange(len(a)), a] = G[a, a]
                H[np.arange(len(a)), b] = G[b, b]
                G = np.vstack([G, H])
            ds = model.distances(G)
            j = int(np.argmin(np.maximum(ds, 0.0)))
            if not max(0.0, ds[j]) < max(0.0, best_d) - 1e-12:
                break
            best_g, best_d = G[j], float(ds[j])
        order = [k for k in order if best_g[model.groups.index(k)] == 0.0]
        order += [k for i, k in enumerate(model.groups) if best_g[i] == 0.0 and g[i] > 0 and k not in order]
    if continuous and order and best_d < 0 and len(path) >= len(order):
        prev, j = path[len(order) - 1]
        lo, hi = 0.0, prev[j]  # lo balances, hi does not
        trial = best_g.copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            trial[j] = mid
            if model.distance(trial) <= -margin:
                lo = mid
            else:
                hi = mid
        trial[j] = lo
        if model.distance(trial) < 0:
            best_g, best_d = trial, model.distance(trial)
    status = "balanced" if best_d < 0 else ("infeasible" if solid >= 0 else "unbalanced")
    gam = {k: float(best_g[i]) for i, k in enumerate(model.groups)}
    return BalanceResult(gam, float(best_d), float(d0), status, order)


def brute_force(problem: BalanceProblem, mesh: TriMesh, max_groups: int = 16) -> BalanceResult:
    """Exhaustive search over keep/fill for every void group (reference solver)."""
    model = _Model(problem, mesh)
    n = len(model.groups)
    if n > max_groups:
        raise ValueError(f"{n} void groups is too many for exhaustive search")
    init = problem.gammas()
    g = np.array([init[k] for k in model.groups], dtype=float)
    masks = np.array(list(itertools.product((1.0, 0.0), repeat=n))) if n else np.ones((1, 0))
    G = masks * g[None]
    ds = model.distances(G) if n else np.array([model.distance(g)])
    obj = np.maximum(ds, 0.0)
    # fewest fills among optimal subsets, then the deepest inside
    fills = (masks == 0).sum(1)
    k = int(np.lexsort((ds, fills, obj))[0])
    d0 = float(ds[0])
    status = "balanced" if ds[k] < 0 else ("infeasible" if ds[-1] >= 0 else "unbalanced")
    return BalanceResult({q: float(G[k][i]) for i, q in enumerate(model.groups)}, float(ds[k]), d0, status)


def stand_fixture(depth: float = 40.0):
    """An extruded stand: a 140 x 80 block resting on a 60 mm wide foot, centre of mass past the foot."""
    from .mesh import extrude_polygon

    profile = [[0, 0], [60, 0], [60, 20], [140, 20], [140, 100], [0, 100]]
    # the profile lies in the x-z plane; extruding along y
    m = extrude_polygon(profile, depth, axis=1)
    return m, profile


__all__ = [
    "BalanceProblem",
    "BalanceResult",
    "VoidTerm",
    "brute_force",
    "center_of_mass",
    "contact_points",
    "optimize",
    "signed_hull_distance",
    "stand_fixture",
]
