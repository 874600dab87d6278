"""Polygons with holes and their boundary disk coverings."""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon as ShapelyPolygon

from .errors import DegeneratePolygon, InvalidPolygon
from .geom import Disk

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps


def signed_area(loop) -> float:
    p = np.asarray(loop, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class Polygon:
    """Outer loop (counter-clockwise) plus hole loops (clockwise).

    Vertices of all loops share one global numbering; edge ``k`` runs from
    vertex ``k`` to ``next(k)``, so the interior is always on its left.
    """

    def __init__(self, outer, holes: Sequence = (), fix_orientation: bool = True, validate: bool = True):
        loops = [np.asarray(outer, dtype=float).reshape(-1, 2)]
        loops += [np.asarray(h, dtype=float).reshape(-1, 2) for h in holes]
        loops = [_drop_closing_duplicate(lp) for lp in loops]
        for k, lp in enumerate(loops):
            want = 1.0 if k == 0 else -1.0
            area = signed_area(lp) if len(lp) >= 3 else 0.0
            if area * want < 0.0:
                if not fix_orientation:
                    raise InvalidPolygon(f"loop {k} has the wrong orientation")
                log.warning("loop %d orientation reversed", k)
                loops[k] = lp[::-1].copy()
        self.loops = loops
        self.vertices = np.vstack(loops)
        starts = np.cumsum([0] + [len(lp) for lp in loops])
        self.loop_starts = starts
        n = len(self.vertices)
        nxt = np.arange(1, n + 1)
        prv = np.arange(-1, n - 1)
        loop_id = np.empty(n, dtype=int)
        for k in range(len(loops)):
            s, e = starts[k], starts[k + 1]
            nxt[e - 1] = s
            prv[s] = e - 1
            loop_id[s:e] = k
        self._next = nxt
        self._prev = prv
        self.loop_id = loop_id
        if validate:
            self.validate()

    # -- topology ----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    def next(self, k: int) -> int:
        return int(self._next[k])

    def prev(self, k: int) -> int:
        return int(self._prev[k])

    def edge(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices[k], self.vertices[self._next[k]]

    def edge_arrays(self):
        return self.vertices, self.vertices[self._next]

    def edge_lengths(self) -> np.ndarray:
        a, b = self.edge_arrays()
        return np.hypot(*(b - a).T)

    def is_convex(self, k: int) -> bool:
        p = self.vertices[self._prev[k]]
        c = self.vertices[k]
        q = self.vertices[self._next[k]]
        return (c[0] - p[0]) * (q[1] - c[1]) - (c[1] - p[1]) * (q[0] - c[0]) > 0.0

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    @property
    def diagonal(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def area(self) -> float:
        return sum(signed_area(lp) for lp in self.loops)

    def to_shapely(self) -> ShapelyPolygon:
        return ShapelyPolygon(self.loops[0], [lp for lp in self.loops[1:]])

    # -- checks ------------------------------------------------------------

    def validate(self) -> None:
        for k, lp in enumerate(self.loops):
            if len(lp) < 3:
                raise InvalidPolygon(f"loop {k} has fewer than 3 vertices")
        if not np.all(np.isfinite(self.vertices)):
            raise InvalidPolygon("non-finite coordinates")
        tiny = 10.0 * EPS * max(self.diagonal, 1e-300)
        short = np.flatnonzero(self.edge_lengths() < tiny)
        if len(short):
            raise DegeneratePolygon(f"P-edge {int(short[0])} is shorter than {tiny:.3g}")
        sp = self.to_shapely()
        if not sp.is_valid:
            raise InvalidPolygon(shapely.is_valid_reason(sp))

    def _shapes(self):
        if getattr(self, "_shape_cache", None) is None:
            sp = self.to_shapely()
            ring = shapely.MultiLineString([np.vstack([lp, lp[:1]]) for lp in self.loops])
            shapely.prepare(sp)
            shapely.prepare(ring)
            self._shape_cache = (sp, ring)
        return self._shape_cache

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        """Inclusion test; points within ``tol`` of the boundary count as inside."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        sp, _ = self._shapes()
        inside = shapely.contains_xy(sp, pts[:, 0], pts[:, 1])
        if tol > 0.0:
            inside |= self.boundary_distance(pts) <= tol
        return inside

    def boundary_distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        _, ring = self._shapes()
        return shapely.distance(shapely.points(pts), ring)

    def __repr__(self):
        return f"Polygon(n={self.n}, loops={len(self.loops)})"


def _drop_closing_duplicate(lp: np.ndarray) -> np.ndarray:
    if len(lp) > 1 and np.array_equal(lp[0], lp[-1]):
        return lp[:-1]
    return lp


def subdivide_edges(poly: Polygon, delta: float) -> Polygon:
    """Split every P-edge longer than ``2 delta`` into equal parts."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    loops = []
    for lp in poly.loops:
        out = []
        m = len(lp)
        for i in range(m):
            p, q = lp[i], lp[(i + 1) % m]
            L = math.hypot(q[0] - p[0], q[1] - p[1])
            parts = max(1, math.ceil(L / (2.0 * delta) - 1e-12))
            for j in range(parts):
                out.append(p + (q - p) * (j / parts))
        loops.append(np.array(out))
    return Polygon(loops[0], loops[1:], validate=False)


# ---------------------------------------------------------------------------
# boundary disks


@dataclass
class BoundaryDiskSet:
    """Disks covering the polygon boundary with child/parent links.

    Parents are ``("v", k)`` for P-vertex ``k`` and ``("e", k)`` for P-edge ``k``.
    """

    disks: list[Disk] = field(default_factory=list)
    parents: list[Hashable] = field(default_factory=list)
    children: dict = field(default_factory=dict)

    def add(self, d: Disk, parent: Hashable) -> int:
        self.disks.append(d)
        self.parents.append(parent)
        self.children.setdefault(parent, []).append(len(self.disks) - 1)
        return len(self.disks) - 1

    def at_disk(self, v: int) -> Disk:
        return self.disks[self.children[("v", v)][0]]

    def on_disks(self, e: int) -> list[Disk]:
        return [self.disks[i] for i in self.children.get(("e", e), [])]

    def __len__(self) -> int:
        return len(self.disks)

    def as_array(self) -> np.ndarray:
        return np.array(self.disks, dtype=float).reshape(-1, 3)


def _place_on_edge(p, q, spans) -> list[Disk]:
    L = math.hypot(q[0] - p[0], q[1] - p[1])
    ux, uy = (q[0] - p[0]) / L, (q[1] - p[1]) / L
    out = []
    for s0, s1 in spans:
        m = 0.5 * (s0 + s1)
        out.append(Disk(float(p[0] + m * ux), float(p[1] + m * uy), float(0.5 * (s1 - s0))))
    return out


def _uniform_spans(L: float, lstar: float, tiny: float) -> list[tuple[float, float]]:
    diam = 0.5 * lstar
    k = int(math.floor(2.0 * L / lstar + 1e-12))
    rem = L - k * diam
    if rem <= tiny:
        return [(i * diam, (i + 1) * diam) for i in range(k)] if k else [(0.0, L)]
    left = (k + 1) // 2
    spans = [(i * diam, (i + 1) * diam) for i in range(left)]
    s = left * diam
    spans.append((s, s + rem))
    s += rem
    for i in range(k - left):
        spans.append((s + i * diam, s + (i + 1) * diam))
    return spans


def _vertex_clearance(poly: Polygon) -> np.ndarray:
    """Distance from each P-vertex to the nearest non-incident P-edge."""
    from .geom import distance_points_segments_np

    a, b = poly.edge_arrays()
    n = poly.n
    out = np.empty(n)
    for s in range(0, n, 512):
        idx = np.arange(s, min(n, s + 512))
        d, _ = distance_points_segments_np(poly.vertices[idx], a, b)
        d[np.arange(len(idx)), idx] = np.inf
        d[np.arange(len(idx)), poly._prev[idx]] = np.inf
        out[idx] = d.min(axis=1)
    return out


def at_disk_radii(poly: Polygon) -> np.ndarray:
    L = poly.edge_lengths()
    r = 0.25 * np.minimum(L, L[poly._prev])
    return np.minimum(r, 0.45 * _vertex_clearance(poly))


class _Grid:
    def __init__(self, cell: float):
        self.cell = cell
        self.cells: dict[tuple[int, int], set[int]] = {}

    def _range(self, d: Disk):
        c = self.cell
        return (
            int(math.floor((d.x - d.r) / c)),
            int(math.floor((d.x + d.r) / c)),
            int(math.floor((d.y - d.r) / c)),
            int(math.floor((d.y + d.r) / c)),
        )

    def add(self, i: int, d: Disk):
        i0, i1, j0, j1 = self._range(d)
        for a in range(i0, i1 + 1):
            for b in range(j0, j1 + 1):
                self.cells.setdefault((a, b), set()).add(i)

    def remove(self, i: int, d: Disk):
        i0, i1, j0, j1 = self._range(d)
        for a in range(i0, i1 + 1):
            for b in range(j0, j1 + 1):
                self.cells[(a, b)].discard(i)

    def query(self, d: Disk) -> set[int]:
        out: set[int] = set()
        i0, i1, j0, j1 = self._range(d)
        for a in range(i0, i1 + 1):
            for b in range(j0, j1 + 1):
                out |= self.cells.get((a, b), set())
        return out


def _incident(p, q, poly: Polygon) -> bool:
    """True when two parents touch at a P-vertex."""
    if p[0] == "v" and q[0] == "v":
        return False
    if p[0] == "v":
        p, q = q, p
    if q[0] == "v":
        return q[1] in (p[1], poly.next(p[1]))
    a, b = p[1], q[1]
    return poly.next(a) == b or poly.next(b) == a


def cover_boundary(
    poly: Polygon,
    mode: str = "adaptive",
    lstar: float | None = None,
    separation: float = 1.0,
    grading: float | None = 0.25,
    max_radius: float | None = None,
) -> BoundaryDiskSet:
    """Cover the boundary with at-disks (P-vertices) and on-disks (P-edges).

    ``uniform`` tiles each edge with disks of diameter ``lstar/2`` (default:
    shortest edge) plus one remainder disk; ``adaptive`` starts from two end
    disks and one middle disk per edge and bisects middle disks while they
    come closer than ``separation`` times the radius sum to a disk of a
    non-incident parent, or while their radius exceeds the end radius plus
    ``grading`` times the distance to the nearer edge end.  ``max_radius``
    caps every adaptive disk.
    """
    L = poly.edge_lengths()
    tiny = 10.0 * EPS * max(poly.diagonal, 1e-300)
    if np.any(L < tiny):
        raise DegeneratePolygon("zero-length P-edge")
    out = BoundaryDiskSet()
    V = poly.vertices
    if mode == "uniform":
        lstar = float(L.min()) if lstar is None else float(lstar)
        per_edge = [_uniform_spans(float(L[k]), lstar, 1e-9 * poly.diagonal) for k in range(poly.n)]
        r_at = np.minimum(np.minimum(0.25 * lstar, 0.25 * np.minimum(L, L[poly._prev])), 0.45 * _vertex_clearance(poly))
        for v in range(poly.n):
            out.add(Disk(float(V[v, 0]), float(V[v, 1]), float(r_at[v])), ("v", v))
        for k in range(poly.n):
            p, q = poly.edge(k)
            for d in _place_on_edge(p, q, per_edge[k]):
                out.add(d, ("e", k))
        return out
    if mode != "adaptive":
        raise ValueError(f"unknown covering mode {mode!r}")
    r_at = at_disk_radii(poly)
    if max_radius is not None:
        if not max_radius > 0:
            raise ValueError("max_radius must be positive")
        r_at = np.minimum(r_at, max_radius)
    for v in range(poly.n):
        out.add(Disk(float(V[v, 0]), float(V[v, 1]), float(r_at[v])), ("v", v))
    spans_mid: list[tuple[int, float, float]] = []
    fixed_spans: dict[int, list[tuple[float, float]]] = {}
    for k in range(poly.n):
        ra, rb = float(r_at[k]), float(r_at[poly.next(k)])
        Lk = float(L[k])
        fixed_spans[k] = [(0.0, 2.0 * ra), (Lk - 2.0 * rb, Lk)]
        if Lk - 2.0 * rb - 2.0 * ra > tiny:
            spans_mid.append((k, 2.0 * ra, Lk - 2.0 * rb))
    cell = max(2.0 * float(np.median(r_at)), tiny)
    grid = _Grid(cell)
    disks: list[Disk | None] = list(out.disks)
    parents: list[Hashable] = list(out.parents)
    spans: list[tuple[int, float, float] | None] = [None] * len(disks)

    def push(d, par, span):
        disks.append(d)
        parents.append(par)
        spans.append(span)
        grid.add(len(disks) - 1, d)
        return len(disks) - 1

    for i, d in enumerate(disks):
        grid.add(i, d)
    for k in range(poly.n):
        p, q = poly.edge(k)
        for d in _place_on_edge(p, q, fixed_spans[k]):
            push(d, ("e", k), None)
    work = []
    for k, s0, s1 in spans_mid:
        p, q = poly.edge(k)
        d = _place_on_edge(p, q, [(s0, s1)])[0]
        i = push(d, ("e", k), (k, s0, s1))
        heapq.heappush(work, (-d.r, i))
    min_r = max(1e-3 * float(np.min(r_at)), tiny)
    forced: set[int] = set()
    while work:
        _, i = heapq.heappop(work)
        d = disks[i]
        if d is None:
            continue
        par = parents[i]
        hit = i in forced
        for j in grid.query(Disk(d.x, d.y, d.r * separation)):
            dj = disks[j]
            if hit:
                break
            if j == i or dj is None or parents[j] == par:
                continue
            dc = math.hypot(d.x - dj.x, d.y - dj.y)
            if dc + d.r <= dj.r + tiny and spans[j] is not None:
                # nested in a larger middle disk: that one has to shrink
                forced.add(j)
                heapq.heappush(work, (-dj.r, j))
                heapq.heappush(work, (-d.r, i))
                continue
            if dc + dj.r <= d.r + tiny:
                hit = True
            elif not _incident(par, parents[j], poly) and dc < separation * (d.r + dj.r) - tiny:
                hit = True
        k, s0, s1 = spans[i]
        if not hit and max_radius is not None:
            hit = d.r > max_radius
        if not hit and grading is not None:
            Lk = float(L[k])
            lim = min(r_at[k] + grading * s0, r_at[poly.next(k)] + grading * (Lk - s1))
            hit = d.r > lim
        if not hit or d.r <= min_r:
            continue
        grid.remove(i, d)
        disks[i] = None
        m = 0.5 * (s0 + s1)
        p, q = poly.edge(k)
        for a, b in ((s0, m), (m, s1)):
            nd = _place_on_edge(p, q, [(a, b)])[0]
            heapq.heappush(work, (-nd.r, push(nd, ("e", k), (k, a, b))))
    res = BoundaryDiskSet()
    for v in range(poly.n):
        res.add(disks[v], ("v", v))
    per_edge: dict[int, list[tuple[float, Disk]]] = {}
    for i in range(poly.n, len(disks)):
        d = disks[i]
        if d is None:
            continue
        k = parents[i][1]
        p = V[k]
        per_edge.setdefault(k, []).append(((d.x - p[0]) ** 2 + (d.y - p[1]) ** 2, d))
    for k in range(poly.n):
        for _, d in sorted(per_edge.get(k, []), key=lambda t: t[0]):
            res.add(d, ("e", k))
    return res
