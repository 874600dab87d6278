"""Voronoi diagram of ellipses inside a polygon, carried by disks.

Each ellipse is replaced by an odd chain of inscribed disks stacked along
its vertical axis; the chain joins the disk diagram of the boundary cover
and the ellipse-level diagram is read off by contracting every Voronoi
edge whose two disks share a parent.  Exact vertex coordinates come from a
footprint/circumcircle fixed point and V-edges are traced point by point.
"""
from __future__ import annotations

import heapq
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import shapely

from .apollonius import N_SENTINEL, VDStructure, VVertex, brio_order
from .errors import InvalidErrorBound, NoConvergence, NoInteriorVertex, OverlapViolation, TraceStall
from .geom import Disk, Ellipse, circumcircle, closest_point_segment, ellipse_footprint, footprint_disk
from .polygon import BoundaryDiskSet, Polygon, cover_boundary
from .svg import SvgCanvas

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# in-disk approximation


@dataclass
class InDiskSet:
    parent: Ellipse
    disks: list[Disk]
    eps0: float

    def __len__(self) -> int:
        return len(self.disks)


def _inscribed_radius(e: Ellipse, s: float) -> float:
    """Radius of the largest disk inside ``e`` centred at height ``s`` on its vertical axis."""
    a, b = e.a, e.b
    c2 = b * b - a * a
    if c2 <= 0.0:
        return a - abs(s)
    if abs(s) <= c2 / b:
        return a * math.sqrt(max(0.0, 1.0 - s * s / c2))
    return b - abs(s)


def _half_width(e: Ellipse, y):
    return e.a * np.sqrt(np.clip(1.0 - (y / e.b) ** 2, 0.0, None))


def _union_width(y, centers, radii):
    w = np.zeros_like(y)
    for s, r in zip(centers, radii):
        w = np.maximum(w, np.sqrt(np.clip(r * r - (y - s) ** 2, 0.0, None)))
    return w


def _max_gap(e: Ellipse, lo: float, hi: float, centers, radii, n: int = 129) -> float:
    y = np.linspace(lo, hi, n)
    g = _half_width(e, y) - _union_width(y, centers, radii)
    k = int(np.argmax(g))
    a, b = y[max(k - 1, 0)], y[min(k + 1, n - 1)]
    y = np.linspace(a, b, 33)
    g2 = _half_width(e, y) - _union_width(y, centers, radii)
    return float(max(g.max(), g2.max()))


def approximate_ellipse(e: Ellipse, eps0: float) -> InDiskSet:
    """Odd chain of inscribed disks whose horizontal deviation from ``e`` stays within ``eps0``."""
    if not (eps0 > 0 and math.isfinite(eps0)):
        raise InvalidErrorBound(f"error bound must be positive, got {eps0!r}")
    if e.a > e.b * (1.0 + 1e-12):
        raise ValueError("in-disk chains need b >= a")
    a, b = e.a, min(e.a, e.b) if e.a >= e.b else e.b
    if b - a <= 1e-12 * b:
        return InDiskSet(e, [Disk(e.cx, e.cy, a)], eps0)
    local = Ellipse(0.0, 0.0, a, b)
    c2 = b * b - a * a
    s_end = c2 / b * (1.0 - 1e-9)

    def touch(s):
        # height where the disk centred at s touches the ellipse
        return min(s * b * b / c2, b)

    target = 0.95 * eps0
    centers, radii = [0.0], [a]
    while True:
        s0 = centers[-1]
        y0 = touch(s0)
        if _max_gap(local, y0, b, centers[-2:], radii[-2:]) <= target:
            break

        def ok(s):
            cs, rs = centers[-2:] + [s], radii[-2:] + [_inscribed_radius(local, s)]
            return _max_gap(local, y0, touch(s), cs, rs) <= target

        if ok(s_end):
            s = s_end
        else:
            lo, hi = s0, s_end
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if ok(mid):
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-7 * b:
                    break
            s = lo
        if s <= s0 + 1e-9 * b:
            break
        centers.append(s)
        radii.append(_inscribed_radius(local, s))
        if s >= s_end:
            break
    out = [Disk(e.cx, e.cy, a)]
    for s, r in zip(centers[1:], radii[1:]):
        out.append(Disk(e.cx, e.cy + s, r))
        out.append(Disk(e.cx, e.cy - s, r))
    return InDiskSet(e, out, eps0)


# ---------------------------------------------------------------------------
# generators for refinement and tracing


class Generator:
    """Closed set with a footprint (nearest point) map."""

    def footprint(self, x: float, y: float) -> tuple[float, float]:
        raise NotImplementedError

    def distance(self, x: float, y: float) -> float:
        fx, fy = self.footprint(x, y)
        return math.hypot(x - fx, y - fy)


@dataclass(frozen=True)
class PointGen(Generator):
    x: float
    y: float

    def footprint(self, x, y):
        return (self.x, self.y)


@dataclass(frozen=True)
class SegmentGen(Generator):
    p0: tuple
    p1: tuple

    def footprint(self, x, y):
        return closest_point_segment((x, y), (self.p0, self.p1))[0]


@dataclass(frozen=True)
class DiskGen(Generator):
    disk: Disk

    def footprint(self, x, y):
        return footprint_disk((x, y), self.disk)


@dataclass(frozen=True)
class EllipseGen(Generator):
    """Ellipse, optionally dilated by ``offset``."""

    ellipse: Ellipse
    offset: float = 0.0

    def footprint(self, x, y):
        fx, fy = ellipse_footprint((x, y), self.ellipse)
        if self.offset:
            dx, dy = x - fx, y - fy
            n = math.hypot(dx, dy)
            if n > 0.0:
                fx += self.offset * dx / n
                fy += self.offset * dy / n
        return (fx, fy)


def as_generator(g) -> Generator:
    if isinstance(g, Generator):
        return g
    if isinstance(g, Ellipse):
        return EllipseGen(g)
    if isinstance(g, Disk):
        return DiskGen(g)
    g = tuple(g)
    if len(g) == 2 and all(isinstance(c, (tuple, list, np.ndarray)) for c in g):
        return SegmentGen(tuple(g[0]), tuple(g[1]))
    if len(g) == 2:
        return PointGen(float(g[0]), float(g[1]))
    raise TypeError(f"cannot interpret {g!r} as a generator")


def _residual(gens, x, y) -> tuple[float, list[float]]:
    d = [g.distance(x, y) for g in gens]
    return max(abs(d[0] - d[1]), abs(d[0] - d[2])), d


def _newton_step(gens, x, y):
    """Newton step on the two equidistance equations."""
    rows, rhs = [], []
    fp = [g.footprint(x, y) for g in gens]
    d = [math.hypot(x - f[0], y - f[1]) for f in fp]
    if min(d) == 0.0:
        return None
    n = [((x - f[0]) / di, (y - f[1]) / di) for f, di in zip(fp, d)]
    for k in (1, 2):
        rows.append((n[0][0] - n[k][0], n[0][1] - n[k][1]))
        rhs.append(-(d[0] - d[k]))
    det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if abs(det) < 1e-14:
        return None
    dx = (rhs[0] * rows[1][1] - rows[0][1] * rhs[1]) / det
    dy = (rows[0][0] * rhs[1] - rhs[0] * rows[1][0]) / det
    return x + dx, y + dy


@dataclass
class Refined:
    x: float
    y: float
    clearance: float
    residual: float
    iterations: int
    converged: bool


def refine_vvertex(
    start: Sequence[float],
    gens: Sequence,
    scale: float = 1.0,
    max_iter: int = 50,
    fallback: bool = False,
) -> Refined:
    """Equidistant point of three generators by footprint/circumcircle iteration.

    Each round projects the current point onto the three generators and
    moves to the circumcentre of the footprints; a Newton step on the
    equidistance equations is taken instead whenever it lowers the
    residual more.  ``scale`` is the model size that sets the tolerances.
    With ``fallback`` a non-converged run returns the start point flagged
    as not converged instead of raising NoConvergence.
    """
    gens = [as_generator(g) for g in gens]
    if len(gens) != 3:
        raise ValueError("refinement needs exactly three generators")
    x, y = float(start[0]), float(start[1])
    step_tol, res_tol = 1e-10 * scale, 1e-9 * scale
    res, d = _residual(gens, x, y)
    it = 0
    for it in range(1, max_iter + 1):
        fp = [g.footprint(x, y) for g in gens]
        cands = []
        try:
            c = circumcircle(*fp)
            cands.append((c.x, c.y))
        except Exception:
            pass
        nw = _newton_step(gens, x, y)
        if nw is not None:
            cands.append(nw)
        best = None
        for cx, cy in cands:
            if not (math.isfinite(cx) and math.isfinite(cy)):
                continue
            r2, d2 = _residual(gens, cx, cy)
            if best is None or r2 < best[0]:
                best = (r2, d2, cx, cy)
        if best is None:
            break
        step = math.hypot(best[2] - x, best[3] - y)
        res, d, x, y = best[0], best[1], best[2], best[3]
        if step < step_tol and res < res_tol:
            break
        if res < 1e-3 * res_tol:
            break
    if res < res_tol:
        return Refined(x, y, min(d), res, it, True)
    if fallback:
        log.warning("refinement did not converge (residual %.3g); keeping start point", res)
        r0, d0 = _residual(gens, float(start[0]), float(start[1]))
        return Refined(float(start[0]), float(start[1]), min(d0), r0, it, False)
    raise NoConvergence("V-vertex refinement did not converge", point=(x, y), residual=res)


# ---------------------------------------------------------------------------
# V-edge tracing


def _bisector_gap(g1, g2, x, y) -> float:
    return g1.distance(x, y) - g2.distance(x, y)


def _normals(g1, g2, x, y):
    f1, f2 = g1.footprint(x, y), g2.footprint(x, y)
    d1 = math.hypot(x - f1[0], y - f1[1])
    d2 = math.hypot(x - f2[0], y - f2[1])
    if d1 == 0.0 or d2 == 0.0:
        return None
    return ((x - f1[0]) / d1, (y - f1[1]) / d1), ((x - f2[0]) / d2, (y - f2[1]) / d2)


def _correct(g1, g2, x, y, h, tol):
    """Pull a point onto the bisector along the gradient of the distance gap."""
    nn = _normals(g1, g2, x, y)
    if nn is None:
        return None
    (ax, ay), (bx, by) = nn
    gx, gy = ax - bx, ay - by
    gl = math.hypot(gx, gy)
    if gl < 1e-14:
        return None
    gx, gy = gx / gl, gy / gl
    f0 = _bisector_gap(g1, g2, x, y)
    if abs(f0) <= tol:
        return x, y
    # bracket the root along the gradient line, then bisect
    span = max(abs(f0) / gl * 2.0, 1e-3 * h)
    sgn = -1.0 if f0 > 0 else 1.0
    lo, flo = 0.0, f0
    hi = None
    for _ in range(40):
        t = sgn * span
        ft = _bisector_gap(g1, g2, x + t * gx, y + t * gy)
        if (ft > 0) != (flo > 0) or ft == 0.0:
            hi = t
            break
        lo, flo = t, ft
        span *= 2.0
        if span > 4.0 * h + abs(f0) * 4.0:
            break
    if hi is None:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _bisector_gap(g1, g2, x + mid * gx, y + mid * gy)
        if abs(fm) <= tol or abs(hi - lo) < 1e-16 * max(1.0, abs(mid)):
            return x + mid * gx, y + mid * gy
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(_bisector_gap(g1, g2, x + mid * gx, y + mid * gy)) <= tol:
        return x + mid * gx, y + mid * gy
    return None


def trace_vedge(g1, g2, start: Sequence[float], end: Sequence[float], step: float, scale: float = 1.0) -> np.ndarray:
    """Points of the bisector of ``g1`` and ``g2`` from ``start`` to ``end``.

    Tangent predictor plus corrector along the distance-gap gradient;
    steps that fail to correct are halved, and TraceStall is raised once a
    step would drop below ``1e-6*step``.
    """
    g1, g2 = as_generator(g1), as_generator(g2)
    if step <= 0:
        raise ValueError("step must be positive")
    tol = 1e-9 * scale
    sx, sy = float(start[0]), float(start[1])
    ex, ey = float(end[0]), float(end[1])
    pts = [(sx, sy)]
    x, y = sx, sy
    guard = 0
    limit = 20 * int(math.hypot(ex - sx, ey - sy) / step + 10)
    while math.hypot(ex - x, ey - y) > step:
        guard += 1
        if guard > limit:
            raise TraceStall("trace did not reach the end vertex")
        nn = _normals(g1, g2, x, y)
        if nn is None:
            raise TraceStall("trace point touches a generator")
        (ax, ay), (bx, by) = nn
        tx, ty = -(ay - by), ax - bx
        tl = math.hypot(tx, ty)
        if tl < 1e-14:
            tx, ty, tl = ex - x, ey - y, math.hypot(ex - x, ey - y)
        tx, ty = tx / tl, ty / tl
        if tx * (ex - x) + ty * (ey - y) < 0:
            tx, ty = -tx, -ty
        h = step
        while True:
            q = _correct(g1, g2, x + 0.9 * h * tx, y + 0.9 * h * ty, h, tol)
            if q is not None:
                moved = math.hypot(q[0] - x, q[1] - y)
                ahead = (q[0] - x) * (ex - x) + (q[1] - y) * (ey - y) > 0
                if 0 < moved <= step and ahead:
                    break
            h *= 0.5
            if h < 1e-6 * step:
                raise TraceStall(f"corrector failed near ({x:.6g}, {y:.6g})")
        x, y = q
        pts.append((x, y))
    pts.append((ex, ey))
    return np.array(pts)


# ---------------------------------------------------------------------------
# dual diagram


def _entity_generator(poly: Polygon, parent, ellipses: list[Ellipse], offset: float) -> Generator:
    kind, k = parent
    if kind == "v":
        p = poly.vertices[k]
        return PointGen(float(p[0]), float(p[1]))
    if kind == "e":
        p, q = poly.edge(k)
        return SegmentGen((float(p[0]), float(p[1])), (float(q[0]), float(q[1])))
    return EllipseGen(ellipses[k], offset)


@dataclass(frozen=True)
class EntityVertex:
    face: int
    x: float
    y: float
    clearance: float
    entities: tuple


@dataclass(frozen=True)
class EntityEdge:
    entities: tuple
    ends: tuple
    faces: tuple


@dataclass
class DualVD:
    """Disk-level diagram of the boundary cover plus in-disks, with its entity-level contraction.

    In-disks are dilated by ``offset`` before insertion, so clearances are
    measured to the ellipses grown by that margin.
    """

    poly: Polygon
    cover: BoundaryDiskSet
    eps0: float
    offset: float = 0.0
    vd: VDStructure = field(init=False)
    ellipses: list[Ellipse] = field(default_factory=list, init=False)
    in_disks: list[InDiskSet] = field(default_factory=list, init=False)
    _heap: list = field(default_factory=list, init=False, repr=False)
    _by_parent: dict = field(default_factory=lambda: defaultdict(list), init=False, repr=False)
    _arr: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        arr = self.cover.as_array()
        bbox = (
            float((arr[:, 0] - arr[:, 2]).min()),
            float((arr[:, 1] - arr[:, 2]).min()),
            float((arr[:, 0] + arr[:, 2]).max()),
            float((arr[:, 1] + arr[:, 2]).max()),
        )
        self.vd = VDStructure(bbox)
        order = brio_order(arr[:, :2])
        for i in order:
            d, par = self.cover.disks[i], self.cover.parents[i]
            gid = self.vd.insert(d, par)
            self._by_parent[par].append(gid)
        self.scale = self.poly.diagonal
        self._shape = self.poly._shapes()[0]
        self._push(list(self.vd.faces()))

    # -- probe bookkeeping ---------------------------------------------------

    def _push(self, faces) -> None:
        vd = self.vd
        keep = [f for f in faces if f.alive and vd.is_finite_face(f) and f.t > 0.0 and math.isfinite(f.t)]
        if not keep:
            return
        xy = np.array([(f.x, f.y) for f in keep])
        inside = shapely.contains_xy(self._shape, xy[:, 0], xy[:, 1])
        for f, ok in zip(keep, inside):
            if ok:
                heapq.heappush(self._heap, (-f.t, f.id))

    def max_clearance_probe(self):
        """Interior V-vertex of largest clearance as ``(VVertex, radius)``; ties by lowest id."""
        while self._heap:
            t, fid = self._heap[0]
            f = self.vd.face(fid)
            if f is None or not f.alive:
                heapq.heappop(self._heap)
                continue
            c = self.clearance(f.x, f.y)
            if c < -t - 1e-9 * self.scale:
                # the stored circle is not empty (near-degenerate disk
                # triple); requeue with the clearance actually available
                heapq.heapreplace(self._heap, (-c, fid))
                continue
            v = VVertex(f.id, f.x, f.y, min(c, -t), tuple(s - N_SENTINEL for s in f.v))
            return v, min(c, -t)
        raise NoInteriorVertex("no Voronoi vertex inside the polygon")

    def clearance(self, x: float, y: float) -> float:
        """Exact distance from a point to the nearest disk of the diagram."""
        if self._arr is None or len(self._arr) != len(self.vd):
            vd = self.vd
            self._arr = np.column_stack([vd._sx[N_SENTINEL:], vd._sy[N_SENTINEL:], vd._sr[N_SENTINEL:]])
        a = self._arr
        return float((np.hypot(a[:, 0] - x, a[:, 1] - y) - a[:, 2]).min())

    # -- insertion -------------------------------------------------------------

    def _check_overlap(self, d: Disk) -> None:
        tol = 1e-9 * self.scale
        near = self.vd.locate((d.x, d.y))
        cand = {near}
        for f in self.vd.cell(near):
            cand.update(s - N_SENTINEL for s in f.v if s >= N_SENTINEL)
        for g in cand:
            o = self.vd.disk(g)
            if math.hypot(o.x - d.x, o.y - d.y) < o.r + d.r - tol:
                raise OverlapViolation(f"in-disk {tuple(d)} intersects disk {g} of {self.vd.parent(g)}")

    def fits(self, e: Ellipse, chain: InDiskSet | None = None) -> bool:
        """Whether ``insert_ellipse`` would accept ``e``; leaves the diagram untouched."""
        chain = approximate_ellipse(e, self.eps0) if chain is None else chain
        c = np.array([[d.x, d.y] for d in chain.disks])
        r = np.array([d.r for d in chain.disks]) + self.offset
        if not self.poly.contains(c).all():
            return False
        self.clearance(e.cx, e.cy)
        a = self._arr
        gap = np.hypot(c[:, :1] - a[None, :, 0], c[:, 1:] - a[None, :, 1]) - a[None, :, 2] - r[:, None]
        return bool(gap.min(initial=np.inf) >= -1e-9 * self.scale)

    def insert_ellipse(self, e: Ellipse, reverse: bool = False, chain: InDiskSet | None = None) -> int:
        """Insert an ellipse through its in-disks; returns its entity index."""
        k = len(self.ellipses)
        chain = approximate_ellipse(e, self.eps0) if chain is None else chain
        grown = [Disk(d.x, d.y, d.r + self.offset) for d in chain.disks]
        for d in grown:
            if not bool(self.poly.contains(np.array([[d.x, d.y]]))[0]):
                raise OverlapViolation(f"in-disk centre {d.x, d.y} lies outside the polygon")
            self._check_overlap(d)
        par = ("E", k)
        self.ellipses.append(e)
        self.in_disks.append(chain)
        for d in (grown[::-1] if reverse else grown):
            gid = self.vd.insert(d, par)
            self._by_parent[par].append(gid)
            self._push(self.vd._last_new_faces)
        return k

    # -- entity level ------------------------------------------------------------

    @property
    def entities(self) -> list:
        return list(self._by_parent)

    def generator(self, entity) -> Generator:
        return _entity_generator(self.poly, entity, self.ellipses, self.offset)

    def entity_vertices(self, inside: bool = True) -> list[EntityVertex]:
        out = []
        for f in self.vd.faces():
            if not self.vd.is_finite_face(f):
                continue
            ents = {self.vd.parents[s] for s in f.v}
            if len(ents) < 3:
                continue
            if inside and not bool(self.poly.contains(np.array([[f.x, f.y]]))[0]):
                continue
            out.append(EntityVertex(f.id, f.x, f.y, f.t, tuple(sorted(ents, key=repr))))
        out.sort(key=lambda v: v.face)
        return out

    def entity_edges(self) -> list[EntityEdge]:
        """Disk-level edge chains between two distinct entities, contracted to one edge each."""
        vd = self.vd
        adj = defaultdict(list)
        pairs = {}
        for e in vd.edges():
            if e.unbounded:
                continue
            pa, pb = vd.parent(e.sites[0]), vd.parent(e.sites[1])
            if pa == pb:
                continue
            key = tuple(sorted((pa, pb), key=repr))
            f, g = e.faces
            adj[(key, f)].append(g)
            adj[(key, g)].append(f)
            pairs.setdefault(key, set()).update((f, g))
        is_vertex = {}
        for f in vd.faces():
            if vd.is_finite_face(f):
                is_vertex[f.id] = len({vd.parents[s] for s in f.v}) >= 3
        out = []
        for key in sorted(pairs, key=repr):
            seen = set()
            for f0 in sorted(pairs[key]):
                if f0 in seen:
                    continue
                comp, stack = [], [f0]
                seen.add(f0)
                while stack:
                    f = stack.pop()
                    comp.append(f)
                    for g in adj[(key, f)]:
                        if g not in seen:
                            seen.add(g)
                            stack.append(g)
                ends = tuple(sorted(f for f in comp if is_vertex.get(f, False)))
                out.append(EntityEdge(key, ends, tuple(sorted(comp))))
        return out

    def topology_signature(self, inside: bool = True) -> Counter:
        """Multiset of entity triples at the entity-level vertices."""
        return Counter(v.entities for v in self.entity_vertices(inside))

    def refine(self, v: EntityVertex, fallback: bool = True) -> Refined:
        gens = [self.generator(p) for p in v.entities[:3]]
        return refine_vvertex((v.x, v.y), gens, self.scale, fallback=fallback)

    # -- output --------------------------------------------------------------------

    def to_svg(self, path=None, probes: Sequence = ()) -> str:
        x0, y0, x1, y1 = self.poly.bbox
        m = 0.05 * max(x1 - x0, y1 - y0)
        c = SvgCanvas((x0 - m, y0 - m, x1 + m, y1 + m))
        for lp in self.poly.loops:
            c.polyline("polygon", lp, stroke="black", closed=True)
        for d in self.cover.disks:
            c.circle("disks", d.x, d.y, d.r, stroke="#1f77b4")
        for e in self.vd.edges():
            if e.unbounded or self.vd.parent(e.sites[0]) == self.vd.parent(e.sites[1]):
                continue
            f, g = self.vd.face(e.faces[0]), self.vd.face(e.faces[1])
            c.polyline("vd-edges", [(f.x, f.y), (g.x, g.y)], stroke="#d62728")
        for px, py, r in probes:
            c.circle("probes", px, py, r, stroke="#ff7f0e")
        for ch in self.in_disks:
            for d in ch.disks:
                c.circle("in-disks", d.x, d.y, d.r, stroke="#9467bd")
        for e in self.ellipses:
            c.ellipse("ellipses", e.cx, e.cy, e.a, e.b, stroke="black", fill="#cccccc")
        text = c.render()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def build_dual(poly: Polygon, eps0: float, offset: float = 0.0, cover: BoundaryDiskSet | None = None) -> DualVD:
    if not (eps0 > 0):
        raise InvalidErrorBound(f"error bound must be positive, got {eps0!r}")
    if cover is None:
        cover = cover_boundary(poly)
    return DualVD(poly, cover, eps0, offset)
