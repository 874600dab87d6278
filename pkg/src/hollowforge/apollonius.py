"""Incremental Voronoi diagram of circular disks (additively weighted).

The diagram is stored through its dual: every face of a triangulated
sphere is a Voronoi vertex (the empty circle tangent to its three sites),
every dual edge is a Voronoi edge and every site owns one Voronoi cell.
Three far-away point sentinels plus one symbolic vertex at infinity close
the sphere, so real sites never touch the infinite faces and the usual
dimension-one special cases disappear.

Insertion grows the conflict region from the face nearest to the new site
and lets topology decide when predicates disagree: a face is only added if
the region stays a tree (no cycles, no swallowed cells).  Voronoi edges
whose two endpoints are in conflict but whose middle survives get a
temporary degree-2 vertex, so the retriangulated star stays valid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from .bezier import RationalBezier, bisector_arc
from .errors import ContainedDisk
from .geom import Disk

log = logging.getLogger(__name__)

INF = -1
N_SENTINEL = 3
_BOGUS_BASE = -10


class Face:
    __slots__ = ("v", "n", "id", "x", "y", "t", "alive")

    def __init__(self, fid: int, v0: int, v1: int, v2: int):
        self.v = [v0, v1, v2]
        self.n: list = [None, None, None]
        self.id = fid
        self.x = self.y = self.t = math.nan
        self.alive = True

    def index(self, s: int) -> int:
        v = self.v
        return 0 if v[0] == s else (1 if v[1] == s else 2)

    def __repr__(self):
        return f"Face({self.id}, {self.v})"


@dataclass(frozen=True)
class VVertex:
    id: int
    x: float
    y: float
    clearance: float
    sites: tuple[int, int, int]


@dataclass(frozen=True)
class VEdge:
    sites: tuple[int, int]
    faces: tuple[int, int]
    unbounded: bool


# ---------------------------------------------------------------------------
# predicates


def apollonius_roots(ax, ay, ar, bx, by, br, cx, cy, cr):
    """All circles externally tangent (additive distance) to three disks.

    Returns a list of ``(x, y, t)`` with ``t`` the common signed distance.
    """
    px2, py2, w2 = bx - ax, by - ay, br - ar
    px3, py3, w3 = cx - ax, cy - ay, cr - ar
    h2 = 0.5 * (px2 * px2 + py2 * py2 - w2 * w2)
    h3 = 0.5 * (px3 * px3 + py3 * py3 - w3 * w3)
    nx = py2 * w3 - w2 * py3
    ny = w2 * px3 - px2 * w3
    nt = px2 * py3 - py2 * px3
    nn = math.sqrt(nx * nx + ny * ny + nt * nt)
    if nn == 0.0:
        return []
    nx /= nn
    ny /= nn
    nt /= nn
    g22 = px2 * px2 + py2 * py2 + w2 * w2
    g23 = px2 * px3 + py2 * py3 + w2 * w3
    g33 = px3 * px3 + py3 * py3 + w3 * w3
    det = g22 * g33 - g23 * g23
    if det == 0.0:
        return []
    al = (h2 * g33 - h3 * g23) / det
    be = (h3 * g22 - h2 * g23) / det
    sx = al * px2 + be * px3
    sy = al * py2 + be * py3
    st = al * w2 + be * w3
    qa = nx * nx + ny * ny - nt * nt
    qb = sx * nx + sy * ny - st * nt
    qc = sx * sx + sy * sy - st * st
    scale = sx * sx + sy * sy + st * st
    disc = qb * qb - qa * qc
    if disc < 0.0:
        if disc > -1e-12 * max(qb * qb, abs(qa * qc), 1e-300):
            disc = 0.0
        else:
            return []
    sd = math.sqrt(disc)
    lams = []
    if abs(qa) <= 1e-14:
        if qb != 0.0:
            lams.append(-qc / (2.0 * qb))
    else:
        q = -(qb + math.copysign(sd, qb)) if qb != 0.0 else sd
        if q != 0.0:
            lams.append(q / qa)
            lams.append(qc / q)
        else:
            lams.append(0.0)
    out = []
    tol = 1e-12 * math.sqrt(max(scale, 1e-300))
    rmin = min(ar, br, cr)
    for lam in lams:
        T = st + lam * nt
        t = T - ar
        if t < -rmin - tol:
            continue
        out.append((ax + sx + lam * nx, ay + sy + lam * ny, t))
    return out


def _unit_orient(x, y, ax, ay, bx, by, cx, cy):
    ux, uy = ax - x, ay - y
    vx, vy = bx - x, by - y
    wx, wy = cx - x, cy - y
    lu = math.hypot(ux, uy) or 1.0
    lv = math.hypot(vx, vy) or 1.0
    lw = math.hypot(wx, wy) or 1.0
    ux, uy, vx, vy, wx, wy = ux / lu, uy / lu, vx / lv, vy / lv, wx / lw, wy / lw
    return (vx - ux) * (wy - uy) - (vy - uy) * (wx - ux)


def apollonius_vertex(a: Sequence[float], b: Sequence[float], c: Sequence[float]):
    """Tangent circle of the counter-clockwise site triple (a, b, c), or None."""
    roots = apollonius_roots(a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2])
    best = None
    best_o = -math.inf
    for x, y, t in roots:
        o = _unit_orient(x, y, a[0], a[1], b[0], b[1], c[0], c[1])
        if o > best_o:
            best, best_o = (x, y, t), o
    return best


def bisector_point(ax, ay, ar, bx, by, br, yy):
    """Point of the (a, b) bisector whose coordinate across the center line is ``yy``."""
    dx, dy = bx - ax, by - ay
    D = math.hypot(dx, dy)
    ex, ey = dx / D, dy / D
    nx, ny = -ey, ex
    k = ar - br
    if k == 0.0:
        s = 0.5 * D
    else:
        B2 = 0.25 * (D * D - k * k)
        s = 0.5 * D + math.copysign(0.5 * abs(k) * math.sqrt(1.0 + yy * yy / B2), k)
    return ax + s * ex + yy * nx, ay + s * ey + yy * ny


def bisector_coord(ax, ay, bx, by, px, py) -> float:
    dx, dy = bx - ax, by - ay
    D = math.hypot(dx, dy)
    return ((px - ax) * -dy + (py - ay) * dx) / D


# ---------------------------------------------------------------------------


class VDStructure:
    """Voronoi diagram of disks with incremental insertion.

    ``bbox`` (xmin, ymin, xmax, ymax) sets the working region; sites far
    outside it trigger a transparent rebuild with wider sentinels.
    """

    def __init__(self, bbox: Sequence[float] | None = None):
        if bbox is None:
            bbox = (-1.0, -1.0, 1.0, 1.0)
        self.generation = 0
        self._faces: dict[int, Face] = {}
        self._next_fid = 0
        self._sx: list[float] = []
        self._sy: list[float] = []
        self._sr: list[float] = []
        self.parents: list[Hashable] = []
        self._site_face: list[Face | None] = []
        self._last_new_faces: list[Face] = []
        self._last_dead: list[int] = []
        self._hint = N_SENTINEL
        self._setup(bbox)

    # -- setup -------------------------------------------------------------

    def _setup(self, bbox):
        x0, y0, x1, y1 = bbox
        self.bbox = (float(x0), float(y0), float(x1), float(y1))
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        L = max(x1 - x0, y1 - y0, 1e-9)
        self._center = (cx, cy)
        self._scale = L
        self._safe = 8.0 * L
        R = 200.0 * L
        for k in range(N_SENTINEL):
            ang = math.pi / 2 + 2 * math.pi * k / 3
            self._add_site(cx + R * math.cos(ang), cy + R * math.sin(ang), 0.0, None)
        f0 = self._new_face(0, 1, 2)
        i0 = self._new_face(1, 0, INF)
        i1 = self._new_face(2, 1, INF)
        i2 = self._new_face(0, 2, INF)
        f0.n = [i1, i2, i0]
        i1.n[2] = f0
        i2.n[2] = f0
        i0.n[2] = f0
        i0.n[0], i2.n[1] = i2, i0
        i0.n[1], i1.n[0] = i1, i0
        i1.n[1], i2.n[0] = i2, i1
        for s, f in ((0, f0), (1, f0), (2, f0)):
            self._site_face[s] = f
        self._geometry(f0)

    def _add_site(self, x, y, r, parent) -> int:
        self._sx.append(float(x))
        self._sy.append(float(y))
        self._sr.append(float(r))
        self.parents.append(parent)
        self._site_face.append(None)
        return len(self._sx) - 1

    def _new_face(self, v0, v1, v2) -> Face:
        f = Face(self._next_fid, v0, v1, v2)
        self._next_fid += 1
        self._faces[f.id] = f
        return f

    def _kill(self, f: Face):
        f.alive = False
        self._faces.pop(f.id, None)

    # -- public data -------------------------------------------------------

    def __len__(self) -> int:
        return len(self._sx) - N_SENTINEL

    @property
    def disks(self) -> list[Disk]:
        return [Disk(self._sx[i], self._sy[i], self._sr[i]) for i in range(N_SENTINEL, len(self._sx))]

    def disk(self, gid: int) -> Disk:
        i = gid + N_SENTINEL
        return Disk(self._sx[i], self._sy[i], self._sr[i])

    def parent(self, gid: int):
        return self.parents[gid + N_SENTINEL]

    def _site(self, s: int):
        return (self._sx[s], self._sy[s], self._sr[s])

    @staticmethod
    def is_real(s: int) -> bool:
        return s >= N_SENTINEL

    # -- geometry ----------------------------------------------------------

    def _geometry(self, f: Face) -> None:
        v = f.v
        if INF in v or v[0] < 0 or v[1] < 0 or v[2] < 0:
            f.x = f.y = f.t = math.nan
            return
        res = apollonius_vertex(self._site(v[0]), self._site(v[1]), self._site(v[2]))
        if res is None:
            # degenerate triple: fall back to the weighted centroid so the
            # vertex stays usable; topology already decided it exists
            xs = [self._sx[s] for s in v]
            ys = [self._sy[s] for s in v]
            x, y = sum(xs) / 3.0, sum(ys) / 3.0
            t = min(math.hypot(x - self._sx[s], y - self._sy[s]) - self._sr[s] for s in v)
            res = (x, y, t)
        f.x, f.y, f.t = res

    def _conflict_value(self, f: Face, qx, qy, qr) -> float:
        if not f.alive:
            return math.inf
        v = f.v
        if INF in v:
            return math.inf
        if math.isnan(f.t):
            self._geometry(f)
        return math.hypot(qx - f.x, qy - f.y) - qr - f.t

    # -- topology helpers --------------------------------------------------

    @staticmethod
    def _mirror(f: Face, i: int) -> int:
        g = f.n[i]
        a, b = f.v[(i + 1) % 3], f.v[(i + 2) % 3]
        for j in range(3):
            if g.n[j] is f and g.v[(j + 1) % 3] == b and g.v[(j + 2) % 3] == a:
                return j
        raise RuntimeError("inconsistent adjacency")

    def faces_around(self, s: int) -> Iterator[Face]:
        """Faces incident to internal site ``s`` in counter-clockwise order."""
        start = self._site_face[s]
        f = start
        guard = 0
        while True:
            yield f
            k = f.index(s)
            f = f.n[(k + 1) % 3]
            guard += 1
            if f is start or guard > 100000:
                break

    def neighbors_of(self, s: int) -> list[int]:
        out = []
        for f in self.faces_around(s):
            k = f.index(s)
            out.append(f.v[(k + 1) % 3])
        return out

    # -- point location ----------------------------------------------------

    def _dist(self, s, px, py) -> float:
        return math.hypot(px - self._sx[s], py - self._sy[s]) - self._sr[s]

    def _nearest(self, px, py, start: int | None = None) -> int:
        s = self._hint if start is None else start
        if s >= len(self._sx) or self._site_face[s] is None:
            s = N_SENTINEL if len(self._sx) > N_SENTINEL else 0
        best = (self._dist(s, px, py), s)
        while True:
            cur = best
            for w in self.neighbors_of(best[1]):
                if w < 0:
                    continue
                d = (self._dist(w, px, py), w)
                if d < cur:
                    cur = d
            if cur == best:
                return best[1]
            best = cur

    def locate(self, p: Sequence[float]) -> int:
        """Generator id minimizing ``|p - center| - radius`` (ties: lowest id)."""
        if len(self) == 0:
            raise ValueError("empty diagram")
        s = self._nearest(float(p[0]), float(p[1]))
        self._hint = s
        return s - N_SENTINEL

    # -- insertion ---------------------------------------------------------

    def insert(self, d: Sequence[float], parent: Hashable = None) -> int:
        """Insert disk ``(x, y, r)``; returns its generator id."""
        x, y, r = float(d[0]), float(d[1]), float(d[2])
        cx, cy = self._center
        if max(abs(x - cx), abs(y - cy)) + r > self._safe:
            self._rebuild_wider(x, y, r)
        if len(self._sx) == N_SENTINEL:
            near = None
        else:
            near = self._nearest(x, y)
            nx_, ny_, nr = self._site(near)
            dc = math.hypot(x - nx_, y - ny_)
            if dc + r <= nr or dc + nr <= r:
                raise ContainedDisk(f"disk {(x, y, r)} and generator {near - N_SENTINEL} are nested")
        q = self._add_site(x, y, r, parent)
        try:
            self._insert_site(q, near)
        except Exception:
            self._sx.pop()
            self._sy.pop()
            self._sr.pop()
            self.parents.pop()
            self._site_face.pop()
            raise
        self._hint = q
        self.generation += 1
        return q - N_SENTINEL

    def _rebuild_wider(self, x, y, r):
        sites = [(self._sx[i], self._sy[i], self._sr[i], self.parents[i]) for i in range(N_SENTINEL, len(self._sx))]
        xs = [s[0] - s[2] for s in sites] + [x - r]
        ys = [s[1] - s[2] for s in sites] + [y - r]
        xe = [s[0] + s[2] for s in sites] + [x + r]
        ye = [s[1] + s[2] for s in sites] + [y + r]
        bbox = (min(xs), min(ys), max(xe), max(ye))
        log.debug("rebuilding disk diagram with bbox %s", bbox)
        gen = self.generation
        self.__init__(bbox)
        for sx, sy, sr, par in sites:
            self.insert((sx, sy, sr), par)
        self.generation = gen + 1

    def _seed(self, q, near):
        qx, qy, qr = self._site(q)
        if near is None:
            cands = list(self._faces.values())
        else:
            cands = list(self.faces_around(near))
        best, bv = None, math.inf
        for f in cands:
            val = self._conflict_value(f, qx, qy, qr)
            if val < bv:
                best, bv = f, val
        return best, bv, cands

    def _edge_split(self, f: Face, i: int, q: int, both: bool) -> bool:
        """Conflict structure of the Voronoi edge dual to (f, i).

        both=True: endpoints are in conflict; returns True when the middle of
        the edge survives (the edge must be split).  both=False: endpoints
        are not in conflict; returns True when the interior is in conflict.
        """
        g = f.n[i]
        a, b = f.v[(i + 1) % 3], f.v[(i + 2) % 3]
        if a < 0 or b < 0 or INF in f.v or INF in g.v:
            return False
        ax, ay, ar = self._site(a)
        bx, by, br = self._site(b)
        qx, qy, qr = self._site(q)
        for h in (f, g):
            if math.isnan(h.t):
                self._geometry(h)
        y0 = bisector_coord(ax, ay, bx, by, f.x, f.y)
        y1 = bisector_coord(ax, ay, bx, by, g.x, g.y)
        lo, hi = min(y0, y1), max(y0, y1)
        roots = apollonius_roots(ax, ay, ar, bx, by, br, qx, qy, qr)
        ys = sorted(bisector_coord(ax, ay, bx, by, rx, ry) for rx, ry, _ in roots)
        inside = [yy for yy in ys if lo < yy < hi]
        if len(inside) < 2:
            return False
        ym = 0.5 * (inside[0] + inside[-1])
        px, py = bisector_point(ax, ay, ar, bx, by, br, ym)
        hval = (math.hypot(px - qx, py - qy) - qr) - (math.hypot(px - ax, py - ay) - ar)
        return hval >= 0.0 if both else hval < 0.0

    def _insert_site(self, q: int, near: int | None) -> None:
        qx, qy, qr = self._site(q)
        seed, sval, cands = self._seed(q, near)
        self._last_dead = []
        if sval >= 0.0:
            # no Voronoi vertex in conflict: the new cell may live inside one edge
            for f in cands:
                for i in range(3):
                    if self._edge_split(f, i, q, both=False):
                        A, B = self._insert_degree_2(f, i, q)
                        self._geometry(A)
                        self._geometry(B)
                        self._site_face[q] = A
                        self._last_new_faces = [A, B]
                        return
            log.debug("site %d has no strict conflict; forcing seed (value %.3g)", q, sval)
        region = {seed.id: seed}
        conf = {seed.id: True}
        bogus: list[tuple[Face, int]] = []
        in_count: dict[int, int] = {}
        degree: dict[int, int] = {}
        for s in seed.v:
            in_count[s] = in_count.get(s, 0) + 1

        def is_conf(h: Face) -> bool:
            c = conf.get(h.id)
            if c is None:
                c = self._conflict_value(h, qx, qy, qr) < 0.0
                conf[h.id] = c
            return c

        stack = [seed]
        while stack:
            f = stack.pop()
            for i in range(3):
                g = f.n[i]
                if g.id in region or not is_conf(g):
                    continue
                if self._edge_split(f, i, q, both=True):
                    continue
                # g joins through a fully conflicting edge; inspect its other edges
                j_back = self._mirror(f, i)
                ok = True
                new_bogus = []
                for j in range(3):
                    if j == j_back:
                        continue
                    h = g.n[j]
                    if h.id in region:
                        if self._edge_split(g, j, q, both=True):
                            new_bogus.append((g, j))
                        else:
                            ok = False
                            break
                if not ok:
                    continue
                for s in g.v:
                    if s < N_SENTINEL:
                        continue
                    cnt = in_count.get(s, 0) + 1
                    if cnt >= 2:
                        dg = degree.get(s)
                        if dg is None:
                            dg = degree[s] = self._degree(s)
                    if cnt >= 2 and cnt >= dg:
                        has_bogus = any(s in (bf.v[(bi + 1) % 3], bf.v[(bi + 2) % 3]) for bf, bi in bogus + new_bogus)
                        if not has_bogus:
                            sx, sy, sr = self._site(s)
                            if math.hypot(sx - qx, sy - qy) + sr <= qr:
                                raise ContainedDisk(f"disk {(qx, qy, qr)} contains generator {s - N_SENTINEL}")
                            ok = False
                            break
                if not ok:
                    continue
                region[g.id] = g
                for s in g.v:
                    in_count[s] = in_count.get(s, 0) + 1
                bogus.extend(new_bogus)
                stack.append(g)

        touched = {s for f in region.values() for s in f.v if s >= N_SENTINEL}
        for f in list(region.values()):
            for i in range(3):
                touched.update(s for s in f.n[i].v if s >= N_SENTINEL)
        for s in touched:
            sx, sy, sr = self._site(s)
            if math.hypot(sx - qx, sy - qy) + sr <= qr:
                raise ContainedDisk(f"disk {(qx, qy, qr)} contains generator {s - N_SENTINEL}")

        # temporary degree-2 vertices keep the boundary of the region simple
        bogus_vertices = []
        for k, (f, i) in enumerate(bogus):
            b = _BOGUS_BASE - k
            A, B = self._insert_degree_2(f, i, b)
            bogus_vertices.append((A, B))

        # boundary walk
        start = None
        for f in region.values():
            for i in range(3):
                if f.n[i].id not in region:
                    start = (f, i)
                    break
            if start:
                break
        boundary = []
        f, i = start
        guard = 0
        while True:
            boundary.append((f, i))
            while True:
                c = (i + 1) % 3
                g = f.n[c]
                if g.id in region:
                    j = self._mirror(f, c)
                    f, i = g, j
                    guard += 1
                    if guard > 10 * len(region) + 100:
                        raise RuntimeError("boundary walk did not close")
                else:
                    f, i = f, c
                    break
            if (f, i) == start or (f is start[0] and i == start[1]):
                break
            if len(boundary) > 4 * len(region) + 10:
                raise RuntimeError("boundary walk did not close")

        new_faces = []
        for f, i in boundary:
            g = f.n[i]
            j = self._mirror(f, i)
            nf = self._new_face(q, f.v[(i + 1) % 3], f.v[(i + 2) % 3])
            nf.n[0] = g
            g.n[j] = nf
            new_faces.append(nf)
        m = len(new_faces)
        for k in range(m):
            a, b = new_faces[k], new_faces[(k + 1) % m]
            a.n[1] = b
            b.n[2] = a
        self._last_dead = list(region.keys())
        for f in region.values():
            self._kill(f)
        for nf in new_faces:
            for s in nf.v:
                if s >= 0:
                    self._site_face[s] = nf
        for A, B in bogus_vertices:
            self._remove_degree_2(A, B)
        for nf in new_faces:
            if nf.alive:
                self._geometry(nf)
        for nf in new_faces:
            if nf.alive:
                for s in nf.v:
                    if s >= 0:
                        self._site_face[s] = nf
        self._last_new_faces = [nf for nf in new_faces if nf.alive]

    def _degree(self, s: int) -> int:
        return sum(1 for _ in self.faces_around(s))

    def _insert_degree_2(self, f: Face, i: int, b: int):
        g = f.n[i]
        j = self._mirror(f, i)
        x, y = f.v[(i + 1) % 3], f.v[(i + 2) % 3]
        A = self._new_face(b, y, x)
        B = self._new_face(b, x, y)
        A.n[0], f.n[i] = f, A
        B.n[0], g.n[j] = g, B
        A.n[1], B.n[2] = B, A
        A.n[2], B.n[1] = B, A
        return A, B

    def _remove_degree_2(self, A: Face, B: Face):
        P, Q = A.n[0], B.n[0]
        ip = next(k for k in range(3) if P.n[k] is A)
        iq = next(k for k in range(3) if Q.n[k] is B)
        P.n[ip] = Q
        Q.n[iq] = P
        self._kill(A)
        self._kill(B)

    # -- views -------------------------------------------------------------

    def faces(self) -> Iterable[Face]:
        return self._faces.values()

    def face(self, fid: int) -> Face | None:
        return self._faces.get(fid)

    def is_finite_face(self, f: Face) -> bool:
        return all(s >= N_SENTINEL for s in f.v)

    def vertices(self) -> list[VVertex]:
        """Finite Voronoi vertices among real generators."""
        out = []
        for f in self._faces.values():
            if self.is_finite_face(f):
                out.append(VVertex(f.id, f.x, f.y, f.t, tuple(s - N_SENTINEL for s in f.v)))
        return out

    def edges(self) -> list[VEdge]:
        out = []
        seen = set()
        for f in self._faces.values():
            for i in range(3):
                a, b = f.v[(i + 1) % 3], f.v[(i + 2) % 3]
                if a < N_SENTINEL or b < N_SENTINEL:
                    continue
                g = f.n[i]
                key = (min(f.id, g.id), max(f.id, g.id), min(a, b), max(a, b))
                if key in seen:
                    continue
                seen.add(key)
                unb = not (self.is_finite_face(f) and self.is_finite_face(g))
                out.append(VEdge((a - N_SENTINEL, b - N_SENTINEL), (f.id, g.id), unb))
        return out

    def cell(self, gid: int) -> list[Face]:
        """Faces (Voronoi vertices) around a generator's cell, counter-clockwise."""
        return list(self.faces_around(gid + N_SENTINEL))

    def cell_neighbors(self, gid: int) -> list[int]:
        return [s - N_SENTINEL for s in self.neighbors_of(gid + N_SENTINEL) if s >= N_SENTINEL]

    def check(self) -> None:
        """Assert incidence consistency; raises AssertionError on failure."""
        nsite = 0
        for f in self._faces.values():
            assert f.alive
            for i in range(3):
                g = f.n[i]
                assert g is not None and g.alive, f
                j = self._mirror(f, i)
                assert g.n[j] is f
        for s in range(len(self._sx)):
            sf = self._site_face[s]
            assert sf is not None and sf.alive and s in sf.v, s
            nsite += 1
        nf = len(self._faces)
        ne = 3 * nf // 2
        # sphere: V - E + F = 2 with the vertex at infinity
        assert (nsite + 1) - ne + nf == 2, (nsite, ne, nf)

    # -- geometry of edges -------------------------------------------------

    def working_box(self) -> tuple[float, float, float, float]:
        x0, y0, x1, y1 = self.bbox
        w, h = x1 - x0, y1 - y0
        return (x0 - w, y0 - h, x1 + w, y1 + h)

    def edge_geometry(self, e: VEdge) -> RationalBezier:
        """Conic arc of a Voronoi edge; unbounded edges are clipped to the working box."""
        a, b = e.sites[0] + N_SENTINEL, e.sites[1] + N_SENTINEL
        f, g = self._faces[e.faces[0]], self._faces[e.faces[1]]
        ax, ay, ar = self._site(a)
        bx, by, br = self._site(b)
        y0 = bisector_coord(ax, ay, bx, by, f.x, f.y)
        y1 = bisector_coord(ax, ay, bx, by, g.x, g.y)
        if e.unbounded:
            X0, Y0, X1, Y1 = self.working_box()

            def inside(yy):
                px, py = bisector_point(ax, ay, ar, bx, by, br, yy)
                return X0 <= px <= X1 and Y0 <= py <= Y1

            ys = [y0 + (y1 - y0) * k / 256.0 for k in range(257)]
            flags = [inside(yy) for yy in ys]
            if any(flags):
                first = flags.index(True)
                last = len(flags) - 1 - flags[::-1].index(True)

                def refine(lo, hi):
                    for _ in range(100):
                        mid = 0.5 * (lo + hi)
                        if inside(mid):
                            lo = mid
                        else:
                            hi = mid
                    return lo

                n0 = ys[first] if first == 0 else refine(ys[first], ys[first - 1])
                n1 = ys[last] if last == len(ys) - 1 else refine(ys[last], ys[last + 1])
                y0, y1 = n0, n1
        p0 = bisector_point(ax, ay, ar, bx, by, br, y0)
        p2 = bisector_point(ax, ay, ar, bx, by, br, y1)

        def gap(x, y):
            return (math.hypot(x - ax, y - ay) - ar) - (math.hypot(x - bx, y - by) - br)

        def tangent(x, y):
            la = math.hypot(x - ax, y - ay) or 1.0
            lb = math.hypot(x - bx, y - by) or 1.0
            gx = (x - ax) / la - (x - bx) / lb
            gy = (y - ay) / la - (y - by) / lb
            return (-gy, gx)

        return bisector_arc(p0, p2, gap, tangent)

    def to_svg(self, path=None, scale: float = 1.0) -> str:
        """Debug drawing of generators, edges and vertices."""
        from .svg import SvgCanvas

        canvas = SvgCanvas(self.working_box())
        for k, d in enumerate(self.disks):
            canvas.circle("generators", d.x, d.y, d.r, stroke="#1f77b4")
        for e in self.edges():
            canvas.polyline("vd-edges", self.edge_geometry(e).sample(24), stroke="#d62728")
        for v in self.vertices():
            canvas.circle("vertices", v.x, v.y, 0.004 * self._scale, fill="#2ca02c")
        text = canvas.render()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _morton(ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
    def spread(v):
        v = v.astype(np.uint64) & np.uint64(0xFFFF)
        v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF)
        v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F)
        v = (v | (v << np.uint64(2))) & np.uint64(0x33333333)
        v = (v | (v << np.uint64(1))) & np.uint64(0x55555555)
        return v

    return spread(ix) | (spread(iy) << np.uint64(1))


def brio_order(points, seed: int = 0) -> np.ndarray:
    """Insertion order in rounds of doubling size, each round sorted along a Z-curve.

    Random rounds keep conflict regions small; the curve keeps consecutive
    sites close so the point-location walk stays short.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=int)
    perm = np.random.default_rng(seed).permutation(n)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-300)
    q = np.floor((pts - lo) / span * 65535.0).astype(np.int64)
    code = _morton(q[:, 0], q[:, 1])
    out = []
    start, size = 0, 1
    while start < n:
        idx = perm[start:start + size]
        out.append(idx[np.argsort(code[idx], kind="stable")])
        start += size
        size *= 2
    return np.concatenate(out)


def build_initial(disks: Iterable[Sequence[float]], parents: Sequence[Hashable] | None = None) -> VDStructure:
    """Diagram of a disk set; raises ContainedDisk for nested disks."""
    disks = [tuple(map(float, d[:3])) for d in disks]
    if disks:
        bbox = (
            min(d[0] - d[2] for d in disks),
            min(d[1] - d[2] for d in disks),
            max(d[0] + d[2] for d in disks),
            max(d[1] + d[2] for d in disks),
        )
    else:
        bbox = None
    vd = VDStructure(bbox)
    for k, d in enumerate(disks):
        vd.insert(d, None if parents is None else parents[k])
    return vd


def insert_disk(vd: VDStructure, d: Sequence[float], parent: Hashable = None) -> VDStructure:
    vd.insert(d, parent)
    return vd


def locate(vd: VDStructure, p: Sequence[float]) -> int:
    return vd.locate(p)
