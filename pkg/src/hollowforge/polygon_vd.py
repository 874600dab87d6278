"""Voronoi diagram of a polygon from the diagram of its boundary disks.

Cells of disks sharing a parent (P-vertex or P-edge) are merged, which
yields the adjacency between polygon elements.  Every triple of mutually
adjacent elements is solved exactly; roots that are equidistant to their
triple and empty with respect to all elements become V-vertices.  P-vertices
themselves are kept as boundary V-vertices of clearance zero, and V-edges
join consecutive V-vertices along a shared bisector.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .apollonius import INF, N_SENTINEL, VDStructure
from .bezier import RationalBezier, bisector_arc
from .polygon import BoundaryDiskSet, Polygon, cover_boundary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PVertex:
    x: float
    y: float
    clearance: float
    generators: tuple
    residual: float


@dataclass(frozen=True)
class PEdge:
    generators: tuple
    kind: str
    curve: RationalBezier
    ends: tuple = ()


# ---------------------------------------------------------------------------
# exact vertex among segments and points


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def solve_vertex_all(gens) -> list[tuple[float, float, float]]:
    """All points ``(x, y, t)``, ``t >= 0``, at distance ``t`` from three generators.

    Generators are ``("pt", x, y)`` or ``("ln", px, py, nx, ny)`` with ``n``
    the unit normal of the side distances are measured on.  ``("perp", px,
    py, ux, uy)`` stands for a point lying on a line generator with unit
    direction ``u``: the solution then sits on the perpendicular through the
    point, which avoids the double root of the point equation.
    """
    rows, rhs = [], []
    pts = []
    for g in gens:
        if g[0] == "ln":
            _, px, py, nx, ny = g
            rows.append((nx, ny, -1.0))
            rhs.append(nx * px + ny * py)
        elif g[0] == "perp":
            _, px, py, ux, uy = g
            rows.append((ux, uy, 0.0))
            rhs.append(ux * px + uy * py)
        else:
            pts.append(g)
    if len(rows) + max(len(pts) - 1, 0) < 2:
        return []
    q = pts[0] if pts else None
    for g in pts[1:]:
        rows.append((2.0 * (g[1] - q[1]), 2.0 * (g[2] - q[2]), 0.0))
        rhs.append(g[1] ** 2 + g[2] ** 2 - q[1] ** 2 - q[2] ** 2)
    if q is None:
        D = _det3(rows)
        scale = max(1.0, max(abs(v) for r in rows for v in r)) ** 3
        if abs(D) < 1e-14 * scale:
            return []
        sol = []
        for c in range(3):
            m = [list(r) for r in rows]
            for i in range(3):
                m[i][c] = rhs[i]
            sol.append(_det3(m) / D)
        return [tuple(sol)] if sol[2] >= 0.0 else []
    r0, r1 = rows
    N = (r0[1] * r1[2] - r0[2] * r1[1], r0[2] * r1[0] - r0[0] * r1[2], r0[0] * r1[1] - r0[1] * r1[0])
    nn = math.sqrt(N[0] ** 2 + N[1] ** 2 + N[2] ** 2)
    if nn == 0.0:
        return []
    N = (N[0] / nn, N[1] / nn, N[2] / nn)
    g00 = sum(a * a for a in r0)
    g01 = sum(a * b for a, b in zip(r0, r1))
    g11 = sum(b * b for b in r1)
    det = g00 * g11 - g01 * g01
    if det == 0.0:
        return []
    c0 = (g11 * rhs[0] - g01 * rhs[1]) / det
    c1 = (g00 * rhs[1] - g01 * rhs[0]) / det
    S = [c0 * r0[i] + c1 * r1[i] for i in range(3)]
    D = (S[0] - q[1], S[1] - q[2], S[2])
    qa = N[0] ** 2 + N[1] ** 2 - N[2] ** 2
    qb = D[0] * N[0] + D[1] * N[1] - D[2] * N[2]
    qc = D[0] ** 2 + D[1] ** 2 - D[2] ** 2
    if abs(qa) < 1e-14:
        lams = [-qc / (2.0 * qb)] if qb != 0.0 else []
    else:
        disc = qb * qb - qa * qc
        if disc < 0.0:
            if disc < -1e-9 * max(qb * qb, abs(qa * qc), 1e-300):
                return []
            disc = 0.0
        sd = math.sqrt(disc)
        lams = [(-qb + sd) / qa, (-qb - sd) / qa]
    out = []
    for lam in lams:
        x, y, t = (S[i] + lam * N[i] for i in range(3))
        if t >= -1e-12 * (1.0 + abs(x) + abs(y)):
            out.append((float(x), float(y), float(max(t, 0.0))))
    return out


def solve_vertex(gens, approx):
    """Root of :func:`solve_vertex_all` nearest to ``approx`` or None."""
    sols = solve_vertex_all(gens)
    if not sols:
        return None
    return min(sols, key=lambda s: math.hypot(s[0] - approx[0], s[1] - approx[1]))


# ---------------------------------------------------------------------------


class _Vtx:
    __slots__ = ("x", "y", "t", "gens")

    def __init__(self, x, y, t, gens):
        self.x, self.y, self.t = x, y, t
        self.gens = tuple(gens)


class PolygonVD:
    """Voronoi diagram of the elements (P-vertices, P-edges) of a polygon."""

    def __init__(self, poly: Polygon, disks: BoundaryDiskSet, dvd: VDStructure):
        self.poly = poly
        self.disks = disks
        self.dvd = dvd
        self.n = poly.n
        self.stats: dict[str, int] = {}
        self._tol = 1e-9 * poly.diagonal
        # equidistance and emptiness are accepted an order tighter than the output guarantee
        self._vtol = 1e-10 * poly.diagonal
        self._seg_a, self._seg_b = poly.edge_arrays()
        self._adj: dict = defaultdict(set)
        self._verts: list[_Vtx] = []
        self._edges: list[tuple[int, int, tuple]] = []
        self._edge_cache: dict = {}
        self._pending: list = []

    # -- generators --------------------------------------------------------

    def generator_id(self, g) -> int:
        return g[1] if g[0] == "v" else self.n + g[1]

    def _gen(self, g):
        V = self.poly.vertices
        if g[0] == "v":
            return ("pt", float(V[g[1], 0]), float(V[g[1], 1]))
        a = V[g[1]]
        b = V[self.poly.next(g[1])]
        dx, dy = b[0] - a[0], b[1] - a[1]
        L = math.hypot(dx, dy)
        return ("ln", float(a[0]), float(a[1]), float(-dy / L), float(dx / L))

    def distance(self, g, x: float, y: float) -> float:
        """Euclidean distance to a generator (segments are closed)."""
        V = self.poly.vertices
        if g[0] == "v":
            return math.hypot(x - V[g[1], 0], y - V[g[1], 1])
        a = V[g[1]]
        b = V[self.poly.next(g[1])]
        dx, dy = b[0] - a[0], b[1] - a[1]
        t = ((x - a[0]) * dx + (y - a[1]) * dy) / (dx * dx + dy * dy)
        t = min(1.0, max(0.0, t))
        return math.hypot(x - a[0] - t * dx, y - a[1] - t * dy)

    def _open_distance(self, g, x, y) -> float:
        if g[0] == "v":
            return self.distance(g, x, y)
        V = self.poly.vertices
        a = V[g[1]]
        b = V[self.poly.next(g[1])]
        dx, dy = b[0] - a[0], b[1] - a[1]
        t = ((x - a[0]) * dx + (y - a[1]) * dy) / (dx * dx + dy * dy)
        if not 0.0 < t < 1.0:
            return math.inf
        return math.hypot(x - a[0] - t * dx, y - a[1] - t * dy)

    def _parent(self, s: int):
        if s == INF or s < N_SENTINEL:
            return None
        return self.dvd.parents[s]

    def _incident_pairs(self):
        for k in range(self.n):
            yield ("v", k), ("e", k)
            yield ("v", k), ("e", self.poly.prev(k))
            yield ("e", self.poly.prev(k)), ("e", k)

    # -- construction stages -----------------------------------------------

    def merge(self) -> None:
        """Contract disk cells by parent; record which elements become adjacent."""
        adj = self._adj
        merged = 0
        for f in self.dvd.faces():
            ps = [self._parent(s) for s in f.v]
            if None in ps:
                continue
            if ps[0] != ps[1] and ps[1] != ps[2] and ps[0] != ps[2]:
                merged += 1
            for i in range(3):
                a, b = ps[i], ps[(i + 1) % 3]
                if a != b:
                    adj[a].add(b)
                    adj[b].add(a)
        for a, b in self._incident_pairs():
            adj[a].add(b)
            adj[b].add(a)
        self.stats["merged_vertices"] = merged

    def relocate(self) -> None:
        """P-vertices become boundary V-vertices ``(e_prev, v, e_next)`` of clearance 0."""
        V = self.poly.vertices
        for k in range(self.n):
            gens = (("e", self.poly.prev(k)), ("v", k), ("e", k))
            self._verts.append(_Vtx(float(V[k, 0]), float(V[k, 1]), 0.0, gens))
        self.stats["relocated"] = self.n

    def _triangles(self):
        adj = self._adj
        key = self.generator_id
        for a in sorted(adj, key=key):
            ka = key(a)
            nb = sorted((b for b in adj[a] if key(b) > ka), key=key)
            for i, b in enumerate(nb):
                ab = adj[b]
                for c in nb[i + 1 :]:
                    if c in ab:
                        yield (a, b, c)

    def _min_distance(self, P: np.ndarray) -> np.ndarray:
        """Distance from each point to the nearest element (closed P-edges)."""
        return self.poly.boundary_distance(P)

    def _validate(self, cands: list[_Vtx]) -> list[_Vtx]:
        if not cands:
            return []
        tol = self._vtol
        P = np.array([(c.x, c.y) for c in cands], dtype=float)
        T = np.array([c.t for c in cands])
        ok = self.poly.contains(P, tol=tol) & (self._min_distance(P) >= T - tol)
        out = []
        for c, good in zip(cands, ok):
            if good and all(abs(self.distance(g, c.x, c.y) - c.t) <= tol for g in c.gens):
                out.append(c)
        return out

    def _cluster(self, cands: list[_Vtx]) -> None:
        """Add candidates to the vertex list, merging coincident points."""
        h = max(1e-8 * self.poly.diagonal, 1e-300)
        grid: dict = {}
        for i, v in enumerate(self._verts):
            grid.setdefault((round(v.x / h), round(v.y / h)), []).append(i)
        added = 0
        for c in cands:
            kx, ky = round(c.x / h), round(c.y / h)
            hit = None
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for i in grid.get((kx + dx, ky + dy), ()):
                        v = self._verts[i]
                        if math.hypot(v.x - c.x, v.y - c.y) <= h and all(
                            abs(self.distance(g, v.x, v.y) - v.t) <= self._vtol for g in c.gens
                        ):
                            hit = i
                            break
                    if hit is not None:
                        break
                if hit is not None:
                    break
            for p in c.gens:
                for q in c.gens:
                    if p != q:
                        self._adj[p].add(q)
            if hit is None:
                grid.setdefault((kx, ky), []).append(len(self._verts))
                self._verts.append(c)
                added += 1
            else:
                v = self._verts[hit]
                extra = [g for g in c.gens if g not in v.gens]
                if extra:
                    v.gens = tuple(sorted(v.gens + tuple(extra), key=self.generator_id))
        self.stats["vertices_added"] = self.stats.get("vertices_added", 0) + added

    def _solve_gens(self, tri):
        edges = {g[1] for g in tri if g[0] == "e"}
        out = []
        for g in tri:
            G = self._gen(g)
            if g[0] == "v":
                inc = [e for e in (g[1], self.poly.prev(g[1])) if e in edges]
                if len(inc) == 1:
                    L = self._gen(("e", inc[0]))
                    G = ("perp", G[1], G[2], L[4], -L[3])
            out.append(G)
        return out

    def _solve_triples(self, triples) -> list[_Vtx]:
        out = []
        for tri in triples:
            for x, y, t in solve_vertex_all(self._solve_gens(tri)):
                out.append(_Vtx(x, y, t, tri))
        return out

    def correct(self) -> None:
        """Solve every mutually adjacent element triple exactly and keep the empty roots."""
        corners = {frozenset(v.gens) for v in self._verts}
        triples = [t for t in self._triangles() if frozenset(t) not in corners]
        cands = self._solve_triples(triples)
        good = self._validate(cands)
        self.stats["candidate_triples"] = len(triples)
        self.stats["rejected_roots"] = len(cands) - len(good)
        self._cluster(good)

    def trim(self) -> None:
        """Drop V-vertices outside the closed polygon."""
        P = np.array([(v.x, v.y) for v in self._verts], dtype=float).reshape(-1, 2)
        ok = self.poly.contains(P, tol=self._tol) if len(P) else np.zeros(0, bool)
        self._verts = [v for v, k in zip(self._verts, ok) if k and v.t >= -self._tol]
        self._verts.sort(key=lambda v: (v.x, v.y, v.t))
        self.stats["interior_vertices"] = len(self._verts)

    def _pair_key(self, a, b):
        return (a, b) if self.generator_id(a) < self.generator_id(b) else (b, a)

    def _bisector_param(self, a, b, x, y) -> float:
        ga, gb = self._gen(a), self._gen(b)
        if ga[0] == "ln" and gb[0] == "ln":
            d = (-(ga[4] - gb[4]), ga[3] - gb[3])
        elif ga[0] == "ln" or gb[0] == "ln":
            ln = ga if ga[0] == "ln" else gb
            d = (ln[4], -ln[3])
        else:
            d = (-(gb[2] - ga[2]), gb[1] - ga[1])
        return d[0] * x + d[1] * y

    def connect(self) -> None:
        """Join consecutive V-vertices along each bisector when the arc between them is a V-edge."""
        pairs: dict = defaultdict(list)
        for i, v in enumerate(self._verts):
            gs = v.gens
            for p in range(len(gs)):
                for q in range(p + 1, len(gs)):
                    pairs[self._pair_key(gs[p], gs[q])].append(i)
        cache = self._edge_cache
        cand = []
        for (a, b), idx in pairs.items():
            if len(idx) < 2:
                continue
            idx = sorted(idx, key=lambda i: (self._bisector_param(a, b, self._verts[i].x, self._verts[i].y), i))
            for i, j in zip(idx, idx[1:]):
                P, Q = self._verts[i], self._verts[j]
                if math.hypot(P.x - Q.x, P.y - Q.y) <= self._tol:
                    continue
                key = (a, b, P.x, P.y, Q.x, Q.y)
                if key not in cache:
                    cand.append(key)
                cand_ij = (i, j, (a, b), key)
                self._pending.append(cand_ij)
        if cand:
            arcs = [self._arc(k[0], k[1], (k[2], k[3]), (k[4], k[5])) for k in cand]
            M = np.array([arc.evaluate(0.5) for arc in arcs], dtype=float)
            tol = 1e-7 * self.poly.diagonal
            dmin = self._min_distance(M)
            inside = self.poly.contains(M, tol=self._tol)
            for k, arc, m, dm, ins in zip(cand, arcs, M, dmin, inside):
                da = self.distance(k[0], m[0], m[1])
                db = self.distance(k[1], m[0], m[1])
                cache[k] = arc if ins and abs(da - db) <= tol and dm >= min(da, db) - tol else None
        self._edges = [(i, j, pr, cache[k]) for i, j, pr, k in self._pending if cache[k] is not None]
        self._pending = []
        for _, _, (a, b), _ in self._edges:
            self._adj[a].add(b)
            self._adj[b].add(a)
        self.stats["edges"] = len(self._edges)

    def _missing(self) -> list[tuple]:
        have = defaultdict(set)
        for i, j, pr, _ in self._edges:
            have[i].add(pr)
            have[j].add(pr)
        out = []
        for i, v in enumerate(self._verts):
            if len(v.gens) != 3 or v.t <= self._tol:
                continue
            a, b, c = v.gens
            for p, q, r in ((a, b, c), (b, c, a), (a, c, b)):
                if self._pair_key(p, q) not in have[i]:
                    out.append((p, q, r))
        return out

    def complete(self, rounds: int = 10) -> None:
        """Search wider element neighbourhoods for V-vertices ending dangling bisectors."""
        for _ in range(rounds):
            miss = self._missing()
            if not miss:
                break
            triples = set()
            key = self.generator_id
            for a, b, c in miss:
                ring = set()
                for g in (a, b):
                    for h in self._adj.get(g, ()):
                        ring.add(h)
                        ring |= self._adj.get(h, set())
                ring -= {a, b, c}
                for d in ring:
                    triples.add(tuple(sorted((a, b, d), key=key)))
            good = self._validate(self._solve_triples(sorted(triples, key=lambda t: [key(g) for g in t])))
            before = len(self._verts)
            self._cluster(good)
            if len(self._verts) == before:
                break
            self.trim()
            self.connect()
        self.stats["dangling"] = len(self._missing())

    # -- queries -----------------------------------------------------------

    def residual(self, v) -> float:
        ds = [self.distance(g, v.x, v.y) for g in v.gens]
        return max(ds) - min(ds)

    def resolve(self, v: PVertex) -> tuple[float, float, float]:
        """Recompute a V-vertex from its first three generators."""
        if v.clearance == 0.0:
            return v.x, v.y, 0.0
        sol = solve_vertex(self._solve_gens(v.generators[:3]), (v.x, v.y))
        return sol if sol is not None else (v.x, v.y, v.clearance)

    def vertices(self) -> list[PVertex]:
        return [PVertex(v.x, v.y, v.t, v.gens, self.residual(v)) for v in self._verts]

    def max_clearance_vertex(self) -> PVertex:
        v = max(self._verts, key=lambda h: h.t)
        return PVertex(v.x, v.y, v.t, v.gens, self.residual(v))

    def edges(self) -> list[PEdge]:
        """V-edges as conic arcs: ``line`` between like elements, ``parabola`` otherwise."""
        out = []
        for i, j, (a, b), arc in self._edges:
            kind = "parabola" if a[0] != b[0] else "line"
            out.append(PEdge((a, b), kind, arc, (i, j)))
        return out

    def _signed(self, g, x, y):
        G = self._gen(g)
        if G[0] == "pt":
            dx, dy = x - G[1], y - G[2]
            L = math.hypot(dx, dy) or 1.0
            return L, (dx / L, dy / L)
        return G[3] * (x - G[1]) + G[4] * (y - G[2]), (G[3], G[4])

    def _arc(self, a, b, p0, p2) -> RationalBezier:
        def gap(x, y):
            return self._signed(a, x, y)[0] - self._signed(b, x, y)[0]

        def tangent(x, y):
            ga = self._signed(a, x, y)[1]
            gb = self._signed(b, x, y)[1]
            return (-(ga[1] - gb[1]), ga[0] - gb[0])

        return bisector_arc(p0, p2, gap, tangent)

    def cells(self) -> dict:
        """V-vertices bounding each element's cell; convex P-vertices keep only their corner."""
        out = {("v", k): [] for k in range(self.n)}
        out.update({("e", k): [] for k in range(self.n)})
        for v in self.vertices():
            for g in v.generators:
                out[g].append(v)
        return out

    def locate(self, p) -> tuple:
        """Nearest element: P-vertex by distance, P-edge by perpendicular distance to its interior.

        Ties go to the lowest generator id (P-vertices ``k``, then P-edges ``n + k``).
        """
        x, y = float(p[0]), float(p[1])
        g0 = self.dvd.parent(self.dvd.locate((x, y)))
        cand = {g0}
        ring = self._adj.get(g0, set())
        cand |= ring
        for h in list(ring):
            cand |= self._adj.get(h, set())
        best = None
        for g in cand:
            key = (self._open_distance(g, x, y), self.generator_id(g))
            if best is None or key < best[0]:
                best = (key, g)
        return best[1]

    def to_svg(self, path=None) -> str:
        from .svg import SvgCanvas

        x0, y0, x1, y1 = self.poly.bbox
        m = 0.05 * max(x1 - x0, y1 - y0)
        c = SvgCanvas((x0 - m, y0 - m, x1 + m, y1 + m))
        for lp in self.poly.loops:
            c.polyline("polygon", lp, stroke="black", closed=True)
        for d in self.disks.disks:
            c.circle("disks", d.x, d.y, d.r, stroke="#1f77b4")
        for e in self.edges():
            c.polyline("vd-edges", e.curve.sample(16), stroke="#d62728")
        for v in self._verts:
            c.circle("vertices", v.x, v.y, 0.003 * self.poly.diagonal, fill="#2ca02c")
        text = c.render()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def build_disk_vd(disks: BoundaryDiskSet, bbox=None) -> VDStructure:
    arr = disks.as_array()
    if bbox is None:
        bbox = (
            float((arr[:, 0] - arr[:, 2]).min()),
            float((arr[:, 1] - arr[:, 2]).min()),
            float((arr[:, 0] + arr[:, 2]).max()),
            float((arr[:, 1] + arr[:, 2]).max()),
        )
    vd = VDStructure(bbox)
    for d, par in zip(disks.disks, disks.parents):
        vd.insert(d, par)
    return vd


def build_polygon_vd(poly: Polygon, disks: BoundaryDiskSet | None = None) -> PolygonVD:
    """Voronoi diagram of a polygon's P-vertices and P-edges."""
    if disks is None:
        disks = cover_boundary(poly)
    dvd = build_disk_vd(disks)
    pvd = PolygonVD(poly, disks, dvd)
    pvd.merge()
    pvd.relocate()
    pvd.correct()
    pvd.trim()
    pvd.connect()
    pvd.complete()
    log.debug("polygon VD: %s", pvd.stats)
    return pvd
