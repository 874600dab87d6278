"""Slice a solid into vertical sections, carry ellipse packings across them and emit hollow meshes."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.spatial import cKDTree

from .ellipse_vd import DualVD, InDiskSet, approximate_ellipse, build_dual
from .errors import (
    DegeneratePolygon,
    InvalidPolygon,
    NoInteriorVertex,
    OverlapViolation,
    ProbeTooSmall,
    SelfIntersectingVoid,
)
from .geom import Disk, Ellipse
from .mesh import TriMesh, choose_section_direction, merge_meshes, section_frame, section_polygons
from .packer import default_cover_radius, probe_gamma, wall_offset
from .polygon import Polygon, cover_boundary
from .supportfree import FabricationParams, is_support_free, max_support_free_ellipse

log = logging.getLogger(__name__)


def default_spacing(p: FabricationParams) -> float:
    return 16.0 * p.sigma0


@dataclass
class Section:
    """One cross-section polygon of a slice and the voids crossing it."""

    polygon: Polygon
    members: dict = field(default_factory=dict)  # track id -> Ellipse
    exhausted: bool = False
    dual: DualVD | None = None
    grown: dict = field(default_factory=dict)  # track id -> (n, 3) grown in-disks
    last_probe: tuple[float, float] | None = None

    def ellipses(self) -> list[Ellipse]:
        return [self.members[t] for t in sorted(self.members)]

    @property
    def boundary(self):
        if not hasattr(self, "_boundary"):
            self._boundary = self.polygon.to_shapely().boundary
            shapely.prepare(self._boundary)
        return self._boundary


@dataclass
class Track:
    """A void: one seed ellipse and its scaled copies on consecutive slices."""

    id: int
    seed_slice: int
    seed: Ellipse
    members: dict = field(default_factory=dict)  # slice index -> (section index, factor)

    @property
    def span(self) -> tuple[int, int]:
        ks = sorted(self.members)
        return ks[0], ks[-1]


@dataclass
class SliceStack:
    normal: np.ndarray
    u: np.ndarray
    v: np.ndarray
    offsets: np.ndarray
    spacing: float
    sections: list[list[Section]]
    params: FabricationParams
    tracks: dict = field(default_factory=dict)
    cover_radius: float | None = None

    def __len__(self) -> int:
        return len(self.offsets)

    def ellipse(self, track: int, k: int) -> Ellipse:
        si, _ = self.tracks[track].members[k]
        return self.sections[k][si].members[track]

    def slice_ellipses(self, k: int) -> list[Ellipse]:
        return [e for s in self.sections[k] for e in s.ellipses()]

    def to_dict(self) -> dict:
        return {
            "normal": self.normal.tolist(),
            "spacing": self.spacing,
            "offsets": self.offsets.tolist(),
            "slices": [
                [
                    {
                        "area": s.polygon.area,
                        "ellipses": [
                            {"track": t, "cx": e.cx, "cy": e.cy, "a": e.a, "b": e.b}
                            for t, e in sorted(s.members.items())
                        ],
                    }
                    for s in secs
                ]
                for secs in self.sections
            ],
            "tracks": [
                {"id": t.id, "seed_slice": t.seed_slice, "span": list(t.span),
                 "factors": [t.members[k][1] for k in sorted(t.members)]}
                for t in sorted(self.tracks.values(), key=lambda t: t.id)
                if t.members
            ],
        }


# ---------------------------------------------------------------------------
# slicing


def slice_mesh(
    mesh: TriMesh,
    direction=None,
    spacing: float | None = None,
    params: FabricationParams | None = None,
) -> SliceStack:
    """Cut a closed mesh with parallel planes that contain the build (z) axis."""
    p = FabricationParams() if params is None else params
    mesh.check_closed()
    if direction is None:
        direction = choose_section_direction(mesh)
    d, u, v = section_frame(direction)
    h = default_spacing(p) if spacing is None else float(spacing)
    if not h > 0:
        raise ValueError("slice spacing must be positive")
    s = mesh.vertices @ d
    lo, hi = float(s.min()), float(s.max())
    n = max(1, int(math.floor((hi - lo) / h)))
    offsets = lo + 0.5 * (hi - lo - (n - 1) * h) + h * np.arange(n)
    sections = []
    for c in offsets:
        secs = []
        try:
            polys = section_polygons(mesh, d, float(c))
        except (DegeneratePolygon, InvalidPolygon) as exc:
            log.warning("slice at %.6g skipped: %s", c, exc)
            polys = []
        for poly in polys:
            secs.append(Section(poly))
        sections.append(secs)
    return SliceStack(d, u, v, offsets, h, sections, p)


# ---------------------------------------------------------------------------
# propagation


def _scaled_chain(chain: InDiskSet, e: Ellipse, f: float) -> InDiskSet:
    if f == 1.0:
        return chain
    disks = [Disk(e.cx + f * (d.x - e.cx), e.cy + f * (d.y - e.cy), f * d.r) for d in chain.disks]
    return InDiskSet(chain.parent, disks, chain.eps0)


def _scaled(e: Ellipse, f: float) -> Ellipse:
    return e if f == 1.0 else Ellipse(e.cx, e.cy, f * e.a, f * e.b)


class _Propagator:
    def __init__(self, stack: SliceStack, sigma: float):
        self.st = stack
        self.p = stack.params
        self.sigma = sigma
        self.off = wall_offset(self.p)
        self.cover_r = stack.cover_radius or default_cover_radius(self.p)
        self._chains: dict = {}

    # -- per-section state --------------------------------------------------

    def dual(self, k: int, i: int) -> DualVD:
        sec = self.st.sections[k][i]
        if sec.dual is None:
            sec.dual = build_dual(sec.polygon, self.p.error_bound, self.off, cover_boundary(sec.polygon, max_radius=self.cover_r))
            for t in sorted(sec.members):
                sec.dual.insert_ellipse(sec.members[t])
        return sec.dual

    def chain(self, track: int) -> InDiskSet:
        if track not in self._chains:
            self._chains[track] = approximate_ellipse(self.st.tracks[track].seed, self.p.error_bound)
        return self._chains[track]

    def locate(self, k: int, x: float, y: float) -> int | None:
        if not 0 <= k < len(self.st):
            return None
        for i, sec in enumerate(self.st.sections[k]):
            if bool(sec.polygon.contains(np.array([[x, y]]))[0]):
                return i
        return None

    # -- tests ------------------------------------------------------------------

    def _grown(self, chain: InDiskSet) -> np.ndarray:
        return np.array([[d.x, d.y, d.r + self.off] for d in chain.disks])

    def _apart(self, g: np.ndarray, k: int, track: int, same: set) -> bool:
        """Grown disks clear of every other void present on slice ``k``, except those in ``same``."""
        if not 0 <= k < len(self.st):
            return True
        for sec in self.st.sections[k]:
            for t, h in sec.grown.items():
                if t == track or t in same:
                    continue
                gap = np.hypot(g[:, :1] - h[None, :, 0], g[:, 1:2] - h[None, :, 1]) - g[:, 2:] - h[None, :, 2]
                if gap.min() < 0.0:
                    return False
        return True

    def accepts(self, k: int, i: int, track: int, e: Ellipse, chain: InDiskSet) -> bool:
        sec = self.st.sections[k][i]
        if not is_support_free(e.a, e.b, self.p):
            return False
        dual = self.dual(k, i)
        if not dual.fits(e, chain):
            return False
        c = np.array([[d.x, d.y] for d in chain.disks])
        r = np.array([d.r for d in chain.disks])
        wall = shapely.distance(sec.boundary, shapely.points(c))
        if (wall - r).min() < self.sigma + self.p.error_bound:
            return False
        g = self._grown(chain)
        here = set(sec.members)
        return self._apart(g, k - 1, track, here) and self._apart(g, k + 1, track, here)

    def cap_ok(self, k: int, e: Ellipse, n: int = 128) -> bool:
        """The cap closing ``e`` toward slice ``k`` fits: its widest ring lies in one polygon there, sigma clear.

        A ring inside both neighbouring sections is inside every convex combination of them.
        """
        i = self.locate(k, e.cx, e.cy)
        if i is None:
            return False
        s = math.sqrt(1.0 - CAP_LEVELS[0] ** 2)
        t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        q = np.column_stack([e.cx + s * e.a * np.cos(t), e.cy + s * e.b * np.sin(t)])
        sec = self.st.sections[k][i]
        if not sec.polygon.contains(q).all():
            return False
        return float(shapely.distance(sec.boundary, shapely.points(q)).min()) >= self.sigma

    def best_factor(self, k: int, i: int, track: int, seed: Ellipse, lo_limit: float) -> float | None:
        """Largest factor in [lo_limit, 1] whose copy is accepted, by bisection."""
        base = self.chain(track) if track in self.st.tracks else approximate_ellipse(seed, self.p.error_bound)

        def ok(f):
            return self.accepts(k, i, track, _scaled(seed, f), _scaled_chain(base, seed, f))

        if ok(1.0):
            return 1.0
        if lo_limit >= 1.0 or not ok(lo_limit):
            return None
        lo, hi = lo_limit, 1.0
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    # -- mutation -----------------------------------------------------------------

    def place(self, k: int, i: int, track: int, e: Ellipse, chain: InDiskSet, f: float) -> None:
        sec = self.st.sections[k][i]
        self.dual(k, i).insert_ellipse(e, chain=chain)
        sec.members[track] = e
        sec.grown[track] = self._grown(chain)
        sec.last_probe = None
        self.st.tracks[track].members[k] = (i, f)

    def walk(self, track: int, k0: int, step: int) -> list:
        """Copies of the seed on slices k0+step, k0+2*step, ... until one no longer fits."""
        t = self.st.tracks[track]
        seed = t.seed
        lo_limit = self.p.a_min / seed.a
        out = []
        k = k0 + step
        while True:
            i = self.locate(k, seed.cx, seed.cy)
            if i is None:
                break
            f = self.best_factor(k, i, track, seed, lo_limit)
            if f is None:
                break
            out.append((k, i, f))
            k += step
        # the cap ends one slice further out; drop the last copy if it cannot
        while out and not self.cap_ok(out[-1][0] + step, _scaled(seed, out[-1][2])):
            out.pop()
        return out

    def probe(self, k: int, i: int):
        """(radius, gamma, vertex) of the section's widest probe, kept non-increasing."""
        sec = self.st.sections[k][i]
        v, r = self.dual(k, i).max_clearance_probe()
        if sec.last_probe is not None:
            r = min(r, sec.last_probe[0])
        g = probe_gamma(r, self.p)
        if sec.last_probe is not None:
            g = min(g, sec.last_probe[1])
        return r, g, v

    def seed_once(self, k: int, i: int) -> bool:
        """Try to start one void in section (k, i); False marks the section exhausted."""
        sec = self.st.sections[k][i]
        try:
            r, g, v = self.probe(k, i)
            if g <= 0:
                raise ProbeTooSmall("no room for the wall")
            e = max_support_free_ellipse(g, self.p, (v.x, v.y))
        except (ProbeTooSmall, NoInteriorVertex):
            return False
        tid = max(self.st.tracks, default=-1) + 1
        chain = approximate_ellipse(e, self.p.error_bound)
        f = self.best_factor(k, i, tid, e, self.p.a_min / e.a)
        # a lone copy must be able to close on both sides
        if f is None or not (self.cap_ok(k - 1, _scaled(e, f)) and self.cap_ok(k + 1, _scaled(e, f))):
            return False
        track = Track(tid, k, _scaled(e, f))
        self.st.tracks[tid] = track
        self._chains[tid] = _scaled_chain(chain, e, f)
        try:
            self.place(k, i, tid, track.seed, self._chains[tid], 1.0)
        except OverlapViolation:
            del self.st.tracks[tid]
            return False
        sec.last_probe = (r, g)
        for step in (1, -1):
            for kk, ii, ff in self.walk(tid, k, step):
                s = track.seed
                self.place(kk, ii, tid, _scaled(s, ff), _scaled_chain(self._chains[tid], s, ff), ff)
        return True


def _flat(stack: SliceStack):
    return [(k, i) for k in range(len(stack)) for i in range(len(stack.sections[k]))]


def propagate(
    stack: SliceStack,
    seed: tuple[int, int] | None = None,
    sigma: float | None = None,
    max_tracks: int | None = None,
) -> SliceStack:
    """Pack the stack slice by slice, carrying every new void across neighbouring slices.

    The first packing goes into ``seed`` (slice, polygon), by default the
    largest polygon; afterwards the section with the widest remaining probe
    is packed next, until no section can host an ellipse.
    """
    p = stack.params
    sigma = 0.5 * p.delta_wall if sigma is None else float(sigma)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    pr = _Propagator(stack, sigma)
    secs = _flat(stack)
    if not secs:
        return stack
    if isinstance(seed, (int, np.integer)):
        k = int(seed)
        seed = max(((k, i) for i in range(len(stack.sections[k]))), key=lambda ki: stack.sections[k][ki[1]].polygon.area, default=None)
    if seed is None:
        seed = max(secs, key=lambda ki: (stack.sections[ki[0]][ki[1]].polygon.area, -ki[0]))
    start = len(stack.tracks)
    current = seed
    while max_tracks is None or len(stack.tracks) - start < max_tracks:
        if current is None:
            best, best_r = None, 0.0
            for k, i in secs:
                sec = stack.sections[k][i]
                if sec.exhausted:
                    continue
                try:
                    r = pr.probe(k, i)[0]
                except NoInteriorVertex:
                    sec.exhausted = True
                    continue
                if r > best_r:
                    best, best_r = (k, i), r
            if best is None:
                break
            current = best
        k, i = current
        if not pr.seed_once(k, i):
            stack.sections[k][i].exhausted = True
            current = None
            continue
        # keep filling the chosen section before moving on
    return stack


def check_stack(stack: SliceStack, sigma: float | None = None, n: int = 720) -> list[str]:
    """Problems found by sampling: support-free law, boundary clearance, pairwise walls."""
    p = stack.params
    sigma = 0.5 * p.delta_wall if sigma is None else sigma
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    bad = []
    for k, secs in enumerate(stack.sections):
        for i, sec in enumerate(secs):
            es = sec.ellipses()
            pts = []
            for e in es:
                if not is_support_free(e.a, e.b, p):
                    bad.append(f"slice {k}: ellipse {e} is not support-free")
                q = np.column_stack([e.cx + e.a * np.cos(t), e.cy + e.b * np.sin(t)])
                pts.append(q)
                if not sec.polygon.contains(q).all():
                    bad.append(f"slice {k}: ellipse {e} leaves its polygon")
                    continue
                w = shapely.distance(sec.boundary, shapely.points(q)).min()
                if w < sigma - 1e-6:
                    bad.append(f"slice {k}: wall {w:.4g} below {sigma:.4g}")
            if len(pts) < 2:
                continue
            shapes = shapely.polygons(np.stack(pts))
            c = np.array([[e.cx, e.cy] for e in es])
            r = np.array([max(e.a, e.b) for e in es])
            for a in range(len(pts)):
                for b in range(a + 1, len(pts)):
                    # circumscribed circles already a wall apart
                    if np.hypot(*(c[a] - c[b])) - r[a] - r[b] >= p.delta_wall:
                        continue
                    gap = float(shapely.distance(shapes[a], shapes[b]))
                    if gap < p.delta_wall - 1e-6:
                        bad.append(f"slice {k}: ellipses {a},{b} only {gap:.4g} apart")
    return bad


# ---------------------------------------------------------------------------
# emission


CAP_LEVELS = (0.25, 0.5, 0.75)


def void_surface(stack: SliceStack, track: int, n_ring: int = 64) -> TriMesh:
    """Closed surface of one void with outward normals (pointing away from the void)."""
    tr = stack.tracks[track]
    k0, k1 = tr.span
    th = np.linspace(0.0, 2.0 * math.pi, n_ring, endpoint=False)
    cs, sn = np.cos(th), np.sin(th)
    rings = []

    def ring(k, e, scale=1.0):
        pts = np.column_stack([e.cx + scale * e.a * cs, e.cy + scale * e.b * sn])
        c = stack.offsets[0] + k * stack.spacing if not (0 <= k < len(stack) and float(k).is_integer()) else stack.offsets[int(k)]
        return c * stack.normal + pts[:, :1] * stack.u + pts[:, 1:] * stack.v

    first, last = stack.ellipse(track, k0), stack.ellipse(track, k1)
    for lam in CAP_LEVELS[::-1]:
        rings.append(ring(k0 - lam, first, math.sqrt(1.0 - lam * lam)))
    for k in range(k0, k1 + 1):
        rings.append(ring(k, stack.ellipse(track, k)))
    for lam in CAP_LEVELS:
        rings.append(ring(k1 + lam, last, math.sqrt(1.0 - lam * lam)))
    tip0 = ring(k0 - 1, Ellipse(first.cx, first.cy, 1.0, 1.0), 0.0)[:1]
    tip1 = ring(k1 + 1, Ellipse(last.cx, last.cy, 1.0, 1.0), 0.0)[:1]
    V = np.vstack([tip0] + rings + [tip1])
    m = len(rings)
    faces = []
    idx = lambda r, j: 1 + r * n_ring + (j % n_ring)
    for j in range(n_ring):
        faces.append([0, idx(0, j + 1), idx(0, j)])
    for r in range(m - 1):
        for j in range(n_ring):
            a, b, c, d = idx(r, j), idx(r, j + 1), idx(r + 1, j + 1), idx(r + 1, j)
            faces += [[a, b, c], [a, c, d]]
    top = len(V) - 1
    for j in range(n_ring):
        faces.append([idx(m - 1, j), idx(m - 1, j + 1), top])
    mesh = TriMesh(V, faces)
    if mesh.volume < 0:
        mesh = mesh.flipped()
    return mesh


def void_volume(stack: SliceStack, factors: dict | None = None) -> float:
    """Volume removed by the voids in the per-slab model (area times spacing)."""
    total = 0.0
    for t in stack.tracks.values():
        g = 1.0 if factors is None else factors.get(t.id, 1.0)
        for k in t.members:
            total += stack.ellipse(t.id, k).area * g * g * stack.spacing
    return total


def _seg_tri_hits(p0, p1, a, b, c, eps=1e-12) -> np.ndarray:
    """Vectorised segment / triangle intersection (Moller-Trumbore)."""
    d = p1 - p0
    e1, e2 = b - a, c - a
    h = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(det) > eps * (np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1) * np.linalg.norm(d, axis=1) + 1e-300)
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = p0 - a
    u = inv * np.einsum("ij,ij->i", s, h)
    q = np.cross(s, e1)
    v = inv * np.einsum("ij,ij->i", d, q)
    t = inv * np.einsum("ij,ij->i", e2, q)
    return ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= 0) & (t <= 1)


def _crossing(ta: np.ndarray, tb: np.ndarray) -> bool:
    for x, y in ((ta, tb), (tb, ta)):
        for e in range(3):
            if _seg_tri_hits(x[:, e], x[:, (e + 1) % 3], y[:, 0], y[:, 1], y[:, 2]).any():
                return True
    return False


def triangles_intersect(A: np.ndarray, B: np.ndarray, brute: int = 1_000_000) -> bool:
    """Whether any triangle of set A crosses any triangle of set B (coplanar contact is ignored)."""
    lo = np.maximum(A.min((0, 1)), B.min((0, 1)))
    hi = np.minimum(A.max((0, 1)), B.max((0, 1)))
    if np.any(lo > hi):
        return False
    A = A[np.all((A.max(1) >= lo) & (A.min(1) <= hi), axis=1)]
    B = B[np.all((B.max(1) >= lo) & (B.min(1) <= hi), axis=1)]
    if len(A) == 0 or len(B) == 0:
        return False
    if len(A) * len(B) <= brute:
        ia, ib = np.nonzero(np.all((A.min(1)[:, None] <= B.max(1)[None]) & (B.min(1)[None] <= A.max(1)[:, None]), axis=2))
        return bool(len(ia)) and _crossing(A[ia], B[ib])
    ca, cb = A.mean(1), B.mean(1)
    ra = np.linalg.norm(A - ca[:, None], axis=2).max()
    rb = np.linalg.norm(B - cb[:, None], axis=2).max()
    pairs = cKDTree(ca).query_ball_tree(cKDTree(cb), ra + rb)
    ia = np.repeat(np.arange(len(A)), [len(q) for q in pairs])
    ib = np.fromiter((j for q in pairs for j in q), dtype=np.int64, count=len(ia))
    for s in range(0, len(ia), brute):
        if _crossing(A[ia[s:s + brute]], B[ib[s:s + brute]]):
            return True
    return False


def emit_hollowed(stack: SliceStack, mesh: TriMesh, n_ring: int = 64, check: bool = True) -> TriMesh:
    """Shell plus inward-facing void surfaces; raises on leaks or intersections."""
    mesh.check_closed()
    voids = [void_surface(stack, t, n_ring) for t in sorted(stack.tracks) if stack.tracks[t].members]
    out = merge_meshes([mesh] + [v.flipped() for v in voids])
    if not check:
        return out
    out.check_closed()
    chi = mesh.euler_characteristic() + 2 * len(voids)
    if out.euler_characteristic() != chi:
        raise SelfIntersectingVoid(f"Euler characteristic {out.euler_characteristic()} != {chi}")
    shell = mesh.vertices[mesh.faces]
    tris = [v.vertices[v.faces] for v in voids]
    if voids:
        inside = mesh.contains(np.array([v.vertices[1] for v in voids]))
        if not inside.all():
            raise SelfIntersectingVoid(f"void {int(np.flatnonzero(~inside)[0])} lies outside the shell")
    for a, ta in enumerate(tris):
        if triangles_intersect(ta, shell):
            raise SelfIntersectingVoid(f"void {a} crosses the outer surface")
        for b in range(a + 1, len(tris)):
            if triangles_intersect(ta, tris[b]):
                raise SelfIntersectingVoid(f"voids {a} and {b} intersect")
    return out


def hollow(
    mesh: TriMesh,
    params: FabricationParams | None = None,
    direction=None,
    spacing: float | None = None,
    max_tracks: int | None = None,
    n_ring: int = 64,
) -> tuple[TriMesh, SliceStack]:
    stack = slice_mesh(mesh, direction, spacing, params)
    propagate(stack, max_tracks=max_tracks)
    return emit_hollowed(stack, mesh, n_ring), stack


# the operation is called ``slice`` elsewhere; the builtin is not used in this module
slice = slice_mesh  # noqa: A001

__all__ = [
    "Section",
    "SliceStack",
    "Track",
    "check_stack",
    "default_spacing",
    "emit_hollowed",
    "hollow",
    "propagate",
    "slice",
    "slice_mesh",
    "void_surface",
    "void_volume",
]
