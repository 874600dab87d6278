"""Triangle meshes: IO, integrity checks, mass properties and planar sections."""
from __future__ import annotations

import logging
import math
import struct
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import Polygon as ShapelyPolygon

from .errors import NonManifold, OpenMesh
from .polygon import Polygon, signed_area

log = logging.getLogger(__name__)


@dataclass
class TriMesh:
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)

    # -- topology ------------------------------------------------------------

    def edge_use(self) -> dict:
        """Directed edge -> number of faces using it."""
        use: dict = defaultdict(int)
        for a, b, c in self.faces.tolist():
            use[(a, b)] += 1
            use[(b, c)] += 1
            use[(c, a)] += 1
        return use

    def check_closed(self) -> None:
        """Raise OpenMesh or NonManifold unless every edge joins two opposite faces."""
        use = self.edge_use()
        for (a, b), n in use.items():
            if n > 1:
                raise NonManifold(f"directed edge {(a, b)} used {n} times")
            m = use.get((b, a), 0)
            if m == 0:
                raise OpenMesh(f"edge {(a, b)} has no opposite face")

    @property
    def is_closed_manifold(self) -> bool:
        try:
            self.check_closed()
        except (OpenMesh, NonManifold):
            return False
        return True

    def euler_characteristic(self) -> int:
        e = {(min(a, b), max(a, b)) for a, b in self.edge_use()}
        used = np.unique(self.faces)
        return len(used) - len(e) + len(self.faces)

    def components(self) -> list[np.ndarray]:
        """Face index arrays of the edge-connected components."""
        parent = list(range(len(self.vertices)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b, c in self.faces.tolist():
            ra, rb, rc = find(a), find(b), find(c)
            parent[rb] = ra
            parent[find(rc)] = ra
        roots = np.array([find(int(f[0])) for f in self.faces])
        return [np.flatnonzero(roots == r) for r in sorted(set(roots.tolist()))]

    # -- mass properties -----------------------------------------------------

    def _tets(self):
        v = self.vertices[self.faces]
        return v[:, 0], v[:, 1], v[:, 2]

    @property
    def volume(self) -> float:
        a, b, c = self._tets()
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    @property
    def centroid(self) -> np.ndarray:
        """Centre of mass of the enclosed solid (uniform density)."""
        a, b, c = self._tets()
        w = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
        tot = w.sum()
        if tot == 0:
            raise OpenMesh("mesh encloses no volume")
        return ((a + b + c) / 4.0 * w[:, None]).sum(0) / tot

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(0), self.vertices.max(0)

    def contains(self, points) -> np.ndarray:
        """Point-in-solid by generalized winding number (closed meshes)."""
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        a, b, c = self._tets()
        out = np.empty(len(p), dtype=bool)
        for s in range(0, len(p), 256):
            q = p[s:s + 256, None, :]
            A, B, C = a[None] - q, b[None] - q, c[None] - q
            la, lb, lc = (np.linalg.norm(X, axis=-1) for X in (A, B, C))
            num = np.einsum("...i,...i->...", A, np.cross(B, C))
            den = (la * lb * lc + np.einsum("...i,...i->...", A, B) * lc
                   + np.einsum("...i,...i->...", B, C) * la + np.einsum("...i,...i->...", C, A) * lb)
            w = np.arctan2(num, den).sum(-1) / (2.0 * math.pi)
            out[s:s + 256] = w > 0.5
        return out

    def flipped(self) -> "TriMesh":
        return TriMesh(self.vertices.copy(), self.faces[:, ::-1].copy())


def merge_meshes(meshes) -> TriMesh:
    verts, faces, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + off)
        off += len(m.vertices)
    return TriMesh(np.vstack(verts), np.vstack(faces))


# ---------------------------------------------------------------------------
# IO


def _weld(tris: np.ndarray) -> TriMesh:
    flat = tris.reshape(-1, 3)
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    faces = inv.reshape(-1, 3)
    keep = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 2] != faces[:, 0])
    return TriMesh(uniq, faces[keep])


def read_stl(path) -> TriMesh:
    data = Path(path).read_bytes()
    if len(data) >= 84:
        (n,) = struct.unpack_from("<I", data, 80)
        if 84 + 50 * n == len(data):
            rec = np.frombuffer(data, dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]), count=n, offset=84)
            return _weld(rec["v"].astype(float))
    text = data.decode("ascii", errors="replace")
    vals = [list(map(float, ln.split()[1:4])) for ln in text.splitlines() if ln.strip().startswith("vertex")]
    if not vals or len(vals) % 3:
        raise ValueError(f"{path}: not a valid STL file")
    return _weld(np.array(vals).reshape(-1, 3, 3))


def write_stl(mesh: TriMesh, path) -> None:
    """Binary little-endian STL."""
    v = mesh.vertices[mesh.faces]
    n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    ln = np.linalg.norm(n, axis=1)
    n = np.divide(n, ln[:, None], out=np.zeros_like(n), where=ln[:, None] > 0)
    rec = np.zeros(len(v), dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]))
    rec["n"] = n
    rec["v"] = v
    header = b"hollowforge binary STL".ljust(80, b" ")
    Path(path).write_bytes(header + struct.pack("<I", len(v)) + rec.tobytes())


def read_obj(path) -> TriMesh:
    verts, faces = [], []
    for ln in Path(path).read_text().splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    return TriMesh(np.array(verts), np.array(faces))


def read_mesh(path) -> TriMesh:
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        return read_obj(path)
    return read_stl(path)


# ---------------------------------------------------------------------------
# fixtures


def box(sx: float, sy: float, sz: float, origin=(0.0, 0.0, 0.0)) -> TriMesh:
    o = np.asarray(origin, dtype=float)
    v = np.array([[x, y, z] for z in (0, sz) for y in (0, sy) for x in (0, sx)], dtype=float) + o
    f = [
        [0, 2, 1], [1, 2, 3], [4, 5, 6], [5, 7, 6],
        [0, 1, 4], [1, 5, 4], [2, 6, 3], [3, 6, 7],
        [0, 4, 2], [2, 4, 6], [1, 3, 5], [3, 7, 5],
    ]
    return TriMesh(v, f)


def extrude_polygon(outer, length: float, axis: int = 0) -> TriMesh:
    """Prism over a simple polygon given in the plane orthogonal to ``axis``."""
    pts = np.asarray(outer, dtype=float).reshape(-1, 2)
    if signed_area(pts) < 0:
        pts = pts[::-1]
    n = len(pts)
    tri = shapely.constrained_delaunay_triangles(ShapelyPolygon(pts))
    idx = {tuple(p): i for i, p in enumerate(pts.tolist())}
    caps = []
    for t in shapely.get_parts(tri):
        c = np.asarray(t.exterior.coords)[:3]
        k = [idx[tuple(q)] for q in c.tolist()]
        if signed_area(c) < 0:
            k = k[::-1]
        caps.append(k)
    caps = np.array(caps)

    def lift(p2, s):
        out = np.zeros((len(p2), 3))
        others = [i for i in range(3) if i != axis]
        out[:, others[0]] = p2[:, 0]
        out[:, others[1]] = p2[:, 1]
        out[:, axis] = s
        return out

    v = np.vstack([lift(pts, 0.0), lift(pts, length)])
    faces = [caps[:, ::-1], caps + n]
    side = []
    for i in range(n):
        j = (i + 1) % n
        side += [[i, j, j + n], [i, j + n, i + n]]
    faces.append(np.array(side))
    m = TriMesh(v, np.vstack(faces))
    if m.volume < 0:
        m = m.flipped()
    return m


def cone(radius: float, height: float, n: int = 64, axis: int = 0) -> TriMesh:
    """Right circular cone along ``axis`` with its base at 0 and apex at ``height``."""
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    ring = np.column_stack([radius * np.cos(th), radius * np.sin(th)])
    others = [i for i in range(3) if i != axis]
    v = np.zeros((n + 2, 3))
    v[:n, others[0]] = ring[:, 0]
    v[:n, others[1]] = ring[:, 1]
    v[n, axis] = height
    faces = []
    for i in range(n):
        j = (i + 1) % n
        faces.append([i, j, n])
        faces.append([j, i, n + 1])
    m = TriMesh(v, faces)
    if m.volume < 0:
        m = m.flipped()
    return m


def torus(R: float, r: float, n: int = 48, m: int = 24) -> TriMesh:
    """Torus around the z axis."""
    u = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    w = np.linspace(0.0, 2.0 * math.pi, m, endpoint=False)
    U, W = np.meshgrid(u, w, indexing="ij")
    v = np.column_stack([
        ((R + r * np.cos(W)) * np.cos(U)).ravel(),
        ((R + r * np.cos(W)) * np.sin(U)).ravel(),
        (r * np.sin(W)).ravel(),
    ])
    faces = []
    for i in range(n):
        for j in range(m):
            a, b = i * m + j, ((i + 1) % n) * m + j
            c, d = ((i + 1) % n) * m + (j + 1) % m, i * m + (j + 1) % m
            faces += [[a, b, c], [a, c, d]]
    mesh = TriMesh(v, faces)
    if mesh.volume < 0:
        mesh = mesh.flipped()
    return mesh


def uv_sphere(radius: float, n: int = 32, m: int = 16) -> TriMesh:
    verts = [[0.0, 0.0, -radius]]
    for j in range(1, m):
        phi = -math.pi / 2 + math.pi * j / m
        for i in range(n):
            th = 2.0 * math.pi * i / n
            verts.append([radius * math.cos(phi) * math.cos(th), radius * math.cos(phi) * math.sin(th), radius * math.sin(phi)])
    verts.append([0.0, 0.0, radius])
    top = len(verts) - 1
    faces = []
    for i in range(n):
        faces.append([0, 1 + (i + 1) % n, 1 + i])
    for j in range(m - 2):
        for i in range(n):
            a, b = 1 + j * n + i, 1 + j * n + (i + 1) % n
            faces += [[a, b, b + n], [a, b + n, a + n]]
    base = 1 + (m - 2) * n
    for i in range(n):
        faces.append([base + i, base + (i + 1) % n, top])
    mesh = TriMesh(np.array(verts), faces)
    if mesh.volume < 0:
        mesh = mesh.flipped()
    return mesh


# ---------------------------------------------------------------------------
# sections


def section_frame(direction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal (normal, horizontal, vertical) frame for planes containing the z axis."""
    d = np.asarray(direction, dtype=float)
    d = np.array([d[0], d[1], 0.0])
    ln = np.linalg.norm(d)
    if ln == 0:
        raise ValueError("section normal must have a horizontal component")
    d /= ln
    z = np.array([0.0, 0.0, 1.0])
    u = np.cross(z, d)
    return d, u, z


def section_loops(mesh: TriMesh, normal, offset: float) -> list[np.ndarray]:
    """Closed loops (3D) where the plane ``x . normal = offset`` cuts the mesh.

    Vertices exactly on the plane count as lying above it, which keeps
    every crossing on an edge with strictly separated endpoints.
    """
    s = mesh.vertices @ np.asarray(normal, dtype=float) - offset
    above = s >= 0.0
    F = mesh.faces
    na = above[F].sum(1)
    cut = np.flatnonzero((na == 1) | (na == 2))
    nxt: dict = {}
    for fi in cut.tolist():
        f = F[fi].tolist()
        # for each directed edge crossing from above to below or back,
        # walk the triangle so the segment inherits the face orientation
        cross = []
        for k in range(3):
            a, b = f[k], f[(k + 1) % 3]
            if above[a] != above[b]:
                cross.append((a, b))
        (a1, b1), (a2, b2) = cross
        # orient: start at the edge going from below to above
        if above[a1]:
            e_from, e_to = (a1, b1), (a2, b2)
        else:
            e_from, e_to = (a2, b2), (a1, b1)
        key_from = (min(e_from), max(e_from))
        key_to = (min(e_to), max(e_to))
        nxt[key_from] = key_to
    loops = []
    seen = set()
    V = mesh.vertices

    def point(key):
        a, b = key
        t = s[a] / (s[a] - s[b])
        return V[a] + t * (V[b] - V[a])

    for start in nxt:
        if start in seen:
            continue
        loop = []
        k = start
        while k not in seen:
            seen.add(k)
            loop.append(point(k))
            k = nxt.get(k)
            if k is None:
                raise OpenMesh("section loop does not close")
        loop = _dedupe(np.array(loop), 1e-9 * max(1.0, float(np.ptp(V, axis=0).max())))
        if len(loop) >= 3:
            loops.append(loop)
    return loops


def _dedupe(loop: np.ndarray, tol: float) -> np.ndarray:
    """Drop consecutive coincident points, which appear when vertices sit on the plane."""
    keep = np.linalg.norm(loop - np.roll(loop, 1, axis=0), axis=1) > tol
    if not keep.any():
        return loop[:1]
    return loop[keep]


def drop_collinear(loop: np.ndarray, rel: float = 1e-12) -> np.ndarray:
    """Remove vertices lying on the segment joining their neighbours."""
    loop = np.asarray(loop, dtype=float)
    scale = float(np.ptp(loop, axis=0).max()) if len(loop) else 0.0
    while len(loop) > 3:
        a, b = np.roll(loop, 1, axis=0) - loop, np.roll(loop, -1, axis=0) - loop
        cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        flat = (cross <= rel * scale * scale) & (np.einsum("ij,ij->i", a, b) <= 0)
        if not flat.any():
            break
        # one vertex at a time keeps neighbours of removed points honest
        loop = np.delete(loop, int(np.argmax(flat)), axis=0)
    return loop


def loops_to_polygons(loops2d: list[np.ndarray]) -> list[Polygon]:
    """Group 2D loops into polygons with holes by nesting depth."""
    loops2d = [drop_collinear(lp) for lp in loops2d]
    loops2d = [lp for lp in loops2d if len(lp) >= 3 and abs(signed_area(lp)) > 0]
    shapes = [ShapelyPolygon(lp) for lp in loops2d]
    reps = [lp[0] for lp in loops2d]
    depth, parent = [], []
    for i in range(len(loops2d)):
        cont = [j for j in range(len(loops2d)) if j != i and shapes[j].contains(shapely.points(*reps[i]))]
        depth.append(len(cont))
        parent.append(min(cont, key=lambda j: shapes[j].area) if cont else None)
    out = []
    for i in sorted(range(len(loops2d)), key=lambda i: -shapes[i].area):
        if depth[i] % 2:
            continue
        holes = [loops2d[j] for j in range(len(loops2d)) if parent[j] == i and depth[j] % 2 == 1]
        outer = loops2d[i]
        if signed_area(outer) < 0:
            outer = outer[::-1]
        holes = [h if signed_area(h) < 0 else h[::-1] for h in holes]
        out.append(Polygon(outer, holes, fix_orientation=False))
    return out


def section_polygons(mesh: TriMesh, direction, offset: float) -> list[Polygon]:
    """Cross-section polygons in (horizontal, vertical) plane coordinates."""
    d, u, z = section_frame(direction)
    loops = section_loops(mesh, d, offset)
    return loops_to_polygons([np.column_stack([lp @ u, lp @ z]) for lp in loops])


def silhouette_area(mesh: TriMesh, direction) -> float:
    """Area of the orthogonal projection of the mesh along a horizontal direction."""
    d, u, z = section_frame(direction)
    v = mesh.vertices[mesh.faces]
    n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    front = n @ d > 0
    P = np.stack([v[front] @ u, v[front] @ z], axis=-1)
    e1, e2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    area2 = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    P = P[area2 > 1e-12 * max(area2.max(initial=0.0), 1e-300)]
    if len(P) == 0:
        return 0.0
    tris = shapely.polygons(np.concatenate([P, P[:, :1]], axis=1))
    return float(shapely.union_all(shapely.make_valid(tris)).area)


def choose_section_direction(mesh: TriMesh, n: int = 64) -> np.ndarray:
    """Horizontal section normal with the largest silhouette; ties go to the lowest azimuth index."""
    best, best_area = None, -1.0
    for k in range(n):
        phi = math.pi * k / n
        d = np.array([math.cos(phi), math.sin(phi), 0.0])
        a = silhouette_area(mesh, d)
        if a > best_area * (1.0 + 1e-9):
            best, best_area = d, a
    return best
