"""Primitive geometry: points, disks, ellipses, segments and distances.

Scalar routines work on plain floats through ``math`` because they sit in
the hot loop of the Voronoi construction; the ``*_np`` variants are
vectorized with numpy and are used for sampling and verification.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CollinearInput

COLLINEAR_TOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


class Disk(NamedTuple):
    x: float
    y: float
    r: float

    @property
    def center(self) -> Point2:
        return Point2(self.x, self.y)

    @property
    def radius(self) -> float:
        return self.r


class Ellipse(NamedTuple):
    """Axis-aligned ellipse; ``a`` is the horizontal and ``b`` the vertical semi-axis."""

    cx: float
    cy: float
    a: float
    b: float

    @property
    def center(self) -> Point2:
        return Point2(self.cx, self.cy)

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b

    def scaled(self, factor: float) -> "Ellipse":
        return Ellipse(self.cx, self.cy, self.a * factor, self.b * factor)

    def boundary(self, n: int = 64) -> np.ndarray:
        t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        return np.column_stack([self.cx + self.a * np.cos(t), self.cy + self.b * np.sin(t)])


class Segment(NamedTuple):
    p0: Point2
    p1: Point2


def bbox_diagonal(points: Sequence[Sequence[float]]) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    span = pts.max(axis=0) - pts.min(axis=0)
    return float(math.hypot(span[0], span[1]))


def orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def circumcircle(p1, p2, p3, tol: float = COLLINEAR_TOL) -> Disk:
    """Circle through three points.

    Raises CollinearInput when the points are collinear relative to the
    squared bounding-box diagonal of the triple.
    """
    pts = [(float(p1[0]), float(p1[1])), (float(p2[0]), float(p2[1])), (float(p3[0]), float(p3[1]))]
    side = [math.dist(pts[1], pts[2]), math.dist(pts[0], pts[2]), math.dist(pts[0], pts[1])]
    k = max(range(3), key=lambda i: side[i])
    # base the solve at the vertex opposite the longest side (least cancellation)
    (x1, y1), (x2, y2), (x3, y3) = pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]
    bx, by = x2 - x1, y2 - y1
    cx, cy = x3 - x1, y3 - y1
    d = 2.0 * (bx * cy - by * cx)
    span = max(x1, x2, x3) - min(x1, x2, x3), max(y1, y2, y3) - min(y1, y2, y3)
    scale = span[0] * span[0] + span[1] * span[1]
    if scale == 0.0 or abs(d) < tol * scale:
        raise CollinearInput(f"collinear points {p1}, {p2}, {p3}")
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    return Disk(x1 + ux, y1 + uy, math.hypot(ux, uy))


def distance_point_segment(p, s) -> float:
    (px, py) = p
    (x0, y0), (x1, y1) = s
    dx, dy = x1 - x0, y1 - y0
    ll = dx * dx + dy * dy
    if ll == 0.0:
        return math.hypot(px - x0, py - y0)
    t = ((px - x0) * dx + (py - y0) * dy) / ll
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - (x0 + t * dx), py - (y0 + t * dy))


def closest_point_segment(p, s):
    """Closest point on the closed segment and its parameter in [0, 1]."""
    (px, py) = p
    (x0, y0), (x1, y1) = s
    dx, dy = x1 - x0, y1 - y0
    ll = dx * dx + dy * dy
    if ll == 0.0:
        return (x0, y0), 0.0
    t = ((px - x0) * dx + (py - y0) * dy) / ll
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return (x0 + t * dx, y0 + t * dy), t


def distance_point_disk(p, d) -> float:
    """Signed distance to the disk boundary (negative inside)."""
    return math.hypot(p[0] - d[0], p[1] - d[1]) - d[2]


def footprint_disk(p, d):
    dx, dy = p[0] - d[0], p[1] - d[1]
    n = math.hypot(dx, dy)
    if n == 0.0:
        return (d[0] + d[2], d[1])
    return (d[0] + d[2] * dx / n, d[1] + d[2] * dy / n)


# ---------------------------------------------------------------------------
# polynomial roots


def _cubic_real_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of x^3 + a x^2 + b x + c."""
    q = (a * a - 3.0 * b) / 9.0
    r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0
    q3 = q * q * q
    if r * r < q3:
        t = max(-1.0, min(1.0, r / math.sqrt(q3)))
        th = math.acos(t)
        sq = -2.0 * math.sqrt(q)
        return [
            sq * math.cos(th / 3.0) - a / 3.0,
            sq * math.cos((th + 2.0 * math.pi) / 3.0) - a / 3.0,
            sq * math.cos((th - 2.0 * math.pi) / 3.0) - a / 3.0,
        ]
    aa = -math.copysign((abs(r) + math.sqrt(r * r - q3)) ** (1.0 / 3.0), r)
    bb = q / aa if aa != 0.0 else 0.0
    return [(aa + bb) - a / 3.0]


def _polish(coeffs, x: float, steps: int = 4) -> float:
    for _ in range(steps):
        f = 0.0
        df = 0.0
        for c in coeffs:
            df = df * x + f
            f = f * x + c
        if df == 0.0:
            break
        dx = f / df
        x -= dx
        if abs(dx) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def quartic_real_roots(c4: float, c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of a quartic via Ferrari's resolvent cubic plus Newton polish."""
    a, b, c, d = c3 / c4, c2 / c4, c1 / c4, c0 / c4
    p = b - 3.0 * a * a / 8.0
    q = c - a * b / 2.0 + a * a * a / 8.0
    r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a ** 4 / 256.0
    scale = max(abs(p), math.sqrt(abs(r)), abs(q) ** (2.0 / 3.0), 1e-300)
    ys: list[float] = []
    if abs(q) <= 1e-14 * scale ** 1.5:
        disc = p * p - 4.0 * r
        if disc < 0.0:
            disc = 0.0 if disc > -1e-12 * p * p else disc
        if disc >= 0.0:
            sd = math.sqrt(disc)
            for z in ((-p + sd) / 2.0, (-p - sd) / 2.0):
                if z >= 0.0:
                    s = math.sqrt(z)
                    ys.extend((s, -s))
                elif z > -1e-12 * scale:
                    ys.append(0.0)
    else:
        ms = _cubic_real_roots(p, (p * p - 4.0 * r) / 4.0, -q * q / 8.0)
        m = max(ms)
        if m <= 0.0:
            m = 1e-300
        s2m = math.sqrt(2.0 * m)
        for sgn in (1.0, -1.0):
            # y^2 - sgn*s2m*y + (p/2 + m + sgn*q/(2*s2m)) = 0
            bq = -sgn * s2m
            cq = p / 2.0 + m + sgn * q / (2.0 * s2m)
            disc = bq * bq - 4.0 * cq
            if disc < 0.0:
                if disc > -1e-10 * max(bq * bq, abs(cq), 1e-300):
                    disc = 0.0
                else:
                    continue
            sd = math.sqrt(disc)
            ys.extend(((-bq + sd) / 2.0, (-bq - sd) / 2.0))
    coeffs = (1.0, a, b, c, d)
    return [_polish(coeffs, y - a / 4.0) for y in ys]


# ---------------------------------------------------------------------------
# ellipse footprint


def _ellipse_g(a, b, u, v, th):
    s, c = math.sin(th), math.cos(th)
    g = (b * b - a * a) * s * c + a * u * s - b * v * c
    dg = (b * b - a * a) * (c * c - s * s) + a * u * c + b * v * s
    return g, dg


def ellipse_footprint(p, e: Ellipse) -> Point2:
    """Nearest point of the ellipse boundary to ``p``.

    Candidates are the perpendicular feet from the quartic in the
    Lagrange multiplier plus the axis vertices; the winner is polished by
    Newton iteration on the boundary angle so it lies on the curve.
    """
    cx, cy, a, b = e
    u = p[0] - cx
    v = p[1] - cy
    if a == b:
        n = math.hypot(u, v)
        if n == 0.0:
            return Point2(cx + a, cy)
        return Point2(cx + a * u / n, cy + a * v / n)
    su = -1.0 if u < 0.0 else 1.0
    sv = -1.0 if v < 0.0 else 1.0
    U, V = abs(u), abs(v)
    A, B = a * a, b * b
    cands = [(a, 0.0), (0.0, b)]
    roots = quartic_real_roots(
        1.0,
        2.0 * (A + B),
        (A + B) ** 2 + 2.0 * A * B - A * U * U - B * V * V,
        2.0 * A * B * (A + B - U * U - V * V),
        A * A * B * B - A * B * B * U * U - A * A * B * V * V,
    )
    for t in roots:
        da, db = A + t, B + t
        if da == 0.0 or db == 0.0:
            continue
        x, y = A * U / da, B * V / db
        if x >= 0.0 and y >= 0.0:
            cands.append((x, y))
    if A != B:
        y = B * V / (B - A)
        w = 1.0 - y * y / B
        if w >= 0.0 and y >= 0.0:
            cands.append((a * math.sqrt(w), y))
        x = A * U / (A - B)
        w = 1.0 - x * x / A
        if w >= 0.0 and x >= 0.0:
            cands.append((x, b * math.sqrt(w)))
    best = min(cands, key=lambda q: (q[0] - U) ** 2 + (q[1] - V) ** 2)
    th = math.atan2(best[1] / b, best[0] / a)
    for _ in range(6):
        g, dg = _ellipse_g(a, b, U, V, th)
        if dg <= 0.0:
            break
        step = g / dg
        th -= step
        if abs(step) < 1e-15:
            break
    th = min(max(th, 0.0), math.pi / 2.0)
    x, y = a * math.cos(th), b * math.sin(th)
    return Point2(cx + su * x, cy + sv * y)


def point_in_ellipse(p, e: Ellipse) -> bool:
    return ((p[0] - e[0]) / e[2]) ** 2 + ((p[1] - e[1]) / e[3]) ** 2 <= 1.0


def distance_point_ellipse(p, e: Ellipse) -> float:
    """Signed distance to the ellipse boundary (negative inside)."""
    f = ellipse_footprint(p, e)
    d = math.hypot(p[0] - f[0], p[1] - f[1])
    return -d if point_in_ellipse(p, e) else d


# ---------------------------------------------------------------------------
# vectorized helpers


def _robust_length(x, y):
    return np.hypot(x, y)


def ellipse_footprint_np(points, e: Ellipse, iters: int = 110):
    """Vectorized nearest boundary points by bisection on the Lagrange multiplier.

    Independent of the scalar quartic path; returns (footprints, distances)
    with distances signed negative inside.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    cx, cy, a, b = e
    u = pts[:, 0] - cx
    v = pts[:, 1] - cy
    swap = b > a
    e0, e1 = (b, a) if swap else (a, b)
    y0 = np.abs(v if swap else u)
    y1 = np.abs(u if swap else v)
    x0 = np.empty_like(y0)
    x1 = np.empty_like(y1)

    both = (y1 > 0) & (y0 > 0)
    if np.any(both):
        z0 = y0[both] / e0
        z1 = y1[both] / e1
        g = z0 * z0 + z1 * z1 - 1.0
        r0 = (e0 / e1) ** 2
        n0 = r0 * z0
        s0 = z1 - 1.0
        s1 = np.where(g < 0, 0.0, _robust_length(n0, z1) - 1.0)
        s = 0.5 * (s0 + s1)
        for _ in range(iters):
            s = 0.5 * (s0 + s1)
            ratio0 = n0 / (s + r0)
            ratio1 = z1 / (s + 1.0)
            gg = ratio0 * ratio0 + ratio1 * ratio1 - 1.0
            pos = gg > 0
            s0 = np.where(pos, s, s0)
            s1 = np.where(pos, s1, s)
        x0[both] = r0 * y0[both] / (s + r0)
        x1[both] = y1[both] / (s + 1.0)
        on = g == 0
        idx = np.flatnonzero(both)[on]
        x0[idx] = y0[idx]
        x1[idx] = y1[idx]
    only1 = (y1 > 0) & ~(y0 > 0)
    x0[only1] = 0.0
    x1[only1] = e1
    axis0 = ~(y1 > 0)
    if np.any(axis0):
        numer0 = e0 * y0[axis0]
        denom0 = e0 * e0 - e1 * e1
        inner = numer0 < denom0
        xde0 = np.where(inner, numer0 / denom0 if denom0 > 0 else 1.0, 1.0)
        xa = np.where(inner, e0 * xde0, e0)
        xb = np.where(inner, e1 * np.sqrt(np.clip(1.0 - xde0 * xde0, 0.0, None)), 0.0)
        x0[axis0] = xa
        x1[axis0] = xb
    fx = np.sign(u) * (x1 if swap else x0)
    fy = np.sign(v) * (x0 if swap else x1)
    fx = np.where(u == 0, (x1 if swap else x0), fx)
    fy = np.where(v == 0, (x0 if swap else x1), fy)
    foot = np.column_stack([cx + fx, cy + fy])
    dist = np.hypot(pts[:, 0] - foot[:, 0], pts[:, 1] - foot[:, 1])
    inside = (u / a) ** 2 + (v / b) ** 2 < 1.0
    return foot, np.where(inside, -dist, dist)


def distance_points_segments_np(points, seg_a, seg_b):
    """Distance matrix from points (n,2) to segments given by endpoint arrays (m,2)."""
    p = np.asarray(points, dtype=float).reshape(-1, 1, 2)
    a = np.asarray(seg_a, dtype=float).reshape(1, -1, 2)
    b = np.asarray(seg_b, dtype=float).reshape(1, -1, 2)
    ab = b - a
    ll = np.einsum("...k,...k->...", ab, ab)
    ll = np.where(ll == 0.0, 1.0, ll)
    t = np.clip(np.einsum("...k,...k->...", p - a, ab) / ll, 0.0, 1.0)
    q = a + t[..., None] * ab
    return np.linalg.norm(p - q, axis=-1), t


def ellipse_ellipse_distance(e1: Ellipse, e2: Ellipse, samples: int = 256) -> float:
    """Gap between two ellipse boundaries (negative or zero if they overlap)."""
    t = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    pts = np.column_stack([e1.cx + e1.a * np.cos(t), e1.cy + e1.b * np.sin(t)])
    _, d = ellipse_footprint_np(pts, e2)
    if np.any(d <= 0):
        return float(min(d.min(), 0.0))
    k = int(np.argmin(d))
    h = 2.0 * math.pi / samples
    lo, hi = t[k] - h, t[k] + h

    def f(th):
        q = np.array([[e1.cx + e1.a * math.cos(th), e1.cy + e1.b * math.sin(th)]])
        return float(ellipse_footprint_np(q, e2)[1][0])

    gr = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - gr * (hi - lo)
    x2 = lo + gr * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(60):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - gr * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + gr * (hi - lo)
            f2 = f(x2)
    return min(f1, f2, float(d[k]))
