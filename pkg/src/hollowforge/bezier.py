"""Rational quadratic Bezier arcs for Voronoi edge geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Vec = tuple[float, float]


@dataclass(frozen=True)
class RationalBezier:
    """Conic arc ``(p0 + 2 w t(1-t) p1 + p2 ...) / (...)``; ``w == 1`` is a parabola or line."""

    p0: Vec
    p1: Vec
    p2: Vec
    w: float

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        b0 = (1 - t) ** 2
        b1 = 2 * self.w * t * (1 - t)
        b2 = t * t
        den = b0 + b1 + b2
        x = (b0 * self.p0[0] + b1 * self.p1[0] + b2 * self.p2[0]) / den
        y = (b0 * self.p0[1] + b1 * self.p1[1] + b2 * self.p2[1]) / den
        return np.stack([x, y], axis=-1)

    def sample(self, n: int = 16) -> np.ndarray:
        return self.evaluate(np.linspace(0.0, 1.0, n))


def _line_intersection(p, d, q, e):
    den = d[0] * e[1] - d[1] * e[0]
    if den == 0.0 or abs(den) < 1e-12 * math.hypot(*d) * math.hypot(*e):
        return None
    s = ((q[0] - p[0]) * e[1] - (q[1] - p[1]) * e[0]) / den
    return (p[0] + s * d[0], p[1] + s * d[1])


def bisector_arc(
    p0: Vec,
    p2: Vec,
    gap: Callable[[float, float], float],
    tangent: Callable[[float, float], Vec],
) -> RationalBezier:
    """Fit the bisector between two generators by a conic arc.

    ``gap(x, y)`` is the difference of the two generator distances (zero on
    the bisector) and ``tangent(x, y)`` a tangent direction of the bisector.
    The control point is the meeting point of the end tangents and the
    weight comes from the bisector point on the line from the chord middle
    to the control point.
    """
    m = (0.5 * (p0[0] + p2[0]), 0.5 * (p0[1] + p2[1]))
    chord = math.hypot(p2[0] - p0[0], p2[1] - p0[1])
    if chord == 0.0:
        return RationalBezier(p0, m, p2, 1.0)
    p1 = _line_intersection(p0, tangent(*p0), p2, tangent(*p2))
    if p1 is None or math.hypot(p1[0] - m[0], p1[1] - m[1]) > 1e3 * chord:
        return RationalBezier(p0, m, p2, 1.0)
    h = math.hypot(p1[0] - m[0], p1[1] - m[1])
    if h <= 1e-12 * chord:
        return RationalBezier(p0, m, p2, 1.0)
    fm = gap(*m)
    fp = gap(*p1)
    if abs(fm) <= 1e-12 * chord:
        return RationalBezier(p0, m, p2, 1.0)
    if fm * fp > 0.0:
        return RationalBezier(p0, m, p2, 1.0)
    lo, hi = 0.0, 1.0
    for _ in range(80):
        s = 0.5 * (lo + hi)
        f = gap(m[0] + s * (p1[0] - m[0]), m[1] + s * (p1[1] - m[1]))
        if (f > 0.0) == (fm > 0.0):
            lo = s
        else:
            hi = s
    s = 0.5 * (lo + hi)
    if s >= 1.0 - 1e-15:
        return RationalBezier(p0, p1, p2, 1e15)
    return RationalBezier(p0, p1, p2, s / (1.0 - s))
