"""Greedy packing of support-free ellipses into a polygon."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .ellipse_vd import DualVD, build_dual
from .errors import HollowForgeError, NoInteriorVertex, ProbeTooSmall
from .geom import Ellipse
from .polygon import Polygon, cover_boundary
from .supportfree import FabricationParams, max_support_free_ellipse

log = logging.getLogger(__name__)


@dataclass
class Probe:
    x: float
    y: float
    radius: float
    gamma: float


@dataclass
class PackingResult:
    ellipses: list[Ellipse]
    probe_history: list[Probe]
    packing_ratio: float
    timings: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, timings: bool = False) -> dict:
        """Plain data for JSON; timings are left out unless asked for, so output is reproducible."""
        out = {
            "ellipses": [{"cx": e.cx, "cy": e.cy, "a": e.a, "b": e.b} for e in self.ellipses],
            "probes": [{"x": p.x, "y": p.y, "radius": p.radius, "gamma": p.gamma} for p in self.probe_history],
            "packing_ratio": self.packing_ratio,
            "diagnostics": self.diagnostics,
        }
        if timings:
            out["timings"] = self.timings
        return out


def wall_offset(p: FabricationParams) -> float:
    """Margin added to every in-disk: half the wall plus the approximation error."""
    return 0.5 * p.delta_wall + p.error_bound


def probe_gamma(radius: float, p: FabricationParams) -> float:
    """Height of the ellipse hosted by a probe of the given radius."""
    g = p.rho * radius
    if g <= 0.5 * p.delta_wall:
        g = radius - 0.5 * p.delta_wall
    return min(g, radius - wall_offset(p))


def max_clearance_probe(dual: DualVD):
    return dual.max_clearance_probe()


def default_cover_radius(p: FabricationParams) -> float:
    return p.delta_wall / 10.0


def pack(
    poly: Polygon,
    p: FabricationParams | None = None,
    max_count: int | None = None,
    cover_radius: float | None = None,
    dual: DualVD | None = None,
    cover: str = "adaptive",
) -> PackingResult:
    """Insert the widest support-free ellipse at the largest clearance probe until none fits."""
    p = FabricationParams() if p is None else p
    timings = {"cover": 0.0, "probe": 0.0, "insert": 0.0}
    diag: dict = {"stop": None}
    t0 = time.perf_counter()
    if dual is None:
        r = default_cover_radius(p) if cover_radius is None else cover_radius
        if cover == "uniform":
            # lstar at most the shortest edge puts every remainder disk between two full ones
            disks = cover_boundary(poly, mode="uniform", lstar=min(4.0 * r, float(poly.edge_lengths().min())))
        else:
            disks = cover_boundary(poly, max_radius=r)
        dual = build_dual(poly, p.error_bound, wall_offset(p), disks)
    timings["cover"] = time.perf_counter() - t0
    ellipses: list[Ellipse] = []
    history: list[Probe] = []
    try:
        while max_count is None or len(ellipses) < max_count:
            t0 = time.perf_counter()
            try:
                v, radius = dual.max_clearance_probe()
            except NoInteriorVertex:
                diag["stop"] = "no interior vertex"
                break
            if history:
                # both sequences are kept non-increasing; the raw rule can
                # jump upward when rho < 1/2
                radius = min(radius, history[-1].radius)
            gamma = probe_gamma(radius, p)
            if history:
                gamma = min(gamma, history[-1].gamma)
            timings["probe"] += time.perf_counter() - t0
            try:
                if gamma <= 0:
                    raise ProbeTooSmall(f"probe radius {radius:.6g} leaves no room for the wall")
                e = max_support_free_ellipse(gamma, p, (v.x, v.y))
            except ProbeTooSmall as exc:
                diag["stop"] = f"probe too small: {exc}"
                break
            t0 = time.perf_counter()
            dual.insert_ellipse(e)
            timings["insert"] += time.perf_counter() - t0
            ellipses.append(e)
            history.append(Probe(v.x, v.y, radius, gamma))
        else:
            diag["stop"] = "count cap"
    except HollowForgeError as exc:
        log.error("packing aborted: %s", exc)
        diag["stop"] = "error"
        diag["error"] = f"{type(exc).__name__}: {exc}"
    area = poly.area
    ratio = sum(e.area for e in ellipses) / area if area > 0 else 0.0
    diag["count"] = len(ellipses)
    diag["disks"] = len(dual.vd)
    res = PackingResult(ellipses, history, ratio, timings, diag)
    res.dual = dual
    return res
