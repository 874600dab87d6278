import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hollowforge.ellipse_vd import (
    DiskGen,
    EllipseGen,
    PointGen,
    SegmentGen,
    approximate_ellipse,
    build_dual,
    refine_vvertex,
    trace_vedge,
)
from hollowforge.errors import InvalidErrorBound, NoConvergence, NoInteriorVertex, OverlapViolation
from hollowforge.geom import Disk, Ellipse, ellipse_footprint
from hollowforge.polygon import Polygon, cover_boundary
from oracles import grid_equidistant, random_triple


def horizontal_deviation(e, disks, n=400001):
    y = np.linspace(e.cy - e.b, e.cy + e.b, n)
    w = e.a * np.sqrt(np.clip(1 - ((y - e.cy) / e.b) ** 2, 0, None))
    u = np.zeros_like(y)
    for d in disks:
        u = np.maximum(u, np.sqrt(np.clip(d.r ** 2 - (y - d.y) ** 2, 0, None)))
    return float((w - u).max())


def ellipse_samples(e, n=200000):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([e.cx + e.a * np.cos(t), e.cy + e.b * np.sin(t)])


# -- in-disks -----------------------------------------------------------------


def test_circle_is_its_own_cover():
    for eps in (1e-3, 0.1, 5.0):
        ch = approximate_ellipse(Ellipse(1, 2, 3, 3), eps)
        assert ch.disks == [Disk(1, 2, 3)]


def test_tall_ellipse_deviation_and_parity():
    e = Ellipse(0, 0, 2, 6)
    ch = approximate_ellipse(e, 0.05)
    assert len(ch) >= 3 and len(ch) % 2 == 1
    assert ch.disks[0] == Disk(0, 0, 2)
    assert horizontal_deviation(e, ch.disks) <= 0.05


def test_count_monotone_in_error_bound():
    e = Ellipse(0, 0, 2, 6)
    counts = [len(approximate_ellipse(e, eps)) for eps in (0.2, 0.05, 0.0125)]
    assert counts == sorted(counts)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 10), st.floats(1.0, 8.0), st.floats(0.005, 0.5))
def test_in_disk_invariants(a, ratio, eps):
    e = Ellipse(3.0, -1.0, a, a * ratio)
    ch = approximate_ellipse(e, eps)
    assert len(ch) % 2 == 1
    assert horizontal_deviation(e, ch.disks, 100001) <= eps
    pts = ellipse_samples(e, 20000)
    for d in ch.disks:
        # inscribed: inside the ellipse and touching it
        gap = np.hypot(pts[:, 0] - d.x, pts[:, 1] - d.y).min() - d.r
        assert -1e-9 * e.b <= gap <= 1e-4 * e.b
    for i, p in enumerate(ch.disks):
        for q in ch.disks[:i]:
            assert math.hypot(p.x - q.x, p.y - q.y) + min(p.r, q.r) > max(p.r, q.r)


def test_invalid_error_bound():
    with pytest.raises(InvalidErrorBound):
        approximate_ellipse(Ellipse(0, 0, 1, 2), 0.0)
    with pytest.raises(InvalidErrorBound):
        approximate_ellipse(Ellipse(0, 0, 1, 2), -1.0)


# -- refinement -----------------------------------------------------------------


def test_refine_equilateral_circles():
    gens = [Ellipse(5 * math.cos(t), 5 * math.sin(t), 1, 1) for t in (0.3, 0.3 + 2 * math.pi / 3, 0.3 + 4 * math.pi / 3)]
    r = refine_vvertex((0.4, -0.2), gens, scale=10)
    assert r.converged
    assert math.hypot(r.x, r.y) < 1e-9
    assert r.clearance == pytest.approx(4.0, abs=1e-9)


def test_refine_mirror_ellipses_over_edge():
    gens = [Ellipse(-3, 2, 1, 2), Ellipse(3, 2, 1, 2), SegmentGen((-10, -3), (10, -3))]
    r = refine_vvertex((0.7, 0.0), gens, scale=20)
    assert abs(r.x) < 1e-9
    d = [g.distance(r.x, r.y) if hasattr(g, "distance") else None for g in map(EllipseGen, gens[:2])]
    assert d[0] == pytest.approx(d[1], abs=1e-9)
    assert r.clearance == pytest.approx(r.y + 3, abs=1e-9)


def test_refine_mixed_generators():
    gens = [PointGen(0, 0), DiskGen(Disk(6, 0, 1)), EllipseGen(Ellipse(2, 6, 1, 2), 0.5)]
    r = refine_vvertex((2, 2), gens, scale=10)
    d = [g.distance(r.x, r.y) for g in gens]
    assert max(d) - min(d) < 1e-9 * 10


def test_refine_no_convergence():
    # three parallel lines have no equidistant point
    gens = [SegmentGen((-5, 0), (5, 0)), SegmentGen((-5, 1), (5, 1)), SegmentGen((-5, 2), (5, 2))]
    with pytest.raises(NoConvergence):
        refine_vvertex((0, 0.3), gens, scale=10)
    r = refine_vvertex((0, 0.3), gens, scale=10, fallback=True)
    assert not r.converged and (r.x, r.y) == (0, 0.3)


def test_refine_matches_grid_search():
    rng = np.random.default_rng(11)
    for _ in range(30):
        E = random_triple(rng)
        start = (np.mean([e.cx for e in E]), np.mean([e.cy for e in E]))
        r = refine_vvertex(start, E, scale=12)
        assert r.iterations <= 20
        gx, gy = grid_equidistant(E, start)
        assert math.hypot(r.x - gx, r.y - gy) < 1e-3


# -- tracing ---------------------------------------------------------------------


def test_trace_congruent_circles():
    pts = trace_vedge(Disk(-3, 0, 1), Disk(3, 0, 1), (0, -4), (0, 4), 0.25, scale=10)
    assert np.abs(pts[:, 0]).max() < 1e-9
    assert tuple(pts[0]) == (0, -4) and tuple(pts[-1]) == (0, 4)
    assert np.diff(pts[:, 1]).min() > 0
    assert np.hypot(*np.diff(pts, axis=0).T).max() <= 0.25 + 1e-12


def test_trace_circle_and_line_is_parabola():
    h, r = 5.0, 1.0

    def par(x):
        return (x * x + h * h - r * r) / (2 * (h + r))

    pts = trace_vedge(Disk(0, h, r), SegmentGen((-50, 0), (50, 0)), (-3, par(-3)), (3, par(3)), 0.1, scale=10)
    assert np.abs(pts[:, 1] - par(pts[:, 0])).max() < 1e-8
    assert np.hypot(*np.diff(pts, axis=0).T).max() <= 0.1 + 1e-12


def test_trace_unequal_ellipses():
    g1, g2 = EllipseGen(Ellipse(-4, 0, 1, 3)), EllipseGen(Ellipse(3, 1, 2, 1))

    def on_bisector(y):
        from scipy.optimize import brentq

        return brentq(lambda x: g1.distance(x, y) - g2.distance(x, y), -2.9, 0.9, xtol=1e-14), y

    a, b = on_bisector(-3.0), on_bisector(4.0)
    pts = trace_vedge(g1, g2, a, b, 0.2, scale=10)
    for x, y in pts:
        f1 = ellipse_footprint((x, y), g1.ellipse)
        f2 = ellipse_footprint((x, y), g2.ellipse)
        assert abs(math.hypot(x - f1[0], y - f1[1]) - math.hypot(x - f2[0], y - f2[1])) < 1e-8 * 10


# -- dual diagram ------------------------------------------------------------------

LSHAPE = Polygon([(0, 0), (30, 0), (30, 12), (13, 12), (13, 25), (0, 25)])


def dual(poly=LSHAPE, offset=0.0, r=0.6):
    return build_dual(poly, 0.05, offset, cover_boundary(poly, max_radius=r))


def test_probe_square_and_rectangle():
    sq = Polygon([(0, 0), (10, 0), (10, 10), (0, 10)])
    D = build_dual(sq, 0.1, cover=cover_boundary(sq, max_radius=0.2))
    v, r = D.max_clearance_probe()
    rmax = max(d.r for d in D.cover.disks)
    assert math.hypot(v.x - 5, v.y - 5) < 1e-9
    assert 5 - 2 * rmax <= r <= 5
    rect = Polygon([(0, 0), (10, 0), (10, 4), (0, 4)])
    D = build_dual(rect, 0.1, cover=cover_boundary(rect, max_radius=0.05))
    v, r = D.max_clearance_probe()
    assert v.y == pytest.approx(2.0, abs=1e-6)
    assert r == pytest.approx(2.0, abs=0.1)


def test_probe_shrinks_after_insert():
    sq = Polygon([(0, 0), (10, 0), (10, 10), (0, 10)])
    D = build_dual(sq, 0.1, cover=cover_boundary(sq, max_radius=0.2))
    _, r0 = D.max_clearance_probe()
    D.insert_ellipse(Ellipse(5, 5, 2, 3))
    v, r1 = D.max_clearance_probe()
    assert r1 < r0
    arr = np.array(D.vd.disks)
    assert (np.hypot(arr[:, 0] - v.x, arr[:, 1] - v.y) - arr[:, 2]).min() >= r1 - 1e-9


def test_probe_ties_and_empty():
    D = dual()
    v, r = D.max_clearance_probe()
    for f in D.vd.faces():
        if D.vd.is_finite_face(f) and LSHAPE.contains([(f.x, f.y)])[0] and f.t > r + 1e-9:
            arr = np.array(D.vd.disks)
            assert (np.hypot(arr[:, 0] - f.x, arr[:, 1] - f.y) - arr[:, 2]).min() < f.t - 1e-9


def test_insert_counts_and_contraction():
    D = dual()
    cells, disks = len(D.entities), len(D.vd)
    chain = approximate_ellipse(Ellipse(6.3, 6.1, 2.2, 3.4), D.eps0)
    D.insert_ellipse(Ellipse(6.3, 6.1, 2.2, 3.4))
    assert len(D.entities) == cells + 1
    assert len(D.vd) == disks + len(chain)
    D.insert_ellipse(Ellipse(21.0, 5.2, 1.5, 2.5))
    # oracle: contract the disk adjacency graph by parent
    want = set()
    for e in D.vd.edges():
        if e.unbounded:
            continue
        pa, pb = D.vd.parent(e.sites[0]), D.vd.parent(e.sites[1])
        if pa != pb:
            want.add(tuple(sorted((pa, pb), key=repr)))
    got = {e.entities for e in D.entity_edges()}
    assert got == want
    for ev in D.entity_vertices():
        assert len(set(ev.entities)) == 3


def test_reverse_in_disk_order_isomorphic():
    es = [Ellipse(6.3, 6.1, 2.2, 3.4), Ellipse(21.0, 5.2, 1.5, 2.5), Ellipse(6.1, 19.7, 1.9, 2.6)]
    A, B = dual(), dual()
    for e in es:
        A.insert_ellipse(e)
        B.insert_ellipse(e, reverse=True)
    assert A.topology_signature() == B.topology_signature()
    assert Counter(e.entities for e in A.entity_edges()) == Counter(e.entities for e in B.entity_edges())


def test_overlap_violation():
    D = dual(offset=0.5)
    D.insert_ellipse(Ellipse(6.3, 6.1, 2.2, 3.4))
    n = len(D.vd)
    with pytest.raises(OverlapViolation):
        D.insert_ellipse(Ellipse(7.0, 6.0, 1.0, 2.0))
    with pytest.raises(OverlapViolation):
        D.insert_ellipse(Ellipse(1.0, 6.0, 1.0, 2.0))
    assert len(D.vd) == n and len(D.ellipses) == 1


def test_entity_vertex_refinement_synchronized():
    D = dual()
    D.insert_ellipse(Ellipse(6.3, 6.1, 2.2, 3.4))
    D.insert_ellipse(Ellipse(21.0, 5.2, 1.5, 2.5))
    hits = 0
    for ev in D.entity_vertices():
        if sum(1 for p in ev.entities if p[0] == "E") == 0:
            continue
        r = D.refine(ev)
        if r.converged:
            hits += 1
            cover_r = max(d.r for d in D.cover.disks)
            assert math.hypot(r.x - ev.x, r.y - ev.y) <= D.eps0 + 2 * cover_r + 1e-6 * D.scale
    assert hits > 0


def test_no_interior_vertex():
    D = dual()
    D._heap.clear()
    with pytest.raises(NoInteriorVertex):
        D.max_clearance_probe()


def test_svg_layers():
    D = dual()
    D.insert_ellipse(Ellipse(6.3, 6.1, 2.2, 3.4))
    text = D.to_svg(probes=[(6, 6, 1)])
    for layer in ("polygon", "disks", "vd-edges", "probes", "in-disks", "ellipses"):
        assert f'id="{layer}"' in text
