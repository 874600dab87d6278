import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from hollowforge.errors import NonManifold, OpenMesh
from hollowforge.mesh import (
    TriMesh,
    box,
    choose_section_direction,
    cone,
    extrude_polygon,
    read_mesh,
    section_polygons,
    silhouette_area,
    torus,
    uv_sphere,
    write_stl,
)
from hollowforge.polygon import signed_area

from oracles import ray_volume


def hull_silhouette(mesh, phi):
    """Projected area of a convex mesh: area of the 2D hull of projected vertices."""
    d = np.array([math.cos(phi), math.sin(phi), 0.0])
    u = np.cross([0, 0, 1.0], d)
    pts = np.column_stack([mesh.vertices @ u, mesh.vertices[:, 2]])
    return ConvexHull(pts).volume


def test_box_mass_properties():
    b = box(10, 20, 30)
    assert b.is_closed_manifold
    assert b.volume == pytest.approx(6000)
    assert b.centroid == pytest.approx([5, 10, 15])
    assert b.euler_characteristic() == 2


@pytest.mark.parametrize("mesh,vol", [
    (uv_sphere(10, 48, 24), None),
    (torus(40, 10), None),
    (cone(50, 120, 48), None),
])
def test_volume_matches_ray_oracle(mesh, vol):
    assert mesh.volume == pytest.approx(ray_volume(mesh.vertices, mesh.faces, 80), rel=0.01)


def test_torus_topology():
    t = torus(40, 10)
    assert t.is_closed_manifold
    assert t.euler_characteristic() == 0


def test_open_and_nonmanifold_detected():
    b = box(1, 1, 1)
    with pytest.raises(OpenMesh):
        TriMesh(b.vertices, b.faces[:-1]).check_closed()
    with pytest.raises(NonManifold):
        TriMesh(b.vertices, np.vstack([b.faces, b.faces[:1]])).check_closed()


def test_contains():
    s = uv_sphere(10)
    assert s.contains([[0, 0, 0], [9, 0, 0], [11, 0, 0], [0, 0, -10.5]]).tolist() == [True, True, False, False]


def test_box_direction_maximizes_silhouette():
    b = box(10, 20, 30)
    d = choose_section_direction(b)
    phis = [math.pi * k / 64 for k in range(64)]
    best = max(hull_silhouette(b, f) for f in phis)
    assert silhouette_area(b, d) == pytest.approx(best, rel=1e-9)
    # at least the face-on 20 x 30 projection
    assert silhouette_area(b, d) >= 600 - 1e-9
    assert silhouette_area(b, [1, 0, 0]) == pytest.approx(600)


def test_silhouette_matches_hull_oracle():
    c = cone(30, 80, 40, axis=1)
    for k in (0, 5, 17, 40):
        phi = math.pi * k / 64
        d = [math.cos(phi), math.sin(phi), 0]
        assert silhouette_area(c, d) == pytest.approx(hull_silhouette(c, phi), rel=1e-9)


def test_sphere_tie_breaks_to_first_azimuth():
    s = uv_sphere(10, 64, 32)
    areas = [silhouette_area(s, [math.cos(math.pi * k / 64), math.sin(math.pi * k / 64), 0]) for k in range(64)]
    d = choose_section_direction(s)
    k = int(np.argmax(np.array(areas) > max(areas) / (1 + 1e-9)))
    assert d == pytest.approx([math.cos(math.pi * k / 64), math.sin(math.pi * k / 64), 0])


def test_slab_picks_face_on_direction():
    slab = box(100, 2, 100)
    d = choose_section_direction(slab)
    assert abs(d[1]) == pytest.approx(1.0)


def test_unit_cube_sections():
    c = box(1, 1, 1)
    for x in np.arange(0.125, 1.0, 0.25):
        (p,) = section_polygons(c, [1, 0, 0], x)
        assert p.area == pytest.approx(1.0)
        assert np.ptp(p.loops[0], axis=0) == pytest.approx([1, 1])
        assert len(p.loops[0]) == 4


def test_torus_sections_have_holes():
    t = torus(40, 10, 128, 48)
    # rotate so the ring axis is x and planes x = c pass through the hole
    t = TriMesh(t.vertices[:, [2, 0, 1]], t.faces)
    polys = section_polygons(t, [1, 0, 0], 3.0)
    assert len(polys) == 1
    outer, hole = polys[0].loops
    assert signed_area(outer) > 0 > signed_area(hole)
    r_out = np.hypot(outer[:, 0], outer[:, 1])
    r_in = np.hypot(hole[:, 0], hole[:, 1])
    assert r_out.max() == pytest.approx(40 + math.sqrt(91), rel=0.01)
    assert r_in.min() == pytest.approx(40 - math.sqrt(91), rel=0.01)


@pytest.mark.parametrize("mesh", [uv_sphere(20, 64, 32), torus(40, 10, 64, 32), cone(40, 100, 64)])
def test_section_volume_within_two_percent(mesh):
    lo, hi = mesh.bbox
    h = (hi[0] - lo[0]) / 100
    xs = lo[0] + h * (np.arange(100) + 0.5)
    vol = sum(p.area for x in xs for p in section_polygons(mesh, [1, 0, 0], x)) * h
    assert vol == pytest.approx(mesh.volume, rel=0.02)


def test_prism_fixture():
    p = extrude_polygon([[0, 0], [60, 0], [60, 80], [0, 80]], 200)
    assert p.is_closed_manifold
    assert p.volume == pytest.approx(960000)
    (s,) = section_polygons(p, [1, 0, 0], 77.0)
    assert s.area == pytest.approx(4800)


def test_stl_roundtrip_binary_and_ascii(tmp_path):
    t = torus(30, 8, 24, 12)
    path = tmp_path / "t.stl"
    write_stl(t, path)
    r = read_mesh(path)
    assert r.is_closed_manifold
    assert len(r.faces) == len(t.faces)
    assert r.volume == pytest.approx(t.volume, rel=1e-5)
    lines = ["solid x"]
    for f in t.vertices[t.faces]:
        lines += ["facet normal 0 0 0", "outer loop"] + [f"vertex {float(a)!r} {float(b)!r} {float(c)!r}" for a, b, c in f] + ["endloop", "endfacet"]
    lines.append("endsolid x")
    path.write_text("\n".join(lines))
    r = read_mesh(path)
    assert r.is_closed_manifold and r.volume == pytest.approx(t.volume)


def test_obj_reader(tmp_path):
    path = tmp_path / "b.obj"
    b = box(2, 3, 4)
    path.write_text("\n".join([f"v {x} {y} {z}" for x, y, z in b.vertices] + [f"f {a+1}/1 {b_+1}/1 {c+1}/1" for a, b_, c in b.faces]))
    r = read_mesh(path)
    assert r.volume == pytest.approx(24)
