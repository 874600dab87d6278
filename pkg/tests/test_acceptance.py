"""Acceptance criteria 1 to 9, each at its stated tolerance; verdicts are printed at the end of the run."""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from hollowforge.apollonius import build_initial
from hollowforge.balance import BalanceProblem, brute_force, center_of_mass, optimize, signed_hull_distance, stand_fixture
from hollowforge.ellipse_vd import refine_vvertex
from hollowforge.extrude import check_stack, emit_hollowed, propagate, slice_mesh
from hollowforge.fixtures import blob_polygon, bunny_outline
from hollowforge.io import dumps, dumps_lines, polygon_to_dict
from hollowforge.mesh import box, cone, extrude_polygon, section_polygons, write_stl
from hollowforge.packer import pack
from hollowforge.polygon import Polygon
from hollowforge.polygon_vd import build_polygon_vd
from hollowforge.supportfree import FabricationParams, branch_bound, is_support_free

from conftest import VERDICTS
from oracles import (
    boundary_gap,
    brute,
    brute_elements,
    grid_equidistant_points,
    min_pairwise_gap,
    random_disjoint,
    random_triple,
    star_polygon,
    support_free_oracle,
)

RELAXED = FabricationParams(delta_wall=2.0, a_min=0.5)


def verdict(n, ok, detail):
    VERDICTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_support_free_law():
    rng = np.random.default_rng(1)
    n = 100_000
    th = rng.uniform(1.0, 89.0, n)
    d0 = rng.uniform(0.1, 20.0, n)
    a_min = rng.uniform(0.1, 2.0, n)
    thr = d0 / (2 * np.cos(np.radians(th)))
    # half the samples straddle the branch threshold, the rest cover the plane
    a = np.where(rng.random(n) < 0.5, rng.uniform(0.05, 60.0, n), thr * rng.uniform(0.8, 1.6, n))
    b = np.where(rng.random(n) < 0.5, rng.uniform(0.05, 120.0, n), a * rng.uniform(0.5, 3.0, n))
    want = support_free_oracle(a, b, th, d0, a_min)
    got = np.array([
        is_support_free(float(a[i]), float(b[i]), FabricationParams(delta0=float(d0[i]), theta0=float(th[i]),
                                                                    a_min=float(a_min[i])))
        for i in range(n)
    ])
    mism = int((got != want).sum())
    worst = 0.0
    for t0, dd in zip(rng.uniform(1.0, 89.0, 100), rng.uniform(0.01, 100.0, 100)):
        x = dd / (2 * math.cos(math.radians(t0)))
        worst = max(worst, abs(branch_bound(x, dd, t0) - x) / x)
    verdict(1, mism == 0 and worst <= 1e-12,
            f"{mism} mismatches in {n} samples; branch continuity rel err {worst:.2e}")


def test_criterion_2_disk_vd_oracle():
    rng = np.random.default_rng(2)
    agree = total = ties = 0
    slowest = 0.0
    for _ in range(200):
        disks = random_disjoint(rng, int(rng.integers(3, 51)))
        D = np.asarray(disks)
        lo, hi = (D[:, :2] - D[:, 2:]).min(0), (D[:, :2] + D[:, 2:]).max(0)
        pad = 0.1 * (hi - lo)
        tie = 1e-9 * float(np.hypot(*(hi - lo + 2 * pad)))
        P = rng.uniform(lo - pad, hi + pad, (10_000, 2))
        t0 = time.perf_counter()
        vd = build_initial(disks)
        g = np.array([vd.locate(p) for p in P])
        slowest = max(slowest, time.perf_counter() - t0)
        d = np.hypot(P[:, None, 0] - D[None, :, 0], P[:, None, 1] - D[None, :, 1]) - D[None, :, 2]
        srt = np.sort(d, axis=1)
        clear = srt[:, 1] - srt[:, 0] > tie
        ties += int((~clear).sum())
        total += int(clear.sum())
        agree += int((d[np.arange(len(P)), g] <= srt[:, 0] + tie)[clear].sum())
    assert brute([(0.0, 0.0, 1.0)], (2.0, 0.0))[0] == 1.0
    verdict(2, agree == total and slowest < 5.0,
            f"{agree}/{total} non-tie samples agree ({ties} ties skipped); slowest instance {slowest:.2f} s")


def _sizes(lo=8, hi=655, n=50):
    out = []
    for v in np.geomspace(lo, hi, n):
        out.append(max(int(round(v)), out[-1] + 1 if out else lo))
    out[-1] = hi
    return out


def test_criterion_3_polygon_vd():
    rng = np.random.default_rng(3)
    sizes = _sizes()
    assert len(sizes) == 50 and sizes[0] == 8 and sizes[-1] == 655 and len(set(sizes)) == 50
    worst_res = 0.0
    agree = total = 0
    for j, n in enumerate(sizes):
        poly = star_polygon(n, 1000 + j) if j % 2 else blob_polygon(n, seed=j)
        tol = 1e-9 * poly.diagonal
        vd = build_polygon_vd(poly)
        worst_res = max([worst_res] + [v.residual / poly.diagonal for v in vd.vertices()])
        x0, y0, x1, y1 = poly.bbox
        P = rng.uniform((x0, y0), (x1, y1), (40_000, 2))
        P = P[poly.contains(P)][:10_000]
        D = brute_elements(poly, P)
        g = np.array([vd.generator_id(vd.locate(p)) for p in P])
        agree += int((D[np.arange(len(P)), g] <= D.min(1) + tol).sum())
        total += len(P)
    rate = agree / total
    verdict(3, worst_res < 1e-9 and rate >= 0.9999,
            f"max residual {worst_res:.1e} x bbox diagonal; location agreement {agree}/{total} = {rate:.6f}")


def test_criterion_4_ellipse_refinement():
    rng = np.random.default_rng(4)
    worst = 0.0
    fast = multi = 0
    for _ in range(500):
        E = random_triple(rng)
        start = (np.mean([e.cx for e in E]), np.mean([e.cy for e in E]))
        r = refine_vvertex(start, E, scale=12.0, fallback=True)
        fast += r.converged and r.iterations <= 20
        roots = grid_equidistant_points(E)
        multi += len(roots) > 1
        worst = max(worst, min((math.hypot(r.x - x, r.y - y) for x, y in roots), default=math.inf))
    verdict(4, worst <= 1e-3 and fast / 500 >= 0.999,
            f"max distance to a grid-search equidistant point {worst:.2e} ({multi} triples with several); "
            f"{fast}/500 converged within 20 iterations")


def test_criterion_5_packing_legality():
    poly = bunny_outline()
    res = pack(poly, RELAXED, max_count=100)
    es = res.ellipses
    sf = all(is_support_free(e.a, e.b, RELAXED) for e in es)
    gap = min_pairwise_gap(es)
    inside = all(poly.contains(np.array([[e.cx, e.cy]]))[0] and boundary_gap(poly, e) > 0 for e in es)
    r = [p.radius for p in res.probe_history]
    g = [p.gamma for p in res.probe_history]
    mono = all(np.diff(r) <= 0) and all(np.diff(g) <= 0)
    verdict(5, len(es) == 100 and sf and gap >= RELAXED.delta_wall - 1e-6 and inside and mono,
            f"{len(es)} ellipses, support-free {sf}, min pair gap {gap:.6f} (wall {RELAXED.delta_wall}), "
            f"inside {inside}, probes non-increasing {mono}")


def test_criterion_6_performance():
    t0 = time.perf_counter()
    res = pack(blob_polygon(500, seed=6), RELAXED, max_count=100)
    t500 = time.perf_counter() - t0
    sizes = [8, 16, 32, 64, 128, 256, 500, 655]
    times = []
    for n in sizes:
        t0 = time.perf_counter()
        r = pack(blob_polygon(n, seed=n), RELAXED, max_count=100)
        times.append(time.perf_counter() - t0)
        assert len(r.ellipses) == 100
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    verdict(6, len(res.ellipses) == 100 and t500 < 30.0 and slope <= 1.5,
            f"500 edges: {len(res.ellipses)} ellipses in {t500:.1f} s; log-log exponent {slope:.2f} over 8..655 edges")


def _reslice_error(out, st):
    worst = 0.0
    for k in range(len(st)):
        holes = [h for q in section_polygons(out, st.normal, st.offsets[k]) for h in q.loops[1:]]
        es = st.slice_ellipses(k)
        if len(holes) != len(es):
            return math.inf
        for e in es:
            h = min(holes, key=lambda h: np.hypot(*(h.mean(0) - [e.cx, e.cy])))
            rad = np.sqrt(((h[:, 0] - e.cx) / e.a) ** 2 + ((h[:, 1] - e.cy) / e.b) ** 2)
            worst = max(worst, float(np.abs(rad - 1).max() * max(e.a, e.b)))
    return worst


def test_criterion_7_extrusion_legality():
    p = FabricationParams()
    parts = []
    ok = True
    for name, mesh in (("prism", extrude_polygon([[0, 0], [120, 0], [120, 90], [0, 90]], 200.0)),
                       ("cone", cone(60.0, 150.0, 64))):
        st = slice_mesh(mesh, [1, 0, 0], params=p)
        propagate(st)
        problems = check_stack(st)
        out = emit_hollowed(st, mesh)  # raises on Euler or self-intersection failure
        n_voids = sum(1 for t in st.tracks.values() if t.members)
        chi = out.euler_characteristic()
        err = _reslice_error(out, st)
        tol = p.error_bound + st.spacing
        good = not problems and out.is_closed_manifold and chi == 2 + 2 * n_voids and n_voids > 0 and err <= tol
        ok &= good
        parts.append(f"{name}: {n_voids} voids, chi {chi}, re-slice err {err:.3f} <= {tol:.3f}, "
                     f"{len(problems)} slice problems")
    verdict(7, ok, "; ".join(parts))


@pytest.fixture(scope="module")
def stand():
    mesh, _ = stand_fixture()
    st = slice_mesh(mesh, [0, 1, 0], params=RELAXED)
    propagate(st)
    return mesh, BalanceProblem.from_stack(st, mesh)


def test_criterion_8_balance(stand):
    mesh, pr = stand
    solid = signed_hull_distance(mesh.centroid[:2], pr.contacts)
    res = optimize(pr, mesh)
    com = center_of_mass(pr.with_gammas(res.gammas), mesh)
    final = signed_hull_distance(com[:2], pr.contacts)
    groups = pr.groups
    matches = []
    for n in range(1, 13):
        keep = set(groups[:n])
        sub = BalanceProblem([v for v in pr.voids if v.group in keep], pr.contacts)
        matches.append(abs(optimize(sub, mesh).objective - brute_force(sub, mesh).objective) <= 1e-9)
    verdict(8, solid >= 5.0 and res.status == "balanced" and final < 0 and all(matches),
            f"solid COM {solid:.2f} mm outside; {len(groups)} voids, refilled {len(res.order)}, "
            f"final distance {final:.3f} mm; greedy = exhaustive for n = 1..12: {sum(matches)}/12")


def _cli(*args):
    r = subprocess.run([sys.executable, "-m", "hollowforge.cli", *map(str, args)], capture_output=True, timeout=600)
    assert r.returncode == 0, r.stderr.decode()


def test_criterion_9_determinism(tmp_path):
    (tmp_path / "bunny.json").write_text(dumps(polygon_to_dict(bunny_outline())))
    (tmp_path / "relaxed.toml").write_text("delta_wall = 2.0\na_min = 0.5\n")
    write_stl(box(30, 20, 16), tmp_path / "cube.stl")
    mesh, prof = stand_fixture()
    write_stl(mesh, tmp_path / "stand.stl")
    res = pack(Polygon(prof), RELAXED, max_count=12)
    rec = {"slice": 0, "offset": 20.0, "spacing": 36.0, "normal": [0.0, 1.0, 0.0], "u": [1.0, 0.0, 0.0],
           "v": [0.0, 0.0, 1.0], "polygons": [{**polygon_to_dict(Polygon(prof)), "ellipses": [
               {"track": i, "cx": e.cx, "cy": e.cy, "a": e.a, "b": e.b, "gamma": 1.0}
               for i, e in enumerate(res.ellipses)]}]}
    (tmp_path / "stand.jsonl").write_text(dumps_lines([rec]))
    cfg = ["--config", tmp_path / "relaxed.toml"]
    for i in range(2):
        _cli("pack2d", tmp_path / "bunny.json", *cfg, "--max-ellipses", 100, "--json", tmp_path / f"p{i}.json")
        _cli("hollow3d", tmp_path / "cube.stl", *cfg, "--max-ellipses", 3, "--json", tmp_path / f"h{i}.jsonl")
        _cli("balance", tmp_path / "stand.jsonl", tmp_path / "stand.stl", "--json", tmp_path / f"b{i}.jsonl",
             "--report", tmp_path / f"r{i}.json")
    names = ("p{}.json", "h{}.jsonl", "b{}.jsonl", "r{}.json")
    same = {n.format("*"): (tmp_path / n.format(0)).read_bytes() == (tmp_path / n.format(1)).read_bytes() for n in names}
    assert json.loads((tmp_path / "r0.json").read_text())["status"] == "balanced"
    verdict(9, all(same.values()), "byte-identical across two runs: " + ", ".join(f"{k} {v}" for k, v in same.items()))
