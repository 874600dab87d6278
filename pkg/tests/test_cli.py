import json
import logging
import os
import subprocess
import sys

import numpy as np
import pytest

from hollowforge import cli
from hollowforge.balance import stand_fixture
from hollowforge.errors import NoConvergence
from hollowforge.fixtures import bunny_outline
from hollowforge.io import dumps, dumps_lines, polygon_to_dict
from hollowforge.mesh import TriMesh, box, choose_section_direction, read_mesh, write_stl
from hollowforge.packer import pack
from hollowforge.polygon import Polygon
from hollowforge.supportfree import FabricationParams

LAYERS = ("polygon", "vd-edges", "probes", "ellipses", "in-disks")


@pytest.fixture
def work(tmp_path):
    (tmp_path / "bunny.json").write_text(dumps(polygon_to_dict(bunny_outline())))
    (tmp_path / "relaxed.toml").write_text("delta_wall = 2.0\na_min = 0.5\n")
    write_stl(box(30, 20, 16), tmp_path / "cube.stl")
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_pack2d_writes_json_and_layered_svg(work):
    assert run("pack2d", work / "bunny.json", "--config", work / "relaxed.toml", "--max-ellipses", 10,
               "--json", work / "o.json", "--svg", work / "o.svg", "--stats", work / "s.json") == 0
    d = json.loads((work / "o.json").read_text())
    assert len(d["ellipses"]) == 10 and d["diagnostics"]["stop"] == "count cap"
    svg = (work / "o.svg").read_text()
    assert all(f'<g id="{name}">' in svg for name in LAYERS)
    assert "timings" not in d and "timings" in json.loads((work / "s.json").read_text())


def test_pack2d_cap_reports_reason(work):
    assert run("pack2d", work / "bunny.json", "--max-ellipses", 100, "--json", work / "o.json") == 0
    d = json.loads((work / "o.json").read_text())
    assert len(d["ellipses"]) <= 100 and d["diagnostics"]["stop"]


def test_pack2d_to_stdout(work, capsys):
    assert run("pack2d", work / "bunny.json", "--config", work / "relaxed.toml", "--max-ellipses", 2) == 0
    assert len(json.loads(capsys.readouterr().out)["ellipses"]) == 2


def test_malformed_json_exit_2(work, caplog):
    (work / "bad.json").write_text('{"outer": [[0, 0],\n [1, 0]\n]')
    with caplog.at_level(logging.ERROR):
        assert run("pack2d", work / "bad.json") == 2
    assert "line 3" in caplog.text


def test_bad_key_and_bad_config_exit_2(work, caplog):
    (work / "p.json").write_text(json.dumps({"outer": [[0, 0], [9, 0], [9, 9]], "hole": []}))
    (work / "c.toml").write_text("rho = 2.0\n")
    with caplog.at_level(logging.ERROR):
        assert run("pack2d", work / "p.json") == 2
        assert run("pack2d", work / "bunny.json", "--config", work / "c.toml") == 2
        assert run("pack2d", work / "bunny.json", "--rho", "1.5") == 2
    assert "hole" in caplog.text and "rho" in caplog.text


def test_geometry_failure_exit_3_with_dump(work, monkeypatch, capsys):
    def boom(*a, **k):
        raise NoConvergence("stalled", point=(1.0, 2.0), residual=0.5)

    monkeypatch.setattr(cli, "pack", boom)
    assert run("pack2d", work / "bunny.json") == 3
    err = capsys.readouterr().err
    dump = json.loads(err.split("diagnostic: ", 1)[1])
    assert dump["error"] == "NoConvergence" and dump["point"] == [1.0, 2.0]


def test_pack2d_byte_identical(work):
    outs = []
    for i in range(2):
        assert run("pack2d", work / "bunny.json", "--config", work / "relaxed.toml", "--max-ellipses", 15,
                   "--seed", 7, "--json", work / f"r{i}.json") == 0
        outs.append((work / f"r{i}.json").read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["config"]["seed"] == 7


def test_several_inputs_need_stem(work, caplog):
    (work / "b2.json").write_bytes((work / "bunny.json").read_bytes())
    with caplog.at_level(logging.ERROR):
        assert run("pack2d", work / "bunny.json", work / "b2.json", "--json", work / "o.json") == 2
    assert "{stem}" in caplog.text


def test_parallel_jobs_match_serial(work):
    (work / "b2.json").write_bytes((work / "bunny.json").read_bytes())
    common = ["--config", work / "relaxed.toml", "--max-ellipses", 5]
    assert run("pack2d", work / "bunny.json", work / "b2.json", *common, "--json", work / "s_{stem}.json") == 0
    assert run("pack2d", work / "bunny.json", work / "b2.json", *common, "--jobs", 2,
               "--json", work / "p_{stem}.json") == 0
    for stem in ("bunny", "b2"):
        s, p = (work / f"s_{stem}.json").read_text(), (work / f"p_{stem}.json").read_text()
        assert s == p.replace('"b2.json"', '"b2.json"')


@pytest.fixture
def hollowed(work):
    args = ["hollow3d", work / "cube.stl", "--config", work / "relaxed.toml", "--max-ellipses", 3]
    assert run(*args, "-o", work / "h.stl", "--json", work / "h.jsonl", "--slices", work / "sl",
               "--stats", work / "st.json") == 0
    return work, args


def test_hollow3d_outputs(hollowed):
    work, _ = hollowed
    out = read_mesh(work / "h.stl")
    assert out.is_closed_manifold
    stats = json.loads((work / "st.json").read_text())
    assert out.euler_characteristic() == 2 + 2 * stats["tracks"] and stats["tracks"] >= 1
    assert np.allclose(stats["direction"], choose_section_direction(box(30, 20, 16)))
    lines = (work / "h.jsonl").read_text().splitlines()
    assert len(lines) == stats["slices"] == len(list((work / "sl").glob("slice_*.svg")))
    first = json.loads(lines[0])
    assert {"offset", "normal", "u", "v", "spacing", "polygons"} <= set(first)


def test_hollow3d_byte_identical(hollowed):
    work, args = hollowed
    assert run(*args, "-o", work / "h2.stl", "--json", work / "h2.jsonl") == 0
    assert (work / "h.jsonl").read_bytes() == (work / "h2.jsonl").read_bytes()
    assert (work / "h.stl").read_bytes() == (work / "h2.stl").read_bytes()


def test_hollow3d_axis_choice(work):
    assert run("hollow3d", work / "cube.stl", "--axis", "z") == 2
    assert run("hollow3d", work / "cube.stl", "--config", work / "relaxed.toml", "--axis", "x",
               "--max-ellipses", 1, "--stats", work / "st.json") == 0
    assert json.loads((work / "st.json").read_text())["direction"] == [1.0, 0.0, 0.0]


def test_open_mesh_exit_4(work):
    b = box(10, 10, 10)
    write_stl(TriMesh(b.vertices, b.faces[:-2]), work / "open.stl")
    assert run("hollow3d", work / "open.stl") == 4
    (work / "s.jsonl").write_text("")
    assert run("balance", work / "s.jsonl", work / "open.stl") == 4


def test_balance_noop_leaves_file_unchanged(hollowed, capsys):
    work, _ = hollowed
    capsys.readouterr()
    assert run("balance", work / "h.jsonl", work / "cube.stl", "--json", work / "b.jsonl") == 0
    assert json.loads(capsys.readouterr().out)["status"] == "no-op"
    assert (work / "b.jsonl").read_bytes() == (work / "h.jsonl").read_bytes()


def _stand_records(n=12, gamma=True):
    m, prof = stand_fixture()
    res = pack(Polygon(prof), FabricationParams(delta_wall=2, a_min=0.5), max_count=n)
    es = []
    for i, e in enumerate(res.ellipses):
        d = {"track": i, "cx": e.cx, "cy": e.cy, "a": e.a, "b": e.b}
        if gamma:
            d["gamma"] = 1.0
        es.append(d)
    rec = {"slice": 0, "offset": 20.0, "spacing": 36.0, "normal": [0.0, 1.0, 0.0], "u": [1.0, 0.0, 0.0],
           "v": [0.0, 0.0, 1.0], "polygons": [{**polygon_to_dict(Polygon(prof)), "ellipses": es}]}
    return m, [rec]


def test_balance_stand(work):
    m, recs = _stand_records()
    write_stl(m, work / "stand.stl")
    (work / "s.jsonl").write_text(dumps_lines(recs))
    for i in range(2):
        assert run("balance", work / "s.jsonl", work / "stand.stl", "--json", work / f"o{i}.jsonl",
                   "--report", work / f"r{i}.json") == 0
    rep = json.loads((work / "r0.json").read_text())
    assert rep["status"] == "balanced" and rep["distance"] < 0 < rep["initial_distance"]
    assert (work / "o0.jsonl").read_bytes() == (work / "o1.jsonl").read_bytes()
    assert (work / "r0.json").read_bytes() == (work / "r1.json").read_bytes()
    gam = [e["gamma"] for e in json.loads((work / "o0.jsonl").read_text())["polygons"][0]["ellipses"]]
    assert sorted(i for i, g in enumerate(gam) if g == 0.0) == sorted(rep["order"])


def test_balance_missing_gamma_warns(work, caplog):
    m, recs = _stand_records(gamma=False)
    write_stl(m, work / "stand.stl")
    (work / "s.jsonl").write_text(dumps_lines(recs))
    with caplog.at_level(logging.WARNING):
        assert run("balance", work / "s.jsonl", work / "stand.stl", "--report", work / "r.json") == 0
    assert "gamma" in caplog.text


def test_console_script_and_log_env(work):
    env = dict(os.environ, HOLLOWFORGE_LOG="info")
    r = subprocess.run([sys.executable, "-m", "hollowforge.cli", "pack2d", str(work / "bunny.json"),
                        "--config", str(work / "relaxed.toml"), "--max-ellipses", "2", "--json", str(work / "o.json")],
                       env=env, capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and "INFO" in r.stderr
    r = subprocess.run([sys.executable, "-m", "hollowforge.cli", "config"], capture_output=True, text=True)
    assert "theta0 = 60.0" in r.stdout
