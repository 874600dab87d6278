import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hollowforge.config import Config, default_config_text, load_config
from hollowforge.errors import ConfigError
from hollowforge.io import (
    ValidationError,
    dumps,
    dumps_lines,
    load_polygon,
    load_slice_records,
    polygon_from_dict,
    polygon_to_dict,
    set_gammas,
    voids_from_records,
)
from hollowforge.supportfree import FabricationParams
from hollowforge.validation import check_direction, check_mesh, check_polygons
from hollowforge.mesh import box

SQUARE = [[0, 0], [10, 0], [10, 10], [0, 10]]


def test_default_config_round_trip(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text(default_config_text())
    assert load_config(f) == Config()
    assert load_config() == Config()


def test_config_overrides_route_to_params():
    c = Config().replace(rho=0.5, max_ellipses=100, spacing=2.0)
    assert c.params.rho == 0.5 and c.max_count == 100 and c.spacing == 2.0
    assert Config().max_count is None


@pytest.mark.parametrize("text, word", [
    ("bogus = 1\n", "bogus"),
    ("theta0 = 95.0\n", "theta0"),
    ('rho = "high"\n', "rho"),
    ("cover = \"random\"\n", "cover"),
    ("max_ellipses = -1\n", "max_ellipses"),
    ("sigma0 = \n", "c.toml"),
])
def test_config_rejects(tmp_path, text, word):
    f = tmp_path / "c.toml"
    f.write_text(text)
    with pytest.raises(ConfigError, match=word):
        load_config(f)


def test_polygon_orientation_corrected_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        p = polygon_from_dict({"units": "mm", "outer": SQUARE[::-1], "holes": []})
    assert p.area == pytest.approx(100.0)
    assert "orientation" in caplog.text


@pytest.mark.parametrize("data, word", [
    ({"outer": SQUARE, "colour": 1}, "colour"),
    ({"holes": []}, "outer"),
    ({"outer": SQUARE, "units": "in"}, "units"),
    ({"outer": [[0, 0], [1, 1]]}, "outer"),
    ({"outer": [[0, 0], [1, 0], [0, None]]}, r"outer\[2\]"),
    ({"outer": SQUARE, "holes": [[[1, 1], [2, 1]]]}, r"holes\[0\]"),
])
def test_polygon_schema_errors_name_the_key(data, word):
    with pytest.raises(ValidationError, match=word):
        polygon_from_dict(data)


def test_malformed_json_names_the_line(tmp_path):
    f = tmp_path / "p.json"
    f.write_text('{"outer": [[0, 0],\n [1, 0]\n [1, 1]]}')
    with pytest.raises(ValidationError, match="line 3"):
        load_polygon(f)


def test_polygon_json_round_trip(tmp_path):
    f = tmp_path / "p.json"
    d = {"units": "mm", "outer": [[0.1, 0.0], [10.0, 0.3], [9.7, 10.0], [0.0, 9.9]],
         "holes": [[[2.0, 2.0], [2.0, 3.0], [3.0, 3.0], [3.0, 2.0]]]}
    f.write_text(dumps(d))
    p = load_polygon(f)
    assert polygon_to_dict(p) == d


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_dumps_is_bit_exact(xs):
    back = json.loads(dumps({"x": xs, "y": np.array(xs)}))
    assert [float(v).hex() for v in back["x"]] == [float(v).hex() for v in xs]
    assert back["y"] == back["x"]


def test_dumps_sorted_and_rejects_nan():
    assert dumps({"b": 1, "a": np.int64(2)}) == '{\n "a": 2,\n "b": 1\n}\n'
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def _record(gamma=True):
    e = {"track": 3, "cx": 5.0, "cy": 2.0, "a": 1.0, "b": 2.0}
    if gamma:
        e["gamma"] = 0.5
    return {"slice": 0, "offset": 4.0, "spacing": 2.0, "normal": [1.0, 0.0, 0.0], "u": [0.0, 1.0, 0.0],
            "v": [0.0, 0.0, 1.0], "polygons": [{"units": "mm", "outer": SQUARE, "holes": [], "ellipses": [e]}]}


def test_slice_records_to_voids(tmp_path):
    f = tmp_path / "s.jsonl"
    f.write_text(dumps_lines([_record()]))
    (v,) = voids_from_records(load_slice_records(f))
    assert v.group == 3 and v.gamma == 0.5
    assert np.allclose(v.center, [4.0, 5.0, 2.0])
    assert v.volume == pytest.approx(np.pi * 2.0 * 2.0)


def test_missing_gamma_defaults_with_warning():
    msgs = []
    (v,) = voids_from_records([_record(gamma=False)], warn=msgs.append)
    assert v.gamma == 1.0 and msgs and "gamma" in msgs[0]


def test_set_gammas_leaves_input_untouched():
    r = _record()
    (out,) = set_gammas([r], {3: 0.0})
    assert out["polygons"][0]["ellipses"][0]["gamma"] == 0.0
    assert r["polygons"][0]["ellipses"][0]["gamma"] == 0.5


def test_slice_lines_report_missing_key(tmp_path):
    r = _record()
    del r["spacing"]
    f = tmp_path / "s.jsonl"
    f.write_text(dumps_lines([_record(), r]))
    with pytest.raises(ValidationError, match=r":2: missing key 'spacing'"):
        load_slice_records(f)


def test_validation_helpers():
    assert len(check_polygons(SQUARE)) == 1
    assert len(check_polygons([SQUARE, SQUARE])) == 2
    assert len(check_polygons(np.array(SQUARE, float))) == 1
    with pytest.raises(ConfigError):
        check_polygons([[0, 0], [1, float("inf")], [0, 1]])
    assert check_direction("auto") is None
    assert np.allclose(check_direction([3, 4, 0]), [0.6, 0.8, 0])
    with pytest.raises(ConfigError):
        check_direction("z")
    with pytest.raises(ConfigError):
        check_direction([0, 0, 1])
    b = box(1, 1, 1)
    assert check_mesh((b.vertices, b.faces)).volume == pytest.approx(1.0)


def test_params_validation():
    with pytest.raises(ConfigError):
        FabricationParams(rho=1.0)
