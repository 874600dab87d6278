"""File formats: polygon JSON, deterministic result JSON, slice JSON lines and slice SVGs."""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidPolygon
from .geom import Ellipse
from .polygon import Polygon
from .svg import SvgCanvas

log = logging.getLogger(__name__)


class ValidationError(ConfigError):
    """Input file does not follow its schema."""


# ---------------------------------------------------------------------------
# JSON


def to_jsonable(obj):
    """Plain Python values; numpy scalars and arrays become floats, ints and lists."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} cannot be written to JSON")
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj, indent: int | None = 1) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip float repr (bit-exact)."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=indent, allow_nan=False, ensure_ascii=True) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _load_json(path) -> object:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# polygons


def _loop(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) < 3:
        raise ValidationError(f"{where}: expected a list of at least 3 [x, y] points")
    for i, p in enumerate(value):
        if (not isinstance(p, list) or len(p) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in p)):
            raise ValidationError(f"{where}[{i}]: expected [x, y] with finite numbers, got {p!r}")
    return np.array(value, dtype=float)


def polygon_from_dict(data, where: str = "polygon") -> Polygon:
    """Schema ``{"units": "mm", "outer": [[x, y], ...], "holes": [[[x, y], ...], ...]}``.

    Wrongly oriented loops are reversed with a warning.
    """
    if not isinstance(data, dict):
        raise ValidationError(f"{where}: expected an object")
    unknown = sorted(set(data) - {"units", "outer", "holes"})
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {', '.join(unknown)}")
    if "outer" not in data:
        raise ValidationError(f"{where}: missing key 'outer'")
    units = data.get("units", "mm")
    if units != "mm":
        raise ValidationError(f"{where}.units: only 'mm' is supported, got {units!r}")
    outer = _loop(data["outer"], f"{where}.outer")
    holes_raw = data.get("holes", [])
    if not isinstance(holes_raw, list):
        raise ValidationError(f"{where}.holes: expected a list of loops")
    holes = [_loop(h, f"{where}.holes[{i}]") for i, h in enumerate(holes_raw)]
    try:
        return Polygon(outer, holes)
    except InvalidPolygon as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def polygon_to_dict(poly: Polygon) -> dict:
    return {"units": "mm", "outer": poly.loops[0].tolist(), "holes": [h.tolist() for h in poly.loops[1:]]}


def load_polygon(path) -> Polygon:
    return polygon_from_dict(_load_json(path), str(path))


# ---------------------------------------------------------------------------
# slice stacks


def slice_records(stack, gammas: dict | None = None) -> list[dict]:
    """One record per slice: frame, polygons and the ellipses on them."""
    recs = []
    for k, secs in enumerate(stack.sections):
        polys = []
        for sec in secs:
            d = polygon_to_dict(sec.polygon)
            d["ellipses"] = [
                {"track": t, "cx": e.cx, "cy": e.cy, "a": e.a, "b": e.b,
                 "gamma": 1.0 if gammas is None else gammas.get(t, 1.0)}
                for t, e in sorted(sec.members.items())
            ]
            polys.append(d)
        recs.append({
            "slice": k,
            "offset": float(stack.offsets[k]),
            "spacing": float(stack.spacing),
            "normal": stack.normal.tolist(),
            "u": stack.u.tolist(),
            "v": stack.v.tolist(),
            "polygons": polys,
        })
    return recs


def dumps_lines(records) -> str:
    return "".join(dumps(r, indent=None) for r in records)


def load_slice_records(path) -> list[dict]:
    recs = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{n}: malformed JSON: {exc.msg}") from exc
        for key in ("slice", "offset", "spacing", "normal", "u", "v", "polygons"):
            if key not in r:
                raise ValidationError(f"{path}:{n}: missing key {key!r}")
        recs.append(r)
    return recs


def voids_from_records(records, warn=log.warning):
    """VoidTerms for the balance problem; a missing gamma defaults to 1.0 with a warning."""
    from .balance import VoidTerm

    out = []
    missing = 0
    for r in records:
        d, u, v = (np.asarray(r[k], dtype=float) for k in ("normal", "u", "v"))
        for p in r["polygons"]:
            for e in p.get("ellipses", []):
                for key in ("track", "cx", "cy", "a", "b"):
                    if key not in e:
                        raise ValidationError(f"slice {r['slice']}: ellipse lacks {key!r}")
                if "gamma" not in e:
                    missing += 1
                g = float(e.get("gamma", 1.0))
                el = Ellipse(float(e["cx"]), float(e["cy"]), float(e["a"]), float(e["b"]))
                c = r["offset"] * d + el.cx * u + el.cy * v
                out.append(VoidTerm(int(r["slice"]), el, c, el.area * float(r["spacing"]), g, int(e["track"])))
    if missing:
        warn(f"{missing} ellipse(s) without gamma; using 1.0")
    return out


def set_gammas(records, gammas: dict) -> list[dict]:
    out = []
    for r in records:
        r = json.loads(json.dumps(r))
        for p in r["polygons"]:
            for e in p.get("ellipses", []):
                e["gamma"] = float(gammas.get(int(e["track"]), e.get("gamma", 1.0)))
        out.append(r)
    return out


def slice_svg(poly_list, ellipses, path=None) -> str:
    """SVG of one slice: polygon outlines and ellipses on fixed layers."""
    pts = np.vstack([lp for p in poly_list for lp in p.loops]) if poly_list else np.zeros((1, 2))
    lo, hi = pts.min(0), pts.max(0)
    m = 0.05 * max(float((hi - lo).max()), 1.0)
    c = SvgCanvas((lo[0] - m, lo[1] - m, hi[0] + m, hi[1] + m))
    for p in poly_list:
        for lp in p.loops:
            c.polyline("polygon", lp, stroke="black", closed=True)
    for e in ellipses:
        c.ellipse("ellipses", e.cx, e.cy, e.a, e.b, stroke="black", fill="#cccccc")
    text = c.render()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_slice_svgs(stack, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(len(stack))))
    out = []
    for k, secs in enumerate(stack.sections):
        path = d / f"slice_{k:0{width}d}.svg"
        slice_svg([s.polygon for s in secs], [e for s in secs for e in s.ellipses()], path)
        out.append(path)
    return out


__all__ = [
    "ValidationError",
    "dumps",
    "dumps_lines",
    "load_polygon",
    "load_slice_records",
    "polygon_from_dict",
    "polygon_to_dict",
    "set_gammas",
    "slice_records",
    "slice_svg",
    "to_jsonable",
    "voids_from_records",
    "write_json",
    "write_slice_svgs",
]
