"""Command line: ``hollowforge pack2d | hollow3d | balance | config``.

Exit codes: 0 success, 2 invalid input or configuration, 3 geometry failure,
4 open or non-manifold mesh.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .balance import BalanceProblem, center_of_mass, contact_points, optimize, projected
from .config import Config, default_config_text, load_config
from .errors import ConfigError, HollowForgeError, NonManifold, OpenMesh
from .extrude import check_stack, emit_hollowed, propagate, slice_mesh
from .io import (
    dumps,
    dumps_lines,
    load_polygon,
    load_slice_records,
    set_gammas,
    slice_records,
    voids_from_records,
    write_json,
    write_slice_svgs,
)
from .mesh import choose_section_direction, read_mesh, write_stl
from .packer import pack

log = logging.getLogger("hollowforge")

EXIT_OK, EXIT_INVALID, EXIT_GEOMETRY, EXIT_MESH = 0, 2, 3, 4
AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0)}


def setup_logging() -> None:
    level = os.environ.get("HOLLOWFORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _out(template: str | None, src: Path, many: bool) -> Path | None:
    """Output path for one input; ``{stem}`` expands to the input file stem."""
    if template is None:
        return None
    if many and "{stem}" not in template:
        raise ConfigError(f"output {template!r} needs a {{stem}} placeholder when several inputs are given")
    return Path(template.replace("{stem}", src.stem))


def _config(args) -> Config:
    cfg = load_config(args.config)
    kw = {}
    if getattr(args, "max_ellipses", None) is not None:
        kw["max_ellipses"] = args.max_ellipses
    if getattr(args, "rho", None) is not None:
        kw["rho"] = args.rho
    if getattr(args, "spacing", None) is not None:
        kw["spacing"] = args.spacing
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    try:
        return cfg.replace(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _diagnose(command: str, src, exc: Exception, extra: dict | None = None) -> None:
    dump = {"command": command, "input": str(src), "error": type(exc).__name__, "message": str(exc)}
    for k in ("point", "residual"):
        if getattr(exc, k, None) is not None:
            dump[k] = getattr(exc, k)
    dump.update(extra or {})
    sys.stderr.write("diagnostic: " + dumps(dump, indent=None))


# ---------------------------------------------------------------------------
# jobs; each returns an exit status and never raises


def _pack_job(src: str, cfg: Config, json_out, svg_out, stats_out) -> int:
    t0 = time.perf_counter()
    try:
        poly = load_polygon(src)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("cannot read %s: %s", src, exc)
        return EXIT_INVALID
    try:
        res = pack(poly, cfg.params, max_count=cfg.max_count, cover_radius=cfg.cover_radius, cover=cfg.cover)
    except HollowForgeError as exc:
        _diagnose("pack2d", src, exc, {"edges": len(poly.edge_lengths())})
        return EXIT_GEOMETRY
    if "error" in res.diagnostics:
        _diagnose("pack2d", src, RuntimeError(res.diagnostics["error"]), {"count": len(res.ellipses)})
        return EXIT_GEOMETRY
    payload = {"input": Path(src).name, "config": cfg.to_dict(), "area": poly.area, **res.to_dict()}
    if json_out:
        write_json(payload, json_out)
    else:
        sys.stdout.write(dumps(payload))
    if svg_out:
        res.dual.to_svg(svg_out, probes=[(p.x, p.y, p.radius) for p in res.probe_history])
    if stats_out:
        edges = len(poly.edge_lengths())
        write_json({"input": Path(src).name, "edges": edges, "count": len(res.ellipses),
                    "timings": {**res.timings, "total": time.perf_counter() - t0}}, stats_out)
    log.info("%s: %d ellipses, ratio %.4f (%s)", src, len(res.ellipses), res.packing_ratio, res.diagnostics["stop"])
    return EXIT_OK


def _direction(axis: str, mesh):
    if axis == "auto":
        return choose_section_direction(mesh)
    if axis == "z":
        raise ConfigError("--axis z is not allowed: section planes must contain the build (z) axis")
    return np.array(AXES[axis])


def _hollow_job(src: str, cfg: Config, axis: str, stl_out, json_out, slices_out, stats_out) -> int:
    timings = {}
    t0 = time.perf_counter()
    try:
        mesh = read_mesh(src)
        mesh.check_closed()
        direction = _direction(axis, mesh)
    except (OpenMesh, NonManifold) as exc:
        log.error("%s: %s", src, exc)
        return EXIT_MESH
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        log.error("cannot read %s: %s", src, exc)
        return EXIT_INVALID
    timings["read"] = time.perf_counter() - t0
    try:
        t = time.perf_counter()
        stack = slice_mesh(mesh, direction, cfg.spacing, cfg.params)
        if cfg.cover_radius is not None:
            stack.cover_radius = cfg.cover_radius
        timings["slice"] = time.perf_counter() - t
        t = time.perf_counter()
        propagate(stack, max_tracks=cfg.max_count)
        timings["propagate"] = time.perf_counter() - t
        t = time.perf_counter()
        problems = check_stack(stack)
        timings["check"] = time.perf_counter() - t
        if problems:
            raise HollowForgeError("; ".join(problems[:5]))
        t = time.perf_counter()
        out = emit_hollowed(stack, mesh)
        timings["emit"] = time.perf_counter() - t
    except (OpenMesh, NonManifold) as exc:
        log.error("%s: %s", src, exc)
        return EXIT_MESH
    except HollowForgeError as exc:
        _diagnose("hollow3d", src, exc, {"direction": list(map(float, direction))})
        return EXIT_GEOMETRY
    if stl_out:
        write_stl(out, stl_out)
    records = slice_records(stack)
    if json_out:
        Path(json_out).write_text(dumps_lines(records), encoding="utf-8")
    if slices_out:
        write_slice_svgs(stack, slices_out)
    if stats_out:
        edges = [sum(len(lp) for s in secs for lp in s.polygon.loops) for secs in stack.sections]
        write_json({
            "input": Path(src).name,
            "axis": axis,
            "direction": stack.normal,
            "slices": len(stack),
            "spacing": stack.spacing,
            "tracks": len([t for t in stack.tracks.values() if t.members]),
            "edges_per_slice": edges,
            "volume_in": mesh.volume,
            "volume_out": out.volume,
            "euler": out.euler_characteristic(),
            "timings": {**timings, "total": time.perf_counter() - t0},
        }, stats_out)
    log.info("%s: %d slices, %d tracks", src, len(stack), len(stack.tracks))
    return EXIT_OK


def _balance_job(src: str, mesh_path: str, json_out, report_out, continuous: bool, margin: float) -> int:
    try:
        records = load_slice_records(src)
        voids = voids_from_records(records)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("cannot read %s: %s", src, exc)
        return EXIT_INVALID
    try:
        mesh = read_mesh(mesh_path)
        mesh.check_closed()
    except (OpenMesh, NonManifold) as exc:
        log.error("%s: %s", mesh_path, exc)
        return EXIT_MESH
    except (OSError, ValueError) as exc:
        log.error("cannot read %s: %s", mesh_path, exc)
        return EXIT_INVALID
    try:
        problem = BalanceProblem(voids, contact_points(mesh))
        before = center_of_mass(problem, mesh)
        res = optimize(problem, mesh, continuous=continuous, margin=margin)
        after = center_of_mass(problem.with_gammas(res.gammas), mesh)
    except HollowForgeError as exc:
        _diagnose("balance", src, exc)
        return EXIT_GEOMETRY
    noop = not res.order and res.gammas == problem.gammas()
    report = {
        **res.to_dict(),
        "status": "no-op" if noop else res.status,
        "initial_com": before,
        "final_com": after,
        "initial_projected": projected(problem, before),
        "final_projected": projected(problem, after),
        "hull": problem.contacts,
    }
    if json_out:
        if noop:
            Path(json_out).write_bytes(Path(src).read_bytes())
        else:
            Path(json_out).write_text(dumps_lines(set_gammas(records, res.gammas)), encoding="utf-8")
    if report_out:
        write_json(report, report_out)
    else:
        sys.stdout.write(dumps(report))
    return EXIT_OK


# ---------------------------------------------------------------------------
# dispatch


def _run(jobs: list[tuple], n_jobs: int) -> int:
    if n_jobs <= 1 or len(jobs) <= 1:
        codes = [fn(*a) for fn, *a in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            codes = list(ex.map(_call, jobs))
    return max(codes, default=EXIT_OK)


def _call(job):
    fn, *a = job
    return fn(*a)


def cmd_pack2d(args) -> int:
    cfg = _config(args)
    many = len(args.inputs) > 1
    jobs = [(_pack_job, s, cfg, _out(args.json, Path(s), many), _out(args.svg, Path(s), many),
             _out(args.stats, Path(s), many)) for s in args.inputs]
    return _run(jobs, args.jobs)


def cmd_hollow3d(args) -> int:
    cfg = _config(args)
    if args.axis == "z":
        raise ConfigError("--axis z is not allowed: section planes must contain the build (z) axis")
    many = len(args.inputs) > 1
    jobs = [(_hollow_job, s, cfg, args.axis, _out(args.output, Path(s), many), _out(args.json, Path(s), many),
             _out(args.slices, Path(s), many), _out(args.stats, Path(s), many)) for s in args.inputs]
    return _run(jobs, args.jobs)


def cmd_balance(args) -> int:
    if args.margin < 0:
        raise ConfigError("--margin must be non-negative")
    return _balance_job(args.slices_json, args.mesh, args.json, args.report, args.continuous, args.margin)


def cmd_config(args) -> int:
    sys.stdout.write(default_config_text())
    return EXIT_OK


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hollowforge", description="Support-free elliptic voids for FDM parts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, outputs=True):
        sp.add_argument("--config", help="TOML file of parameters")
        sp.add_argument("--max-ellipses", type=int, help="ellipse (or track) cap, 0 = unlimited")
        sp.add_argument("--rho", type=float, help="probe shrink factor")
        sp.add_argument("--seed", type=int, help="recorded in the output for reproducible harness runs")
        sp.add_argument("--jobs", type=_positive_int, default=1, help="parallel jobs over the inputs")
        sp.add_argument("--stats", help="timing statistics JSON (kept apart from the deterministic output)")

    sp = sub.add_parser("pack2d", help="pack ellipses into polygons")
    sp.add_argument("inputs", nargs="+", help="polygon JSON files")
    common(sp)
    sp.add_argument("--json", help="result JSON; '{stem}' expands per input")
    sp.add_argument("--svg", help="SVG drawing of the diagram and ellipses")
    sp.set_defaults(func=cmd_pack2d)

    sp = sub.add_parser("hollow3d", help="hollow closed STL/OBJ meshes")
    sp.add_argument("inputs", nargs="+", help="mesh files")
    common(sp)
    sp.add_argument("-o", "--output", help="hollowed STL")
    sp.add_argument("--json", help="slice JSON lines, one slice per line")
    sp.add_argument("--slices", help="directory for one SVG per slice")
    sp.add_argument("--axis", choices=("auto", "x", "y", "z"), default="auto", help="slice plane normal")
    sp.add_argument("--spacing", type=float, help="slice spacing in mm")
    sp.set_defaults(func=cmd_hollow3d)

    sp = sub.add_parser("balance", help="re-fill voids so the part stands")
    sp.add_argument("slices_json", help="slice JSON lines from hollow3d")
    sp.add_argument("mesh", help="the solid input mesh")
    sp.add_argument("--json", help="updated slice JSON lines")
    sp.add_argument("--report", help="balance report JSON (stdout when omitted)")
    sp.add_argument("--continuous", action="store_true", help="allow one fractional shrink factor")
    sp.add_argument("--margin", type=float, default=1e-3, help="target depth inside the hull in mm")
    sp.set_defaults(func=cmd_balance)

    sp = sub.add_parser("config", help="print the default configuration")
    sp.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
