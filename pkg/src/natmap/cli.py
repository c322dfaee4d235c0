"""Command line harness: ``natmap <command> [--config FILE] [options]``.

Each command reads an optional JSON config (schema version 1), runs one
experiment and writes a JSON report.  Exit codes: 0 success, 2 a checked
property failed, 64 invalid configuration.
"""

import argparse
import copy
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .barycenter import SolverConfig, barycenter
from .errors import (
    ConfigError,
    DegenerateForms,
    ElementaryData,
    ExcludedMeasure,
    InvalidLabConfig,
    NatmapError,
    NonConvergence,
    SingularSystem,
)
from .experiments import (
    CONTEXT_MODES,
    SCHEDULES,
    busemann_suite,
    random_boundary_map,
    rigidity_checks,
    rigidity_demo,
    spectrum_checks,
)
from .geometry import Space, distance, random_point
from .io import dumps, read_map_csv, read_measure_csv, read_points_json, space_to_dict
from .isometry import apply, random_isometry
from .measures import ConformalDensity, direction_coordinates, pushforward, random_measure
from .natural_map import NaturalMapContext, evaluate_point, make_context, symmetric_model
from .spectrum_lab import LabConfig

log = logging.getLogger("natmap")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 2, 64
JAC_SLACK = 1e-6
# image directions closer than this (seen from the origin) count as near-elementary
NEAR_ELEMENTARY_SPREAD = 0.05

COMMANDS = ("busemann-check", "barycenter", "natmap", "spectrum", "rigidity-demo")

DEFAULTS = {
    "busemann-check": {"samples": 100, "t": 15.0, "fd_samples": 10},
    "barycenter": {"measure_file": None, "atoms": 8, "equivariance_checks": 5,
                   "solver": {"max_iters": 200, "grad_tol": 1e-10}},
    "natmap": {"mode": "symmetric", "measure_file": None, "map_file": None, "points_file": None,
               "delta": None, "atoms": None, "points": 5, "radius": 1.0},
    "spectrum": {"k": None, "d": None, "restarts": 32, "iterations": 2000, "margin": 1e-6,
                 "samples": 2000, "eps": [1e-2, 1e-4, 1e-6]},
    "rigidity-demo": {"schedule": "loxodromic", "steps": 8, "generators": 3},
}
# config block name per command
BLOCKS = {"busemann-check": "busemann", "barycenter": "barycenter", "natmap": "natmap",
          "spectrum": "spectrum", "rigidity-demo": "rigidity"}
TOP_LEVEL = {"schema_version", "command", "space", "target", "seed", "output_path"}


# -- configuration ---------------------------------------------------------------


def _merge(defaults: dict, given: dict, where: str) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where}.{key} must be an object")
            out[key] = _merge(defaults[key], val, f"{where}.{key}")
        else:
            out[key] = val
    return out


def load_config(command: str, raw: dict = None, seed=None, output_path=None) -> dict:
    """Validate ``raw`` and fill in defaults; unknown keys are errors."""
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    block = BLOCKS[command]
    unknown = set(raw) - TOP_LEVEL - {block}
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {raw.get('schema_version')!r}")
    if raw.get("command", command) != command:
        raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")

    space = _merge({"kind": "complex", "p": 2}, raw.get("space", {}), "space")
    target = _merge({"kind": space["kind"], "m": space["p"]}, raw.get("target", {}), "target")
    if space["kind"] not in KINDS:
        raise ConfigError(f"space.kind must be 'complex' or 'quaternionic', got {space['kind']!r}")
    if target["kind"] != space["kind"]:
        raise ConfigError("source and target must use the same scalars")
    for name, val in (("space.p", space["p"]), ("target.m", target["m"])):
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigError(f"{name} must be an integer")
    if not target["m"] >= space["p"] >= 2:
        raise ConfigError("need target.m >= space.p >= 2")

    cfg_seed = raw.get("seed", 0) if seed is None else seed
    if not isinstance(cfg_seed, int) or isinstance(cfg_seed, bool) or not 0 <= cfg_seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "space": space,
        "target": target,
        "seed": cfg_seed,
        "output_path": raw.get("output_path") if output_path is None else str(output_path),
        block: _merge(DEFAULTS[command], raw.get(block, {}), block),
    }
    _check_block(command, out[block])
    return out


def _check_block(command, b):
    def positive_int(key):
        if not isinstance(b[key], int) or isinstance(b[key], bool) or b[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")

    if command == "busemann-check":
        positive_int("samples")
        positive_int("fd_samples")
    elif command == "barycenter":
        positive_int("atoms")
        positive_int("equivariance_checks")
    elif command == "natmap":
        if b["mode"] not in ("symmetric",) + CONTEXT_MODES + ("files",):
            raise ConfigError(f"unknown natmap mode {b['mode']!r}")
        if b["mode"] == "files" and not (b["measure_file"] and b["map_file"]):
            raise ConfigError("mode 'files' needs measure_file and map_file")
        positive_int("points")
    elif command == "spectrum":
        positive_int("restarts")
        positive_int("iterations")
        eps = b["eps"]
        if not isinstance(eps, list) or not eps or any(not isinstance(e, (int, float)) or e <= 0 for e in eps):
            raise ConfigError("eps must be a list of positive numbers")
    elif command == "rigidity-demo":
        if b["schedule"] not in SCHEDULES:
            raise ConfigError(f"schedule must be one of {', '.join(SCHEDULES)}")
        positive_int("steps")
        positive_int("generators")


# config spelling -> scalar algebra
KINDS = {"complex": "complex", "quaternionic": "quaternion"}


def _spaces(cfg):
    kind = KINDS[cfg["space"]["kind"]]
    return Space.from_kind(kind, cfg["space"]["p"]), Space.from_kind(kind, cfg["target"]["m"])


def _resolve(cfg, path):
    """Relative data paths are taken relative to the config file."""
    base = cfg.get("_base_dir")
    p = Path(path)
    return p if p.is_absolute() or base is None else Path(base) / p


# -- commands --------------------------------------------------------------------


def cmd_busemann_check(cfg, threads=1):
    source, _ = _spaces(cfg)
    b = cfg["busemann"]
    res = busemann_suite(source, np.random.default_rng(cfg["seed"]), n=b["samples"], t=b["t"], n_fd=b["fd_samples"])
    return {"space": space_to_dict(source), "properties": res}, all(r["passed"] for r in res.values()), []


def cmd_barycenter(cfg, threads=1):
    source, _ = _spaces(cfg)
    b = cfg["barycenter"]
    rng = np.random.default_rng(cfg["seed"])
    if b["measure_file"]:
        beta = read_measure_csv(_resolve(cfg, b["measure_file"]), source)
    else:
        beta = random_measure(source, int(rng.integers(2**63)), b["atoms"])
    solver = SolverConfig(**b["solver"])
    res = barycenter(beta, solver)
    out = res.to_dict()
    warnings = []
    if res.ill_conditioned:
        warnings.append("barycenter Hessian is nearly singular")
    equiv = []
    if out["regime"] == "Interior":
        for _ in range(b["equivariance_checks"]):
            g = random_isometry(source, rng, 1.0)
            moved = barycenter(pushforward(beta, g), solver)
            equiv.append(distance(moved.location, apply(g, res.location)))
    out["equivariance"] = {"checks": len(equiv), "max_distance": max(equiv) if equiv else 0.0}
    out["atoms"] = len(beta)
    ok = res.residual <= solver.grad_tol and (not equiv or max(equiv) <= 1e-8)
    return out, ok, warnings


def _natmap_context(cfg, source, target, rng):
    b = cfg["natmap"]
    mode = b["mode"]
    if mode == "symmetric":
        return symmetric_model(source, target)
    if mode == "files":
        seed = read_measure_csv(_resolve(cfg, b["measure_file"]), source)
        D = read_map_csv(_resolve(cfg, b["map_file"]), source, target)
        delta = source.growth_exponent if b["delta"] is None else float(b["delta"])
        return NaturalMapContext(ConformalDensity(seed, delta), D)
    n = b["atoms"] if b["atoms"] is not None else int(rng.integers(source.k + 2, 3 * source.k + 2))
    seed = random_measure(source, int(rng.integers(2**63)), n)
    return make_context(seed, random_boundary_map(seed, target, rng, mode), b["delta"])


def _image_spread(ctx):
    from .measures import BoundaryMeasure

    O = ctx.target.origin()
    dirs = direction_coordinates(O, BoundaryMeasure(ctx.target, ctx.images, np.ones(len(ctx.images))))
    diff = dirs[:, None, :] - dirs[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def cmd_natmap(cfg, threads=1):
    source, target = _spaces(cfg)
    b = cfg["natmap"]
    rng = np.random.default_rng(cfg["seed"])
    ctx = _natmap_context(cfg, source, target, rng)
    if b["points_file"]:
        points = read_points_json(_resolve(cfg, b["points_file"]), source)
    else:
        O = source.origin()
        points = [O] + [random_point(source, rng, b["radius"]) for _ in range(b["points"] - 1)]

    def one(x):
        # the symmetric model is symmetric about its centre, so centre it at each point
        local = symmetric_model(source, target, center=x) if b["mode"] == "symmetric" else ctx
        try:
            return evaluate_point(local, x).to_dict()
        except (ElementaryData, ExcludedMeasure, DegenerateForms, SingularSystem, NonConvergence) as exc:
            return {"x": x.rep.tolist(), "error": type(exc).__name__, "message": str(exc)}

    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(one, points))
    good = [r for r in rows if "error" not in r]
    spread = _image_spread(ctx)
    near_elementary = spread < NEAR_ELEMENTARY_SPREAD
    jacs = [r["jac"] for r in good]
    summary = {
        "points": len(rows),
        "evaluated": len(good),
        "skipped": len(rows) - len(good),
        "max_jac": max(jacs) if jacs else None,
        "min_k_eig": min(r["min_k_eig"] for r in good) if good else None,
        "max_residual": max(r["residual"] for r in good) if good else None,
        "image_spread": spread,
        "near_elementary": bool(near_elementary),
        "delta": ctx.delta,
    }
    ok = all(r["jac"] <= 1 + JAC_SLACK and r["chain"]["holds"] for r in good)
    warnings = []
    if near_elementary:
        warnings.append("boundary data is near-elementary")
    if any(not r["chain"]["v_j_invariant"] for r in good):
        warnings.append("image of the differential is not invariant under the complex structure at some point")
    return {"mode": b["mode"], "summary": summary, "per_point": rows}, ok, warnings


def cmd_spectrum(cfg, threads=1):
    source, _ = _spaces(cfg)
    b = cfg["spectrum"]
    k = source.k if b["k"] is None else b["k"]
    d = source.d if b["d"] is None else b["d"]
    try:
        lab = LabConfig(k, d, restarts=b["restarts"], iterations=b["iterations"], seed=cfg["seed"])
    except InvalidLabConfig as exc:
        raise ConfigError(str(exc)) from exc
    out = spectrum_checks(lab, margin=b["margin"], samples=b["samples"], eps=b["eps"])
    out["k"], out["d"] = k, d
    return out, all(c["passed"] for c in out["checks"].values()), []


def cmd_rigidity_demo(cfg, threads=1):
    source, target = _spaces(cfg)
    b = cfg["rigidity"]
    records = rigidity_demo(source, target, b["schedule"], b["steps"], cfg["seed"], b["generators"])
    checks = rigidity_checks(records, b["schedule"])
    return {"schedule": b["schedule"], "records": records, "checks": checks}, all(
        c["passed"] for c in checks.values()), []


HANDLERS = {
    "busemann-check": cmd_busemann_check,
    "barycenter": cmd_barycenter,
    "natmap": cmd_natmap,
    "spectrum": cmd_spectrum,
    "rigidity-demo": cmd_rigidity_demo,
}


def _figures(command, cfg, results, out_dir):
    from . import plotting

    if command == "busemann-check":
        return plotting.busemann_figure(results["properties"], out_dir, cfg["space"]["kind"])
    if command == "natmap":
        return plotting.jacobian_figure([r["jac"] for r in results["per_point"] if "jac" in r], out_dir)
    if command == "spectrum":
        lab = LabConfig(results["k"], results["d"])
        return plotting.spectrum_figure(results["probe"], out_dir, lab.max_value)
    if command == "rigidity-demo":
        return plotting.rigidity_figure(results["records"], out_dir)
    return []


def run(command: str, cfg: dict, threads: int = 1, strict: bool = False, figures=None):
    """Run ``command`` on a validated config; returns ``(report, exit_code)``."""
    t0 = time.perf_counter()
    try:
        results, ok, warnings = HANDLERS[command](cfg, threads)
    except ExcludedMeasure as exc:
        results, ok, warnings = {"error": "ExcludedMeasure", "message": str(exc)}, False, []
    elapsed = time.perf_counter() - t0
    for w in warnings:
        log.warning(w)
    passed = ok and not (strict and warnings)
    echo = {k: v for k, v in cfg.items() if not k.startswith("_")}
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "config": echo,
        "results": results,
        "warnings": warnings,
        "passed": passed,
        "timings": {"total_seconds": elapsed},
    }
    if figures is not None and "error" not in results:
        report["figures"] = sorted(str(p) for p in _figures(command, cfg, results, figures))
    return report, EXIT_OK if passed else EXIT_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="natmap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"natmap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config (schema version 1)")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", type=Path, help="report path (default: output_path, else stdout)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for per-point loops")
        p.add_argument("--strict", action="store_true", help="treat warnings as failures")
        p.add_argument("--figures", type=Path, metavar="DIR", help="write figure data (CSV) and PNGs to DIR")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NATMAP_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        raw = None
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.command, raw, args.seed, args.out)
        if args.config is not None:
            cfg["_base_dir"] = str(args.config.parent)
        report, code = run(args.command, cfg, args.threads, args.strict, args.figures)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"natmap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NatmapError as exc:
        print(f"natmap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    text = dumps(report)
    if cfg["output_path"]:
        Path(cfg["output_path"]).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
