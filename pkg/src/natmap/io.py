"""CSV and JSON round trips for measures, boundary maps, points and reports."""

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import Point, Space, normalize_point
from .measures import BoundaryMapSample, BoundaryMeasure, ConformalDensity


def space_to_dict(space: Space) -> dict:
    return {"kind": space.algebra.kind, "p": space.p}


def space_from_dict(data: dict) -> Space:
    return Space.from_kind(data["kind"], int(data["p"]))


def to_builtin(obj):
    """Recursively convert numpy scalars and arrays for ``json``."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(to_builtin(obj), sort_keys=True, indent=2) + "\n"


# -- measures ------------------------------------------------------------------


def measure_to_dict(beta: BoundaryMeasure) -> dict:
    return {"space": space_to_dict(beta.space), "thetas": beta.thetas.tolist(), "weights": beta.weights.tolist()}


def measure_from_dict(data: dict) -> BoundaryMeasure:
    from .geometry import canonical_boundary_rep

    space = space_from_dict(data["space"])
    thetas = canonical_boundary_rep(space, np.array(data["thetas"], dtype=float))
    return BoundaryMeasure(space, thetas, np.array(data["weights"], dtype=float))


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    return np.array([[float(v) for v in r] for r in rows])


def write_measure_csv(beta: BoundaryMeasure, path) -> None:
    """One row per atom: the real coordinates of the representative, then the weight."""
    header = [f"theta_{i}" for i in range(beta.space.dim)] + ["weight"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for th, wt in zip(beta.thetas, beta.weights):
            w.writerow([repr(float(v)) for v in th] + [repr(float(wt))])


def read_measure_csv(path, space: Space) -> BoundaryMeasure:
    from .geometry import canonical_boundary_rep

    data = _read_rows(path)
    if data.ndim != 2 or data.shape[1] != space.dim + 1:
        raise ValueError(f"{path}: expected {space.dim + 1} columns per row")
    return BoundaryMeasure(space, canonical_boundary_rep(space, data[:, :-1]), data[:, -1])


# -- boundary maps -------------------------------------------------------------


def write_map_csv(D: BoundaryMapSample, path) -> None:
    header = [f"theta_{i}" for i in range(D.source.dim)] + [f"xi_{i}" for i in range(D.target.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in zip(D.sources, D.targets):
            w.writerow([repr(float(v)) for v in np.concatenate([a, b])])


def read_map_csv(path, source: Space, target: Space) -> BoundaryMapSample:
    from .geometry import canonical_boundary_rep

    data = _read_rows(path)
    if data.ndim != 2 or data.shape[1] != source.dim + target.dim:
        raise ValueError(f"{path}: expected {source.dim + target.dim} columns per row")
    return BoundaryMapSample(
        source,
        target,
        canonical_boundary_rep(source, data[:, : source.dim]),
        canonical_boundary_rep(target, data[:, source.dim:]),
    )


def map_to_dict(D: BoundaryMapSample) -> dict:
    return {
        "source": space_to_dict(D.source),
        "target": space_to_dict(D.target),
        "sources": D.sources.tolist(),
        "targets": D.targets.tolist(),
    }


def map_from_dict(data: dict) -> BoundaryMapSample:
    return BoundaryMapSample(
        space_from_dict(data["source"]),
        space_from_dict(data["target"]),
        np.array(data["sources"], dtype=float),
        np.array(data["targets"], dtype=float),
    )


# -- points and contexts ---------------------------------------------------------


def read_points_json(path, space: Space):
    """A JSON list of real coordinate vectors (normalised on reading)."""
    data = json.loads(Path(path).read_text())
    return [normalize_point(space, np.array(v, dtype=float)) for v in data]


def write_points_json(points, path) -> None:
    Path(path).write_text(dumps([x.rep for x in points]))


def context_to_dict(ctx) -> dict:
    return {
        "density": {
            "seed": measure_to_dict(ctx.density.seed),
            "delta": ctx.delta,
            "base": ctx.density.base.rep.tolist(),
        },
        "map": map_to_dict(ctx.D),
        "target": space_to_dict(ctx.target),
    }


def context_from_dict(data: dict):
    from .natural_map import NaturalMapContext

    seed = measure_from_dict(data["density"]["seed"])
    base = Point(seed.space, np.array(data["density"]["base"], dtype=float))
    density = ConformalDensity(seed, float(data["density"]["delta"]), base)
    return NaturalMapContext(density, map_from_dict(data["map"]))


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
