"""Numerical experiments shared by the command line tool and the test suite."""

import numpy as np

from .geometry import (
    Space,
    busemann,
    busemann_gradient,
    busemann_hessian,
    canonical_boundary_rep,
    distance,
    exp_map,
    geodesic_ray_to_boundary,
    random_boundary_point,
    random_point,
)
from .isometry import (
    Isometry,
    Representation,
    apply,
    conjugate_representation,
    embed_isometry,
    embed_coordinates,
    loxodromic_normal_form,
    random_isometry,
    representation_distance,
    stabilizer_element,
    trace_bound_check,
    transvection,
    boundary_image_reps,
)
from .algebra import random_compact_matrix
from .measures import BoundaryMapSample, random_measure, direction_coordinates
from .natural_map import make_context, natural_map_point, symmetric_model

# tolerances of the Busemann suite
LIMIT_TOL = 1e-6
UNIT_TOL = 1e-9
SPECTRUM_TOL = 1e-8
FD_GRAD_RTOL = 1e-5
FD_HESS_RTOL = 1e-4
COCYCLE_TOL = 1e-9


def expected_hessian_spectrum(space: Space) -> np.ndarray:
    """``0`` once, ``1`` with multiplicity ``k - d``, ``2`` with multiplicity ``d - 1``."""
    return np.array([0.0] + [1.0] * (space.k - space.d) + [2.0] * (space.d - 1))


def _fd_gradient(x, theta, h):
    k = x.space.k
    out = np.zeros(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        out[i] = (busemann(exp_map(x, x.tangent(e)), theta) - busemann(exp_map(x, x.tangent(-e)), theta)) / (2 * h)
    return out


def _second_derivative(x, theta, u, h):
    """``d^2/ds^2 B(exp_x(s u), theta)`` at 0 (the Hessian along a geodesic)."""
    b0 = busemann(x, theta)
    return (busemann(exp_map(x, x.tangent(h * u)), theta) - 2 * b0
            + busemann(exp_map(x, x.tangent(-h * u)), theta)) / (h * h)


def _fd_hessian(x, theta, h):
    k = x.space.k
    E = np.eye(k)
    diag = np.array([_second_derivative(x, theta, E[i], h) for i in range(k)])
    out = np.diag(diag)
    for i in range(k):
        for j in range(i + 1, k):
            sym = _second_derivative(x, theta, (E[i] + E[j]), h)
            out[i, j] = out[j, i] = (sym - diag[i] - diag[j]) / 2
    return out


def busemann_suite(space: Space, rng, n: int = 100, t: float = 15.0, n_fd: int = 10) -> dict:
    """Closed-form Busemann function against its defining limit, gradient
    norm, Hessian spectrum, finite differences and the cocycle identity."""
    O = space.origin()
    expected = expected_hessian_spectrum(space)
    limit_err = unit_err = spectrum_err = cocycle_err = 0.0
    for _ in range(n):
        x = random_point(space, rng, 2.0)
        y = random_point(space, rng, 2.0)
        theta = random_boundary_point(space, rng)
        c = geodesic_ray_to_boundary(O, theta, t)
        limit = distance(x, c) - distance(O, c)
        limit_err = max(limit_err, abs(busemann(x, theta) - limit))
        unit_err = max(unit_err, abs(busemann_gradient(x, theta).norm() - 1.0))
        spectrum = np.linalg.eigvalsh(busemann_hessian(x, theta))
        spectrum_err = max(spectrum_err, float(np.abs(spectrum - expected).max()))
        cocycle = busemann(x, theta) - busemann(y, theta) - busemann(x, theta, base=y)
        cocycle_err = max(cocycle_err, abs(cocycle))
    grad_rel = hess_rel = 0.0
    for _ in range(n_fd):
        x = random_point(space, rng, 1.5)
        theta = random_boundary_point(space, rng)
        g = busemann_gradient(x, theta).coords
        grad_rel = max(grad_rel, np.linalg.norm(_fd_gradient(x, theta, 1e-5) - g) / np.linalg.norm(g))
        Hs = busemann_hessian(x, theta)
        hess_rel = max(hess_rel, np.linalg.norm(_fd_hessian(x, theta, 1e-4) - Hs) / np.linalg.norm(Hs))
    rows = {
        "limit_vs_closed_form": (limit_err, LIMIT_TOL),
        "gradient_unit_norm": (unit_err, UNIT_TOL),
        "hessian_spectrum": (spectrum_err, SPECTRUM_TOL),
        "gradient_finite_difference": (float(grad_rel), FD_GRAD_RTOL),
        "hessian_finite_difference": (float(hess_rel), FD_HESS_RTOL),
        "cocycle": (cocycle_err, COCYCLE_TOL),
    }
    return {name: {"residual": float(r), "tolerance": tol, "passed": bool(r <= tol)} for name, (r, tol) in rows.items()}


# -- natural map contexts ------------------------------------------------------

CONTEXT_MODES = ("random", "isometric", "perturbed", "collapse")


def _images_from_directions(target: Space, dirs):
    O = target.origin()
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return canonical_boundary_rep(target, O.rep[None, :] + dirs @ O.frame.T)


def random_boundary_map(seed_measure, target: Space, rng, mode: str, noise: float = 0.2) -> BoundaryMapSample:
    """Boundary map sample on the atoms of ``seed_measure``.

    ``random``: independent uniform images.  ``isometric``: a random isometry
    of the target after the standard inclusion.  ``perturbed``: the same with
    the image directions (seen from the origin) jittered by ``noise``.
    ``collapse``: all images within ``1e-3`` of a single direction.
    """
    source = seed_measure.space
    n = len(seed_measure)
    if mode == "random":
        imgs = np.array([random_boundary_point(target, rng).rep for _ in range(n)])
    elif mode in ("isometric", "perturbed"):
        g = random_isometry(target, rng, 1.0)
        imgs = boundary_image_reps(g, canonical_boundary_rep(target, embed_coordinates(source, target, seed_measure.thetas)))
        if mode == "perturbed":
            from .measures import BoundaryMeasure

            dirs = direction_coordinates(target.origin(), BoundaryMeasure(target, imgs, np.ones(n)))
            imgs = _images_from_directions(target, dirs + noise * rng.standard_normal(dirs.shape))
    elif mode == "collapse":
        u = rng.standard_normal(target.k)
        imgs = _images_from_directions(target, u / np.linalg.norm(u) + 1e-3 * rng.standard_normal((n, target.k)))
    else:
        raise ValueError(f"unknown boundary map mode {mode!r}")
    return BoundaryMapSample(source, target, seed_measure.thetas, imgs)


def random_context(source: Space, target: Space, seed: int, mode: str, n_atoms: int = None):
    """Seeded random natural-map context (random seed measure, sampled map)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(source.k + 2, 3 * source.k + 2)) if n_atoms is None else n_atoms
    beta = random_measure(source, int(rng.integers(2**31)), n, 4.0)
    return make_context(beta, random_boundary_map(beta, target, rng, mode))


# -- rigidity demo -------------------------------------------------------------

SCHEDULES = ("identity", "loxodromic", "mixed")


def standard_representation(source: Space, target: Space, rng, n_generators: int = 3) -> Representation:
    """Isometries of the source, included in the target: stand-ins for the
    standard embedding of a lattice."""
    gens = {}
    for i in range(n_generators):
        g = random_isometry(source, rng, 1.0)
        if i == 0:
            g = loxodromic_normal_form(source, 1.0) @ g
        gens[f"g{i}"] = embed_isometry(g, target)
    return Representation(gens, source, target)


def conjugator(schedule: str, source: Space, target: Space, n: int, rng) -> Isometry:
    """``g_n`` for the schedule.

    ``loxodromic`` is the normal form with parameter ``n``; ``mixed`` follows
    it by a random rotation of the coordinates outside the source, which
    commutes with the included source isometries.
    """
    if schedule == "identity":
        return Isometry.identity(target)
    g = loxodromic_normal_form(target, float(n))
    if schedule == "mixed":
        g = g @ _extra_rotation(source, target, rng)
    return g


def _extra_rotation(source: Space, target: Space, rng) -> Isometry:
    extra = target.p - source.p
    alg = target.algebra
    U = np.zeros((target.p, target.p, alg.d))
    U[np.arange(source.p), np.arange(source.p), 0] = 1.0
    if extra:
        U[source.p:, source.p:] = random_compact_matrix(alg, extra, rng)
    return stabilizer_element(target, U)


def rigidity_demo(source: Space, target: Space, schedule: str, steps: int = 8, seed: int = 0,
                  n_generators: int = 3) -> list:
    """Conjugates ``rho_n = g_n i g_n^-1`` of an included representation.

    For each ``n`` the natural map of the symmetric model composed with
    ``g_n`` is evaluated at the origin (``drift = d(F_n(O), O)``), the
    representation is renormalised by the transvection taking ``F_n(O)`` back
    to ``O`` and compared with ``i``; generator traces are checked against
    their translation-length bound.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}")
    rng = np.random.default_rng(seed)
    rho = standard_representation(source, target, rng, n_generators)
    base_ctx = symmetric_model(source, target)
    O_src, O = source.origin(), target.origin()
    records = []
    for n in range(1, steps + 1):
        g = conjugator(schedule, source, target, n, rng)
        rho_n = conjugate_representation(rho, g)
        ctx = make_context(base_ctx.density.seed, base_ctx.D.composed_with(g), base_ctx.delta)
        Fn = natural_map_point(ctx, O_src)
        h = transvection(Fn, O)
        normalized = conjugate_representation(rho_n, h)
        traces = {name: trace_bound_check(normalized.generators[name]).to_dict() for name in normalized.names()}
        records.append({
            "n": n,
            "drift": distance(Fn, O),
            "expected_drift": distance(apply(g, O), O),
            "distance_unnormalized": representation_distance(rho_n, rho),
            "distance_normalized": representation_distance(normalized, rho),
            "traces": traces,
        })
    return records


def rigidity_checks(records, schedule: str, tol: float = 1e-9) -> dict:
    """Drift growth, normalised distance and trace bounds along a schedule.

    Normalised distances must not increase after ``n = 5`` unless they stay
    below ``tol`` (rounding noise of an already converged sequence).
    """
    drifts = [r["drift"] for r in records]
    dists = [r["distance_normalized"] for r in records]
    monotone = all(not (r["n"] > 5 and r["distance_normalized"] > max(prev["distance_normalized"], tol))
                   for prev, r in zip(records, records[1:]))
    checks = {
        "normalized_distance": {"value": max(dists), "tolerance": tol, "passed": bool(max(dists) <= tol)},
        "monotone_after_5": {"passed": bool(monotone)},
        "traces_bounded": {"passed": all(t["holds"] for r in records for t in r["traces"].values())},
    }
    if schedule != "identity":
        inc = all(b > a for a, b in zip(drifts, drifts[1:]))
        checks["drift_strictly_increasing"] = {"passed": bool(inc)}
    return checks


# -- spectrum acceptance ---------------------------------------------------------

# closed-form vertex value for k = 4, d = 2
VERTEX_BOUND_4_2 = 3.0**4.5 / 4.0**8
VERTEX_RATIO_4_2 = 0.549
VERTEX_RATIO_OTHER = 1e-3
VALUE_RTOL = 1e-9
ARGMAX_TOL = 1e-5


def spectrum_checks(cfg, margin: float = 1e-6, samples: int = 2000, eps=(1e-2, 1e-4, 1e-6)) -> dict:
    """Maximum, boundary behaviour and near-maximal set shrinkage for ``cfg``."""
    from .spectrum_lab import boundary_scan, convergence_probe, maximize_phi

    res = maximize_phi(cfg)
    scan = boundary_scan(cfg, margin, samples)
    probe = convergence_probe(eps, cfg)
    k = cfg.k
    value_err = abs(res.value - cfg.max_value) / cfg.max_value
    argmax_err = float(np.linalg.norm(res.Hstar - np.eye(k) / k))
    ratio = scan.vertex_sup / scan.interior_max
    if (cfg.k, cfg.d) == (4, 2):
        vertex_ok = scan.vertex_sup <= VERTEX_BOUND_4_2 + 1e-6 and ratio <= VERTEX_RATIO_4_2
        vertex = {"vertex_sup": scan.vertex_sup, "bound": VERTEX_BOUND_4_2, "ratio": ratio,
                  "ratio_tolerance": VERTEX_RATIO_4_2, "passed": bool(vertex_ok)}
    else:
        vertex = {"ratio": ratio, "ratio_tolerance": VERTEX_RATIO_OTHER, "passed": bool(ratio <= VERTEX_RATIO_OTHER)}
    checks = {
        "maximum_value": {"value": res.value, "expected": cfg.max_value, "relative_error": value_err,
                          "tolerance": VALUE_RTOL, "passed": bool(value_err <= VALUE_RTOL)},
        "argmax": {"frobenius_error": argmax_err, "tolerance": ARGMAX_TOL, "passed": bool(argmax_err <= ARGMAX_TOL)},
        "vertex": vertex,
        "near_maximal_sets": {"diameters": probe.diameters, "degenerate_gap": probe.degenerate_gap,
                              "passed": bool(probe.strictly_decreasing and probe.degenerate_gap > 0)},
    }
    return {"maximum": res.to_dict(), "scan": scan.to_dict(), "probe": probe.to_dict(), "checks": checks}
