"""Acceptance checks: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from natmap.barycenter import Regime, SolverConfig, barycenter, stationarity_residual, with_start
from natmap.errors import ElementaryData
from natmap.experiments import busemann_suite, random_context, rigidity_checks, rigidity_demo
from natmap.geometry import Space, distance, random_boundary_point, random_point, volume_growth_rate
from natmap.isometry import apply, random_isometry
from natmap.measures import (
    BoundaryMeasure,
    ConformalDensity,
    cross_polytope_measure,
    density_at,
    pushforward,
    random_measure,
)
from natmap.natural_map import (
    chain_from_forms,
    differential_matrix,
    evaluate_point,
    finite_difference_differential,
    forms_at,
    symmetric_model,
)
from natmap.spectrum_lab import LabConfig, boundary_scan, convergence_probe, maximize_phi

pytestmark = pytest.mark.slow

RESULTS = []


def report(number: int, name: str, passed: bool, detail: str):
    line = f"criterion {number} [{name}]: {'PASS' if passed else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print(line)
    assert passed, line


# -- 1: maximum of the determinant functional ------------------------------------

TARGETS = {(4, 2): Fraction(1, 256), (6, 2): Fraction(1, 46656), (8, 4): Fraction(2, 25) ** 8}


def test_criterion_1_phi_maximum():
    rows, ok = [], True
    for (k, d), target in TARGETS.items():
        cfg = LabConfig(k, d)
        t0 = time.perf_counter()
        res = maximize_phi(cfg)
        elapsed = time.perf_counter() - t0
        rel = abs(res.value - float(target)) / float(target)
        frob = float(np.linalg.norm(res.Hstar - np.eye(k) / k))
        good = rel <= 1e-9 and frob <= 1e-5 and elapsed <= 60
        ok &= good
        rows.append(f"({k},{d}) rel={rel:.1e} argmax={frob:.1e} t={elapsed:.1f}s")
    report(1, "phi maximum", ok, "; ".join(rows))


# -- 2: boundary behaviour ---------------------------------------------------------


def test_criterion_2_vertex_bound():
    margin = 1e-6
    rows, ok = [], True
    scan = boundary_scan(LabConfig(4, 2), margin)
    bound = 3.0**4.5 / 4.0**8
    ratio = scan.vertex_sup / scan.interior_max
    good = scan.vertex_sup <= bound + 1e-6 and ratio <= 0.549
    ok &= good
    rows.append(f"(4,2) vertexSup={scan.vertex_sup:.6e} (bound {bound:.6e}) ratio={ratio:.4f}")
    for k, d in [(6, 2), (8, 4)]:
        scan = boundary_scan(LabConfig(k, d), margin)
        ratio = scan.vertex_sup / scan.interior_max
        ok &= ratio <= 1e-3
        rows.append(f"({k},{d}) vertex ratio={ratio:.1e}")
    report(2, "vertex bound", ok, "; ".join(rows))


# -- 3: Busemann calculus ------------------------------------------------------------


def test_criterion_3_busemann_suite():
    t0 = time.perf_counter()
    rows, ok = [], True
    for space in (Space.complex(2), Space.quaternionic(2)):
        res = busemann_suite(space, np.random.default_rng(3), n=100, t=15.0)
        ok &= all(r["passed"] for r in res.values())
        worst = max(res, key=lambda n: res[n]["residual"] / res[n]["tolerance"])
        rows.append(f"{space}: worst {worst} {res[worst]['residual']:.1e}/{res[worst]['tolerance']:.0e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 10
    report(3, "Busemann suite", ok, "; ".join(rows) + f"; t={elapsed:.1f}s")


# -- 4: barycentres ------------------------------------------------------------------


def test_criterion_4_barycenter_suite():
    rng = np.random.default_rng(4)
    worst = {"fixpoint": 0.0, "equivariance": 0.0, "scaling": 0.0, "restarts": 0.0, "residual": 0.0}
    atom_ok = True
    for space in (Space.complex(2), Space.quaternionic(2)):
        thetas = np.array([random_boundary_point(space, rng).rep for _ in range(4)])
        res = barycenter(BoundaryMeasure(space, thetas, [3.0, 1.0, 0.5, 0.5]))
        atom_ok &= res.regime == Regime.ATOM_DOMINATED and np.allclose(res.location.rep, thetas[0])
        for centre in (space.origin(), random_point(space, rng)):
            loc = barycenter(cross_polytope_measure(centre)).location
            worst["fixpoint"] = max(worst["fixpoint"], distance(loc, centre))
        beta = random_measure(space, 7, 40)
        ref = barycenter(beta)
        worst["residual"] = max(worst["residual"], stationarity_residual(beta, ref.location))
        for _ in range(50):
            g = random_isometry(space, rng)
            moved = barycenter(pushforward(beta, g)).location
            worst["equivariance"] = max(worst["equivariance"], distance(moved, apply(g, ref.location)))
        for c in (1e-3, 0.5, 7.0, 1e4):
            worst["scaling"] = max(worst["scaling"], distance(barycenter(beta.scaled(c)).location, ref.location))
        for _ in range(20):
            start = random_point(space, rng, 4.0)
            res = barycenter(beta, with_start(SolverConfig(), start))
            worst["restarts"] = max(worst["restarts"], distance(res.location, ref.location))
            worst["residual"] = max(worst["residual"], res.residual)
    ok = (atom_ok and worst["fixpoint"] <= 1e-8 and worst["equivariance"] <= 1e-8
          and worst["scaling"] <= 1e-8 and worst["restarts"] <= 1e-7 and worst["residual"] <= 1e-10)
    detail = f"atom rule {'ok' if atom_ok else 'broken'}; " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    report(4, "barycenter suite", ok, detail)


# -- 5: Jacobian bound -------------------------------------------------------------

PAIRS = [(Space.complex(2), Space.complex(2)), (Space.complex(2), Space.complex(3)),
         (Space.complex(2), Space.complex(4)), (Space.quaternionic(2), Space.quaternionic(3))]
MODES = ("random", "isometric", "perturbed")


def _chain_slack(ch):
    scale = max(1.0, ch.rhs)
    return min(ch.mid1 - ch.lhs, ch.mid2 - ch.mid1, -abs(ch.rhs - ch.mid2)) / scale


def test_criterion_5_jacobian_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    contexts = points = skipped = 0
    max_jac, min_slack = 0.0, np.inf
    seed = 0
    per_pair = 130
    for source, target in PAIRS:
        done = 0
        while done < per_pair:
            ctx = random_context(source, target, seed, MODES[seed % 3])
            seed += 1
            admissible = False
            for x in (source.origin(), random_point(source, rng, 1.0)):
                try:
                    forms = forms_at(ctx, x)
                except ElementaryData:
                    skipped += 1
                    continue
                ch = chain_from_forms(ctx, forms)
                max_jac = max(max_jac, ch.jac)
                min_slack = min(min_slack, _chain_slack(ch))
                points += 1
                admissible = True
            if admissible:
                done += 1
                contexts += 1
    sym_jac, sym_sv = 0.0, 0.0
    for source, target in PAIRS:
        for centre in (source.origin(), random_point(source, rng, 1.5)):
            rep = evaluate_point(symmetric_model(source, target, centre), centre)
            sym_jac = max(sym_jac, abs(rep.jac - 1))
            sym_sv = max(sym_sv, float(np.abs(rep.singular_values - 1).max()))
    elapsed = time.perf_counter() - t0
    ok = (contexts >= 500 and max_jac <= 1 + 1e-6 and min_slack >= -1e-9
          and sym_jac <= 1e-6 and sym_sv <= 1e-3 and elapsed <= 300)
    detail = (f"{contexts} contexts / {points} points ({skipped} inadmissible points skipped); "
              f"max Jac={max_jac:.4f}; min chain slack={min_slack:.1e}; "
              f"symmetric |Jac-1|={sym_jac:.1e}, |sv-1|={sym_sv:.1e}; t={elapsed:.0f}s")
    report(5, "Jacobian bound", ok, detail)


# -- 6: implicit differential --------------------------------------------------------


def test_criterion_6_implicit_differential():
    rng = np.random.default_rng(6)
    worst, count, seed = 0.0, 0, 1000
    while count < 20:
        source, target = PAIRS[count % len(PAIRS)]
        ctx = random_context(source, target, seed, MODES[seed % 3])
        seed += 1
        x = random_point(source, rng, 1.0)
        try:
            A = differential_matrix(ctx, forms_at(ctx, x))
        except ElementaryData:
            continue
        fd = finite_difference_differential(ctx, x)
        worst = max(worst, float(np.linalg.norm(fd - A) / np.linalg.norm(A)))
        count += 1
    report(6, "implicit differential", worst <= 1e-4, f"{count} contexts, max relative gap {worst:.1e}")


# -- 7: conformal densities ----------------------------------------------------------


def test_criterion_7_conformal_density():
    rng = np.random.default_rng(7)
    worst = 0.0
    for space in (Space.complex(2), Space.quaternionic(2)):
        fam = ConformalDensity(random_measure(space, 9, 70), float(space.growth_exponent))
        for _ in range(20):
            y, x = random_point(space, rng), random_point(space, rng)
            direct = density_at(fam, x).weights
            via = density_at(ConformalDensity(density_at(fam, y), fam.delta, y), x).weights
            worst = max(worst, float(np.max(np.abs(via / direct - 1))))
    slope_c = volume_growth_rate(Space.complex(2))
    slope_h = volume_growth_rate(Space.quaternionic(2))
    ok = worst <= 1e-9 and abs(slope_c - 4) <= 1e-3 and abs(slope_h - 10) <= 1e-3
    report(7, "conformal density", ok,
           f"cocycle rel={worst:.1e}; slope (4,2)={slope_c:.6f}, (8,4)={slope_h:.6f}")


# -- 8: rigidity demo ----------------------------------------------------------------


def test_criterion_8_rigidity_demo():
    rows, ok = [], True
    for source, target in [(Space.complex(2), Space.complex(3)), (Space.quaternionic(2), Space.quaternionic(3))]:
        for schedule in ("loxodromic", "mixed"):
            recs = rigidity_demo(source, target, schedule, steps=8, seed=8)
            checks = rigidity_checks(recs, schedule)
            ok &= all(c["passed"] for c in checks.values())
            rows.append(f"{source}->{target} {schedule}: drift {recs[0]['drift']:.1f}..{recs[-1]['drift']:.1f}, "
                        f"max normalised={checks['normalized_distance']['value']:.1e}, "
                        f"traces {'ok' if checks['traces_bounded']['passed'] else 'violated'}")
    report(8, "rigidity demo", ok, "; ".join(rows))


# -- 9: near-maximal sets --------------------------------------------------------------


def test_criterion_9_convergence_probe():
    rows, ok = [], True
    for k, d in [(4, 2), (8, 4)]:
        probe = convergence_probe([1e-2, 1e-4, 1e-6], LabConfig(k, d))
        ok &= probe.strictly_decreasing and probe.degenerate_gap > 0
        diams = ", ".join(f"{x:.2e}" for x in probe.diameters)
        rows.append(f"({k},{d}) diameters [{diams}] gap={probe.degenerate_gap:.2e}")
    report(9, "near-maximal sets", ok, "; ".join(rows))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
