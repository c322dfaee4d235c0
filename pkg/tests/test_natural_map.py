import numpy as np
import pytest
from numpy.testing import assert_allclose

from natmap.errors import ElementaryData, SpaceMismatch
from natmap.experiments import random_context
from natmap.geometry import Space, distance, random_point
from natmap.isometry import apply, random_isometry
from natmap.measures import BoundaryMapSample, random_measure
from natmap.natural_map import (
    ball_quadrature,
    ball_volume,
    cauchy_gap,
    differential,
    differential_matrix,
    embedded_point,
    evaluate_point,
    finite_difference_differential,
    forms_at,
    inequality_chain_report,
    jacobian_k,
    make_context,
    map_volume,
    natural_map_point,
    operator_norm_probe,
    stationarity_residuals,
    symmetric_model,
)

PAIRS = [(Space.complex(2), Space.complex(2)), (Space.complex(2), Space.complex(3)),
         (Space.quaternionic(2), Space.quaternionic(3))]
pair_ids = [f"{a}-{b}" for a, b in PAIRS]


def _admissible(source, target, mode, seeds, points=2):
    """Random contexts and points where the pushed measure has no heavy atom."""
    rng = np.random.default_rng(0)
    out = []
    for seed in seeds:
        ctx = random_context(source, target, seed, mode)
        for _ in range(points):
            x = random_point(source, rng, 1.0)
            try:
                forms_at(ctx, x)
            except ElementaryData:
                continue
            out.append((ctx, x))
    return out


@pytest.mark.parametrize("source,target", PAIRS, ids=pair_ids)
def test_symmetric_model_is_isometric(source, target, rng):
    for centre in (source.origin(), random_point(source, rng, 1.5)):
        ctx = symmetric_model(source, target, centre)
        rep = evaluate_point(ctx, centre)
        assert distance(rep.Fx, embedded_point(centre, target)) < 1e-9
        assert abs(rep.jac - 1) < 1e-9
        assert_allclose(rep.singular_values, 1.0, atol=1e-9)
        assert rep.chain.holds


@pytest.mark.parametrize("source,target", PAIRS, ids=pair_ids)
@pytest.mark.parametrize("mode", ["random", "isometric", "perturbed"])
def test_jacobian_bound_and_chain(source, target, mode):
    cases = _admissible(source, target, mode, range(6))
    assert cases
    for ctx, x in cases:
        ch = inequality_chain_report(ctx, x)
        assert ch.jac <= 1 + 1e-6
        assert ch.holds
        assert ch.jac <= ch.jac_bound * (1 + 1e-9)
        assert ch.lhs <= ch.mid1 + 1e-9 and ch.mid1 <= ch.mid2 + 1e-9


@pytest.mark.parametrize("source,target", PAIRS, ids=pair_ids)
def test_differential_matches_finite_differences(source, target):
    for ctx, x in _admissible(source, target, "random", range(3), points=1):
        A = differential_matrix(ctx, forms_at(ctx, x))
        fd = finite_difference_differential(ctx, x)
        assert np.linalg.norm(fd - A) <= 1e-4 * max(np.linalg.norm(A), 1e-3)


def test_stationarity(rng):
    source, target = Space.complex(2), Space.complex(3)
    for ctx, x in _admissible(source, target, "random", range(4), points=1):
        Fx = natural_map_point(ctx, x)
        pushed, per_atom = stationarity_residuals(ctx, x, Fx)
        assert pushed < 1e-10 and per_atom < 1e-10


def test_equivariance_under_target_isometries(rng):
    source, target = Space.complex(2), Space.complex(3)
    for ctx, x in _admissible(source, target, "random", range(3), points=1):
        g = random_isometry(target, rng, 1.0)
        moved = make_context(ctx.density.seed, ctx.D.composed_with(g), ctx.delta)
        assert distance(natural_map_point(moved, x), apply(g, natural_map_point(ctx, x))) < 1e-8
        assert abs(jacobian_k(moved, x) - jacobian_k(ctx, x)) < 1e-8


def test_cauchy_gap_is_nonnegative(rng):
    source, target = Space.quaternionic(2), Space.quaternionic(3)
    for ctx, x in _admissible(source, target, "perturbed", range(3), points=1):
        forms = forms_at(ctx, x)
        A = differential_matrix(ctx, forms)
        for _ in range(20):
            u, v = rng.standard_normal(source.k), rng.standard_normal(target.k)
            assert cauchy_gap(ctx, forms, A, u, v) >= -1e-12


def test_map_is_lipschitz_on_segments(rng):
    source, target = Space.complex(2), Space.complex(2)
    ctx = random_context(source, target, 3, "isometric")
    ball = [random_point(source, rng, 0.3) for _ in range(3)]
    pairs = [(ball[0], ball[1]), (ball[1], ball[2])]
    probe = operator_norm_probe(ctx, ball, pairs)
    assert all(p["holds"] for p in probe["pairs"])


def test_map_volume_of_isometric_models():
    # symmetric models centred at every node have Jacobian 1, so the map
    # volume is the ball volume up to quadrature error
    space = Space.complex(2)
    dirs = np.random.default_rng(1).standard_normal((4, space.k))
    points, weights = ball_quadrature(space, 1.0, 12, dirs)
    jacs = [jacobian_k(symmetric_model(space, center=x), x) for x in points]
    assert abs(map_volume(np.column_stack([weights, jacs])) / ball_volume(space, 1.0) - 1) < 1e-9


def test_map_volume_rejects_negative_weights():
    with pytest.raises(ValueError):
        map_volume([[-1.0, 1.0]])


def test_collapsed_data_is_elementary():
    source, target = Space.complex(2), Space.complex(2)
    beta = random_measure(source, 0, 5)
    collapse = BoundaryMapSample(source, target, beta.thetas, np.repeat(beta.thetas[:1], 5, axis=0))
    ctx = make_context(beta, collapse)
    with pytest.raises(ElementaryData):
        natural_map_point(ctx, source.origin())


def test_context_validation():
    beta = random_measure(Space.complex(3), 0, 5)
    D = BoundaryMapSample(Space.complex(3), Space.complex(2), beta.thetas,
                          random_measure(Space.complex(2), 1, 5).thetas)
    with pytest.raises(SpaceMismatch):
        make_context(beta, D)
    ctx = symmetric_model(Space.complex(2))
    with pytest.raises(SpaceMismatch):
        natural_map_point(ctx, Space.complex(3).origin())


def test_differential_object(rng):
    ctx = symmetric_model(Space.complex(2))
    O = ctx.source.origin()
    D = differential(ctx, O)
    u = O.tangent(rng.standard_normal(4))
    assert abs(D(u).norm() - u.norm()) < 1e-9
