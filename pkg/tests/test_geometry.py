import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from natmap.errors import NonNegativeNorm, NotNullVector, SpaceMismatch
from natmap.experiments import expected_hessian_spectrum
from natmap.geometry import (
    Space,
    boundary_from_direction,
    busemann,
    busemann_gradient,
    busemann_hessian,
    direction_to_boundary,
    distance,
    exp_map,
    geodesic_ray_to_boundary,
    log_map,
    log_polar_volume_density,
    normalize_boundary,
    normalize_point,
    random_boundary_point,
    random_point,
    random_unit_tangent,
    real_axis_point,
    unit_sphere_area,
    volume_growth_rate,
)


# -- independent oracle: Hermitian form with numpy complex / 2x2 complex matrices --


def _scalars(space, rep):
    """Coordinates as complex numbers, or quaternions as 2x2 complex matrices."""
    rep = np.asarray(rep).reshape(-1, space.d)
    if space.d == 2:
        return rep[:, 0] + 1j * rep[:, 1]
    a, b, c, d = rep.T
    return np.array([[[a_ + 1j * b_, c_ + 1j * d_], [-c_ + 1j * d_, a_ - 1j * b_]]
                     for a_, b_, c_, d_ in zip(a, b, c, d)])


def oracle_form_abs(space, z, w):
    """``|sum_i s_i conj(w_i) z_i|`` with signature ``(+, ..., +, -)``."""
    Z, W = _scalars(space, z), _scalars(space, w)
    sig = np.ones(len(Z))
    sig[-1] = -1
    if space.d == 2:
        return abs(np.sum(sig * np.conj(W) * Z))
    total = sum(s * (Wi.conj().T @ Zi) for s, Zi, Wi in zip(sig, Z, W))
    # a quaternion q as 2x2 matrix has determinant |q|^2
    return np.sqrt(abs(np.linalg.det(total)))


def oracle_distance(space, x, y):
    c = oracle_form_abs(space, x, y) / np.sqrt(oracle_form_abs(space, x, x) * oracle_form_abs(space, y, y))
    return np.arccosh(max(c, 1.0))


def oracle_busemann(space, x, theta):
    O = space.origin().rep
    xn = x / np.sqrt(oracle_form_abs(space, x, x))
    return np.log(oracle_form_abs(space, xn, theta)) - np.log(oracle_form_abs(space, O, theta))


seeds = st.integers(0, 2**32 - 1)


# -- metric ----------------------------------------------------------------------


def test_distance_matches_oracle(space, rng):
    for _ in range(50):
        x, y = random_point(space, rng, 3.0), random_point(space, rng, 3.0)
        assert abs(distance(x, y) - oracle_distance(space, x.rep, y.rep)) < 1e-9


def test_busemann_matches_oracle(space, rng):
    for _ in range(50):
        x, theta = random_point(space, rng, 3.0), random_boundary_point(space, rng)
        assert abs(busemann(x, theta) - oracle_busemann(space, x.rep, theta.rep)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_triangle_inequality_and_symmetry(seed):
    rng = np.random.default_rng(seed)
    for space in (Space.complex(2), Space.quaternionic(2)):
        x, y, z = (random_point(space, rng, 2.5) for _ in range(3))
        assert abs(distance(x, y) - distance(y, x)) < 1e-12
        assert distance(x, z) <= distance(x, y) + distance(y, z) + 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_representative_does_not_matter(seed):
    rng = np.random.default_rng(seed)
    for space in (Space.complex(2), Space.quaternionic(2)):
        x = random_point(space, rng, 2.0)
        q = rng.standard_normal(space.d)
        scaled = space.algebra.vector_from_real(x.rep)
        scaled = np.array([space.algebra.mul(z, q) for z in scaled]).reshape(-1)
        assert_allclose(normalize_point(space, scaled).rep, x.rep, atol=1e-12)


def test_exp_log_round_trip(space, rng):
    for _ in range(30):
        x = random_point(space, rng, 2.0)
        v = random_unit_tangent(x, rng) * rng.uniform(0.1, 3.0)
        y = exp_map(x, v)
        assert abs(distance(x, y) - v.norm()) < 1e-10
        assert_allclose(log_map(x, y).vec, v.vec, atol=1e-9)


def test_distance_accurate_for_close_points(space, rng):
    x = random_point(space, rng, 1.0)
    v = random_unit_tangent(x, rng)
    # rounding of the stored coordinates limits this to about eps / h
    for h in (1e-4, 1e-6, 1e-8):
        assert abs(distance(x, exp_map(x, v, h)) / h - 1) < 1e-6


def test_real_axis_distance(space):
    O = space.origin()
    for t in (0.1, 1.0, 5.0):
        assert abs(distance(O, real_axis_point(space, t)) - t) < 1e-12


def test_invalid_points_rejected():
    space = Space.complex(2)
    with pytest.raises(NonNegativeNorm):
        normalize_point(space, np.array([1.0, 0, 0, 0, 0.5, 0]))
    with pytest.raises(NotNullVector):
        normalize_boundary(space, np.array([0.3, 0, 0, 0, 1.0, 0]))
    with pytest.raises(SpaceMismatch):
        distance(Space.complex(2).origin(), Space.complex(3).origin())


# -- frames and structure ------------------------------------------------------


def test_frame_is_orthonormal_and_horizontal(space, rng):
    x = random_point(space, rng, 2.0)
    F = x.frame
    assert_allclose(F.T @ (space.signature[:, None] * F), np.eye(space.k), atol=1e-11)
    for R in space.right_units:
        # horizontal: Re <f, x R> = 0 for every right unit
        assert_allclose(F.T @ (space.signature * (R @ x.rep)), 0.0, atol=1e-11)


def test_structure_operators(space, rng):
    x = random_point(space, rng, 2.0)
    Js = x.frame_J
    assert len(Js) == space.d - 1
    for J in Js:
        assert_allclose(J @ J, -np.eye(space.k), atol=1e-10)
        assert_allclose(J.T, -J, atol=1e-10)
    if space.d == 4:
        J1, J2, J3 = Js
        assert_allclose(J1 @ J2, -(J2 @ J1), atol=1e-10)
        assert_allclose(np.abs(J1 @ J2), np.abs(J3), atol=1e-10)


# -- Busemann calculus ---------------------------------------------------------


def test_busemann_is_the_limit(space, rng):
    O = space.origin()
    for _ in range(20):
        x, theta = random_point(space, rng, 2.0), random_boundary_point(space, rng)
        c = geodesic_ray_to_boundary(O, theta, 15.0)
        assert abs(busemann(x, theta) - (distance(x, c) - distance(O, c))) < 1e-6


def test_busemann_gradient_and_hessian(space, rng):
    expected = expected_hessian_spectrum(space)
    for _ in range(20):
        x, theta = random_point(space, rng, 2.0), random_boundary_point(space, rng)
        g = busemann_gradient(x, theta)
        assert abs(g.norm() - 1) < 1e-12
        assert_allclose(g.vec, -direction_to_boundary(x, theta).vec, atol=1e-12)
        assert_allclose(np.linalg.eigvalsh(busemann_hessian(x, theta)), expected, atol=1e-10)


def test_busemann_along_its_ray(space, rng):
    x, theta = random_point(space, rng, 1.0), random_boundary_point(space, rng)
    b0 = busemann(x, theta)
    for t in (0.5, 2.0, 7.0):
        assert abs(busemann(geodesic_ray_to_boundary(x, theta, t), theta) - (b0 - t)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_busemann_is_one_lipschitz_with_cocycle(seed):
    rng = np.random.default_rng(seed)
    space = Space.quaternionic(2) if seed % 2 else Space.complex(2)
    x, y, z = (random_point(space, rng, 2.0) for _ in range(3))
    theta = random_boundary_point(space, rng)
    assert abs(busemann(x, theta) - busemann(y, theta)) <= distance(x, y) + 1e-10
    lhs = busemann(x, theta, base=z)
    assert abs(lhs - (busemann(x, theta, base=y) + busemann(y, theta, base=z))) < 1e-10


def test_direction_and_boundary_are_inverse(space, rng):
    x, theta = random_point(space, rng, 2.0), random_boundary_point(space, rng)
    assert_allclose(boundary_from_direction(direction_to_boundary(x, theta)).rep, theta.rep, atol=1e-10)


# -- volume ----------------------------------------------------------------------


def test_polar_density_oracle(space):
    t = np.array([0.2, 1.0, 3.0])
    k, d = space.k, space.d
    direct = np.sinh(t) ** (k - d) * (np.sinh(2 * t) / 2) ** (d - 1)
    assert_allclose(np.exp(log_polar_volume_density(space, t)), direct, rtol=1e-12)


def test_polar_density_needs_positive_radius(space):
    with pytest.raises(ValueError):
        log_polar_volume_density(space, 0.0)


@pytest.mark.parametrize("space,expected", [(Space.complex(2), 4), (Space.quaternionic(2), 10),
                                            (Space.complex(3), 6)], ids=str)
def test_volume_growth_rate(space, expected):
    assert abs(volume_growth_rate(space) - expected) < 1e-3


def test_unit_sphere_area():
    assert_allclose([unit_sphere_area(2), unit_sphere_area(3), unit_sphere_area(4)],
                    [2 * np.pi, 4 * np.pi, 2 * np.pi**2])
