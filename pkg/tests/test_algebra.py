import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from natmap.algebra import COMPLEX, QUATERNION, ScalarAlgebra, random_compact_matrix, random_unit_scalar

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def quat_as_complex2(q):
    """Independent model: ``a + b i + c j + d k`` as a 2x2 complex matrix."""
    a, b, c, d = q
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])


@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))
def test_quaternion_product_matches_matrix_model(p, q):
    H = ScalarAlgebra(QUATERNION)
    assert_allclose(quat_as_complex2(H.mul(p, q)), quat_as_complex2(p) @ quat_as_complex2(q), atol=1e-9)


@given(arrays(float, 2, elements=finite), arrays(float, 2, elements=finite))
def test_complex_product(p, q):
    C = ScalarAlgebra(COMPLEX)
    r = C.mul(p, q)
    z = complex(*p) * complex(*q)
    assert_allclose(r, [z.real, z.imag], atol=1e-9)


@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))
def test_quaternions_associate(p, q, r):
    H = ScalarAlgebra(QUATERNION)
    assert_allclose(H.mul(H.mul(p, q), r), H.mul(p, H.mul(q, r)), atol=1e-8)


@pytest.mark.parametrize("kind", [COMPLEX, QUATERNION])
def test_conjugate_is_inverse_for_units(kind, rng):
    alg = ScalarAlgebra(kind)
    q = random_unit_scalar(alg, rng)
    assert_allclose(alg.mul(q, alg.conj(q)), alg.one(), atol=1e-14)


@pytest.mark.parametrize("kind", [COMPLEX, QUATERNION])
def test_left_and_right_actions_commute(kind, rng):
    alg = ScalarAlgebra(kind)
    p, q = rng.standard_normal(alg.d), rng.standard_normal(alg.d)
    L, R = alg.left_matrix(p), alg.right_matrix(q)
    assert_allclose(L @ R, R @ L, atol=1e-12)


@pytest.mark.parametrize("kind", [COMPLEX, QUATERNION])
def test_real_block_matrix_is_a_homomorphism(kind, rng):
    alg = ScalarAlgebra(kind)
    A = rng.standard_normal((3, 3, alg.d))
    B = rng.standard_normal((3, 3, alg.d))
    # componentwise product over the algebra: (AB)_ij = sum_l A_il B_lj
    AB = np.zeros_like(A)
    for i in range(3):
        for j in range(3):
            AB[i, j] = sum(alg.mul(A[i, l], B[l, j]) for l in range(3))
    assert_allclose(alg.matrix_to_real(A) @ alg.matrix_to_real(B), alg.matrix_to_real(AB), atol=1e-12)
    assert_allclose(alg.matrix_from_real(alg.matrix_to_real(A)), A)


@pytest.mark.parametrize("kind", [COMPLEX, QUATERNION])
def test_random_compact_matrix_is_orthogonal(kind, rng):
    alg = ScalarAlgebra(kind)
    R = alg.matrix_to_real(random_compact_matrix(alg, 3, rng))
    assert_allclose(R.T @ R, np.eye(R.shape[0]), atol=1e-12)
    # commutes with the right scalar action
    for r in alg.right_units:
        Rs = np.kron(np.eye(3), r)
        assert_allclose(R @ Rs, Rs @ R, atol=1e-12)


def test_unknown_algebra_rejected():
    with pytest.raises(ValueError):
        ScalarAlgebra("octonion")


@settings(max_examples=50)
@given(arrays(float, 4, elements=finite))
def test_quaternion_norm_is_multiplicative(q):
    H = ScalarAlgebra(QUATERNION)
    p = np.array([0.3, -1.0, 2.0, 0.5])
    assert np.isclose(H.abs(H.mul(p, q)), H.abs(p) * H.abs(q), rtol=1e-9, atol=1e-9)
