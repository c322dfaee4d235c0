"""Complex and quaternionic scalars as real component arrays.

A scalar of the algebra is stored as a length-``d`` real array of
components along ``(1, i)`` for the complex numbers or ``(1, i, j, k)`` for
the quaternions.  A vector of ``n`` scalars is flattened to a real array of
length ``d * n`` with components ``[z_0, z_1, ...]`` laid out coordinate by
coordinate.  Left multiplication by a scalar and right multiplication by a
scalar are then real ``d x d`` matrices, and a matrix over the algebra acting
on the left becomes a real block matrix that commutes with every right
multiplication.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

COMPLEX = "complex"
QUATERNION = "quaternion"

_COMPONENT_NAMES = {COMPLEX: ("re", "i"), QUATERNION: ("re", "i", "j", "k")}


def _hamilton(p, q):
    """Hamilton product of quaternion component arrays (last axis)."""
    a1, b1, c1, d1 = np.moveaxis(np.asarray(p, dtype=float), -1, 0)
    a2, b2, c2, d2 = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        axis=-1,
    )


def _complex_mul(p, q):
    a1, b1 = np.moveaxis(np.asarray(p, dtype=float), -1, 0)
    a2, b2 = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack([a1 * a2 - b1 * b2, a1 * b2 + b1 * a2], axis=-1)


@dataclass(frozen=True)
class ScalarAlgebra:
    """The scalar algebra, ``"complex"`` (d = 2) or ``"quaternion"`` (d = 4)."""

    kind: str

    def __post_init__(self):
        if self.kind not in _COMPONENT_NAMES:
            raise ValueError(f"unknown scalar algebra {self.kind!r}")

    @property
    def d(self) -> int:
        return 2 if self.kind == COMPLEX else 4

    @property
    def component_names(self):
        return _COMPONENT_NAMES[self.kind]

    def mul(self, p, q):
        """Product ``p q`` of component arrays, broadcasting over leading axes."""
        if self.kind == COMPLEX:
            return _complex_mul(p, q)
        return _hamilton(p, q)

    def conj(self, q):
        q = np.array(q, dtype=float)
        q[..., 1:] *= -1.0
        return q

    def abs(self, q):
        return np.linalg.norm(q, axis=-1)

    def one(self):
        e = np.zeros(self.d)
        e[0] = 1.0
        return e

    def unit(self, a: int):
        e = np.zeros(self.d)
        e[a] = 1.0
        return e

    def left_matrix(self, q):
        """Real matrix of ``z -> q z``."""
        basis = np.eye(self.d)
        return self.mul(np.broadcast_to(q, basis.shape), basis).T

    def right_matrix(self, q):
        """Real matrix of ``z -> z q``."""
        basis = np.eye(self.d)
        return self.mul(basis, np.broadcast_to(q, basis.shape)).T

    @cached_property
    def right_units(self):
        """Right multiplication by ``1, i(, j, k)`` as ``(d, d, d)`` array."""
        return np.stack([self.right_matrix(self.unit(a)) for a in range(self.d)])

    # -- vectors and matrices over the algebra ---------------------------------

    def right_scalar_operator(self, q, n: int):
        """Real ``(d n, d n)`` matrix of ``z -> z q`` on ``n``-vectors."""
        return np.kron(np.eye(n), self.right_matrix(q))

    def matrix_to_real(self, A):
        """Real block matrix of the left action of ``A`` with shape ``(n, n, d)``."""
        A = np.asarray(A, dtype=float)
        rows, cols = A.shape[:2]
        out = np.zeros((rows * self.d, cols * self.d))
        for i in range(rows):
            for j in range(cols):
                out[i * self.d:(i + 1) * self.d, j * self.d:(j + 1) * self.d] = (
                    self.left_matrix(A[i, j])
                )
        return out

    def matrix_from_real(self, M):
        """Inverse of :meth:`matrix_to_real`; reads each block applied to ``1``."""
        M = np.asarray(M, dtype=float)
        rows, cols = M.shape[0] // self.d, M.shape[1] // self.d
        blocks = M.reshape(rows, self.d, cols, self.d)
        return np.ascontiguousarray(blocks[:, :, :, 0].transpose(0, 2, 1))

    def vector_to_real(self, z):
        return np.asarray(z, dtype=float).reshape(-1)

    def vector_from_real(self, x):
        return np.asarray(x, dtype=float).reshape(-1, self.d)

    def from_complex(self, z):
        """Embed a complex array as components (quaternions use ``a + b i``)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.d,))
        out[..., 0] = z.real
        out[..., 1] = z.imag
        return out


def random_unit_scalar(algebra: ScalarAlgebra, rng) -> np.ndarray:
    q = rng.standard_normal(algebra.d)
    return q / np.linalg.norm(q)


def random_compact_matrix(algebra: ScalarAlgebra, n: int, rng) -> np.ndarray:
    """Random element of U(n) or Sp(n) as an ``(n, n, d)`` component array.

    Obtained from the QR decomposition of a Gaussian complex matrix in the
    complex case; for quaternions from the orthonormalisation of a Gaussian
    quaternionic matrix with respect to the standard quaternionic inner
    product.
    """
    if n == 0:
        return np.zeros((0, 0, algebra.d))
    cols = []
    for _ in range(n):
        v = rng.standard_normal((n, algebra.d))
        for u in cols:
            # v <- v - u <u, v>, with <u, v> = sum conj(u_i) v_i
            coeff = algebra.mul(algebra.conj(u), v).sum(axis=0)
            v = v - algebra.mul(u, np.broadcast_to(coeff, u.shape))
        v = v / np.linalg.norm(v)
        cols.append(v)
    return np.stack(cols, axis=1)
