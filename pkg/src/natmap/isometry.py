"""Isometries of ``X^p``: U(p,1) / Sp(p,1) matrices acting on the left.

Matrices are kept in the real block representation of
:mod:`natmap.algebra`; an element of U(p,1) or Sp(p,1) is a real matrix
commuting with every right scalar multiplication and preserving the real
part of the Hermitian form.  Projective equality (up to a central unit
scalar) is handled by :func:`projective_distance`.

Conventions for translation length follow the curvature ``[-4, -1]`` metric of
:mod:`natmap.geometry`: the normal form with parameter ``ell`` (entries
``cosh(ell/2)``, ``sinh(ell/2)``) translates its axis by ``ell / 2``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .algebra import COMPLEX, random_compact_matrix, random_unit_scalar
from .errors import GeneratorMismatch, NotAnIsometry, NotUnitary, SpaceMismatch
from .geometry import (
    BoundaryPoint,
    Point,
    Space,
    TangentVector,
    canonical_boundary_rep,
    canonical_point_rep,
    distance,
    hform,
    log_map,
    random_point,
    rmul,
    _phase_to_positive,
)

FORM_TOL = 1e-10
# elliptic / parabolic / loxodromic separation on log spectral radius
LOX_TOL = 1e-6
KERNEL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Isometry:
    """Form-preserving matrix ``mat`` (real block representation) on ``space``."""

    space: Space
    mat: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        M = np.array(self.mat, dtype=float)
        if M.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"expected a {self.space.dim}x{self.space.dim} real matrix")
        M.setflags(write=False)
        object.__setattr__(self, "mat", M)
        if self.check:
            err = form_defect(self.space, M)
            if err > FORM_TOL * max(1.0, np.abs(M).max() ** 2):
                raise NotAnIsometry(f"matrix does not preserve the Hermitian form (defect {err:.2e})")

    @classmethod
    def identity(cls, space: Space) -> "Isometry":
        return cls(space, np.eye(space.dim))

    @classmethod
    def from_components(cls, space: Space, A) -> "Isometry":
        """From an ``(n, n, d)`` array of scalar components (or a complex matrix)."""
        A = np.asarray(A)
        if np.iscomplexobj(A) or A.ndim == 2:
            A = space.algebra.from_complex(A)
        return cls(space, space.algebra.matrix_to_real(A))

    def components(self) -> np.ndarray:
        return self.space.algebra.matrix_from_real(self.mat)

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            _same_space(self.space, other.space)
            return Isometry(self.space, self.mat @ other.mat, check=False)
        return apply(self, other)

    def inverse(self) -> "Isometry":
        sig = self.space.signature
        return Isometry(self.space, sig[:, None] * self.mat.T * sig[None, :], check=False)

    def __repr__(self):
        return f"Isometry({self.space})"


def _same_space(a: Space, b: Space):
    if a != b:
        raise SpaceMismatch(f"{a} vs {b}")


def form_defect(space: Space, M) -> float:
    """``max |M^T Q M - Q|`` plus the failure to commute with right scalars."""
    sig = space.signature
    defect = np.abs(M.T @ (sig[:, None] * M) - np.diag(sig)).max()
    for R in space.right_units[1:]:
        defect = max(defect, np.abs(M @ R - R @ M).max())
    return float(defect)


class IsometryKind(str, Enum):
    ELLIPTIC = "Elliptic"
    PARABOLIC = "Parabolic"
    LOXODROMIC = "Loxodromic"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class IsometryClass:
    kind: IsometryKind
    translation_length: float

    def to_dict(self):
        return {"kind": self.kind.value, "translation_length": self.translation_length}


# -- actions -------------------------------------------------------------------


def apply(g: Isometry, obj):
    """Image of a point, boundary point or tangent vector under ``g``."""
    if isinstance(obj, Point):
        _same_space(g.space, obj.space)
        # rescaling absorbs the norm defect of a large matrix product
        return Point(g.space, canonical_point_rep(g.space, g.mat @ obj.rep))
    if isinstance(obj, BoundaryPoint):
        _same_space(g.space, obj.space)
        return BoundaryPoint(g.space, canonical_boundary_rep(g.space, g.mat @ obj.rep))
    if isinstance(obj, TangentVector):
        _same_space(g.space, obj.base.space)
        raw = g.mat @ obj.base.rep
        lam = _phase_to_positive(g.space, raw)
        base = Point(g.space, rmul(g.space, raw, lam))
        return TangentVector(base, rmul(g.space, g.mat @ obj.vec, lam))
    raise TypeError(f"cannot apply an isometry to {type(obj).__name__}")


def boundary_image_reps(g: Isometry, reps) -> np.ndarray:
    return canonical_boundary_rep(g.space, np.atleast_2d(reps) @ g.mat.T)


# -- complexification (for spectral work) -------------------------------------


def _complex_basis(space: Space):
    """Orthonormal real basis ``[U, R_1 U]`` making ``R_1`` multiplication by i."""
    d = space.d
    idx = [c * d + a for c in range(space.n) for a in ((0,) if d == 2 else (0, 2))]
    U = np.eye(space.dim)[:, idx]
    return U, space.right_units[1] @ U


def complexify(space: Space, M) -> np.ndarray:
    """Complex matrix of a real matrix commuting with right multiplication by i."""
    U, V = _complex_basis(space)
    return U.T @ M @ U + 1j * (V.T @ M @ U)


def _decomplexify_vectors(space: Space, C):
    U, V = _complex_basis(space)
    return (U @ C.real + V @ C.imag).T


def matrix_trace(g: Isometry):
    """Trace of the matrix representative.

    Complex trace for U(p,1); the reduced (real part) trace for Sp(p,1),
    which is the conjugation-invariant one.
    """
    A = g.components()
    tr = A[np.arange(g.space.n), np.arange(g.space.n)].sum(axis=0)
    if g.space.algebra.kind == COMPLEX:
        return complex(tr[0], tr[1])
    return float(tr[0])


def classify(g: Isometry) -> IsometryClass:
    """Elliptic / parabolic / loxodromic type from the spectrum of ``g``.

    Elliptic iff some eigenspace for a unimodular eigenvalue carries a negative
    vector (an interior fixed point).  Otherwise loxodromic iff the spectral
    radius exceeds 1 beyond ``LOX_TOL`` in log scale, parabolic iff some
    unimodular eigenvalue is defective.  Anything else is reported as
    indeterminate.
    """
    space = g.space
    C = complexify(space, g.mat)
    evals = np.linalg.eigvals(C)
    logmod = np.log(np.abs(evals))
    scale = max(1.0, np.linalg.norm(C, 2))

    near_circle = np.abs(logmod) < 1e-3
    clusters = _cluster(np.flatnonzero(near_circle), evals, 1e-4)
    defective = False
    # a Jordan block of size m spreads its eigenvalues by about eps^(1/m);
    # such spread is not translation
    spread = np.zeros(len(evals), dtype=bool)
    for members in clusters:
        mu = np.mean(evals[members])
        _, s, vh = np.linalg.svd(C - mu * np.eye(C.shape[0]))
        null = vh[s < KERNEL_TOL * scale].conj().T
        if null.shape[1] < len(members):
            defective = True
            spread[members] = True
        if null.shape[1] == 0:
            continue
        # real span of the eigenspace and the form restricted to it
        vecs = _decomplexify_vectors(space, np.hstack([null, 1j * null]))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        gram = (vecs * space.signature) @ vecs.T
        if np.linalg.eigvalsh(gram).min() < -1e-6:
            return IsometryClass(IsometryKind.ELLIPTIC, 0.0)
    ell = float(logmod[~spread].max()) if np.any(~spread) else 0.0
    if ell > LOX_TOL:
        return IsometryClass(IsometryKind.LOXODROMIC, ell)
    if defective:
        return IsometryClass(IsometryKind.PARABOLIC, 0.0)
    return IsometryClass(IsometryKind.INDETERMINATE, max(ell, 0.0))


def _cluster(indices, values, tol):
    """Group ``indices`` whose ``values`` lie within ``tol`` of a group's first member."""
    groups = []
    for i in indices:
        for grp in groups:
            if abs(values[grp[0]] - values[i]) < tol:
                grp.append(i)
                break
        else:
            groups.append([i])
    return groups


def translation_length(g: Isometry) -> float:
    """``inf_y d(g y, y)``: log of the spectral radius for loxodromics, else 0."""
    cls = classify(g)
    if cls.kind in (IsometryKind.ELLIPTIC, IsometryKind.PARABOLIC):
        return 0.0
    return cls.translation_length


def displacement(g: Isometry, y: Point) -> float:
    return distance(apply(g, y), y)


# -- constructions -------------------------------------------------------------


def _check_unitary(algebra, M, tol=1e-10):
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 0:
        return
    R = algebra.matrix_to_real(M)
    if np.abs(R.T @ R - np.eye(R.shape[0])).max() > tol:
        raise NotUnitary("compact block is not unitary")


def loxodromic_normal_form(space: Space, ell_param: float, alpha=None, M=None) -> Isometry:
    """Block matrix ``alpha [[cosh, sinh], [sinh, cosh]](ell/2)`` on the first and
    last coordinates, ``M`` in U(p-1) / Sp(p-1) on the middle ones.

    Its axis is the real geodesic through the origin; it translates by
    ``ell_param / 2`` in this package's metric.
    """
    alg = space.algebra
    alpha = alg.one() if alpha is None else np.asarray(alpha, dtype=float)
    if np.iscomplexobj(alpha) or np.ndim(alpha) == 0:
        alpha = alg.from_complex(complex(alpha))
    if abs(np.linalg.norm(alpha) - 1.0) > 1e-12:
        raise NotUnitary("alpha must be a unit scalar")
    n = space.n
    if M is None:
        M = np.zeros((n - 2, n - 2, alg.d))
        M[np.arange(n - 2), np.arange(n - 2), 0] = 1.0
    M = np.asarray(M)
    if np.iscomplexobj(M) or M.ndim == 2:
        M = alg.from_complex(M)
    if M.shape != (n - 2, n - 2, alg.d):
        raise ValueError(f"compact block must be {n - 2}x{n - 2}")
    _check_unitary(alg, M)
    A = np.zeros((n, n, alg.d))
    c, s = np.cosh(ell_param / 2.0), np.sinh(ell_param / 2.0)
    A[0, 0] = A[-1, -1] = c * alpha
    A[0, -1] = A[-1, 0] = s * alpha
    A[1:-1, 1:-1] = M
    return Isometry.from_components(space, A)


def stabilizer_element(space: Space, U, phase=None) -> Isometry:
    """``diag(U, phase)`` fixing the origin (``U`` in U(p) / Sp(p))."""
    alg = space.algebra
    U = np.asarray(U)
    if np.iscomplexobj(U) or U.ndim == 2:
        U = alg.from_complex(U)
    _check_unitary(alg, U)
    phase = alg.one() if phase is None else np.asarray(phase, dtype=float)
    A = np.zeros((space.n, space.n, alg.d))
    A[:-1, :-1] = U
    A[-1, -1] = phase
    return Isometry.from_components(space, A)


def transvection(x: Point, y: Point) -> Isometry:
    """Translation along the geodesic through ``x`` and ``y`` carrying ``x`` to ``y``.

    Built from boosts based at the origin, conjugated into place; a boost
    based at a far point loses about ``|x|^4`` in rounding.
    """
    space = x.space
    _same_space(space, y.space)
    O = space.origin()
    if distance(x, O) == 0.0:
        return _boost(O, y)
    to_x = _boost(O, x)
    if distance(y, O) == 0.0:
        return to_x.inverse()
    back = to_x.inverse()
    return to_x @ _boost(O, apply(back, y)) @ back


def _boost(x: Point, y: Point) -> Isometry:
    """Transvection from ``x`` to ``y``: on the span of ``x`` and the unit
    direction ``v`` it acts by ``x -> cosh(t) x + sinh(t) v``,
    ``v -> sinh(t) x + cosh(t) v``, extended linearly over the scalars, and
    it is the identity on the orthogonal complement."""
    space = x.space
    lv = log_map(x, y)
    t = lv.norm()
    if t == 0.0:
        return Isometry.identity(space)
    v = lv.vec / t
    c, s = np.cosh(t), np.sinh(t)
    E = np.eye(space.dim)
    # coefficients of z = x a + v b + w: a = -<z, x>, b = <z, v>
    a = -hform(space, E, x.rep)
    b = hform(space, E, v)
    xa, xb = rmul(space, np.broadcast_to(x.rep, E.shape), a), rmul(space, np.broadcast_to(x.rep, E.shape), b)
    va, vb = rmul(space, np.broadcast_to(v, E.shape), a), rmul(space, np.broadcast_to(v, E.shape), b)
    cols = E + (c - 1.0) * xa + s * xb + s * va + (c - 1.0) * vb
    return Isometry(space, cols.T)


def random_isometry(space: Space, rng, max_shift: float = 1.5) -> Isometry:
    """Transvection from the origin to a random point composed with a random stabiliser."""
    U = random_compact_matrix(space.algebra, space.p, rng)
    k = stabilizer_element(space, U, random_unit_scalar(space.algebra, rng))
    y = random_point(space, rng, max_shift)
    return transvection(space.origin(), y) @ k


def embed_isometry(g: Isometry, target: Space) -> Isometry:
    """Extend ``g`` on ``X^p`` to ``X^m`` acting trivially on the extra coordinates.

    The source occupies coordinates ``0..p-1`` and the last one, so ``X^p``
    sits in ``X^m`` as a totally geodesic copy through the common origin.
    """
    src = g.space
    if src.algebra != target.algebra or target.p < src.p:
        raise SpaceMismatch(f"cannot embed {src} into {target}")
    A = g.components()
    N = target.n
    B = np.zeros((N, N, src.d))
    B[np.arange(N), np.arange(N), 0] = 1.0
    idx = list(range(src.p)) + [N - 1]
    B[np.ix_(idx, idx)] = A
    return Isometry.from_components(target, B)


def embed_coordinates(source: Space, target: Space, reps) -> np.ndarray:
    """Real representatives in ``target`` of vectors of ``source`` (same inclusion)."""
    reps = np.atleast_2d(reps)
    d = source.d
    out = np.zeros((reps.shape[0], target.dim))
    out[:, : source.p * d] = reps[:, : source.p * d]
    out[:, -d:] = reps[:, -d:]
    return out


# -- representations -----------------------------------------------------------


@dataclass(frozen=True)
class Representation:
    """Named generators acting on ``target``; ``source`` is the lattice's space."""

    generators: dict
    source: Space
    target: Space
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.target.p < self.source.p:
            raise SpaceMismatch("target rank must be at least the source rank")
        for name, g in self.generators.items():
            if g.space != self.target:
                raise SpaceMismatch(f"generator {name!r} acts on {g.space}, not {self.target}")
            if not self.check:
                continue
            err = form_defect(self.target, g.mat)
            if err > FORM_TOL * max(1.0, np.abs(g.mat).max() ** 2):
                raise NotAnIsometry(f"generator {name!r} is not an isometry")

    def names(self):
        return sorted(self.generators)


def conjugate_representation(rho: Representation, g: Isometry) -> Representation:
    """``gamma -> g rho(gamma) g^{-1}``.

    The result is not re-validated: conjugation preserves the form exactly,
    while the rounding of the product grows like ``|g|^4``.
    """
    _same_space(rho.target, g.space)
    gi = g.inverse()
    return Representation({n: g @ h @ gi for n, h in rho.generators.items()}, rho.source, rho.target, check=False)


def projective_distance(a: Isometry, b: Isometry) -> float:
    """Frobenius distance between the classes of ``a`` and ``b`` modulo central unit scalars.

    The centre is U(1) for U(p,1) and {+1, -1} for Sp(p,1); the minimum over
    the centre is taken in closed form.
    """
    _same_space(a.space, b.space)
    A, B = a.components(), b.components()
    if a.space.algebra.kind == COMPLEX:
        Ac = A[..., 0] + 1j * A[..., 1]
        Bc = B[..., 0] + 1j * B[..., 1]
        # the optimal unit scalar is the phase of <B, A>; subtract directly to avoid cancellation
        ip = np.vdot(Bc, Ac)
        z = ip / abs(ip) if abs(ip) > 0 else 1.0
        return float(np.linalg.norm(Ac - z * Bc))
    return float(min(np.linalg.norm(A - B), np.linalg.norm(A + B)))


def representation_distance(rho1: Representation, rho2: Representation) -> float:
    """Max over generators of :func:`projective_distance`."""
    if set(rho1.generators) != set(rho2.generators):
        raise GeneratorMismatch("representations have different generator names")
    _same_space(rho1.target, rho2.target)
    if not rho1.generators:
        return 0.0
    return max(projective_distance(rho1.generators[n], rho2.generators[n]) for n in rho1.generators)


# -- trace bound ---------------------------------------------------------------


@dataclass(frozen=True)
class TraceBoundReport:
    trace_abs: float
    length_bound: float
    c0: float
    holds: bool
    classification: IsometryClass

    def to_dict(self):
        return {
            "trace_abs": self.trace_abs,
            "length_bound": self.length_bound,
            "c0": self.c0,
            "holds": self.holds,
            "classification": self.classification.to_dict(),
        }


def trace_bound_check(g: Isometry, c0: float = None, slack: float = 1e-9) -> TraceBoundReport:
    """Check ``|Tr g| <= 2 cosh(ell_param / 2) + C0``.

    ``ell_param = 2 * translation_length(g)`` is the normal-form parameter;
    non-loxodromic elements use ``ell_param = 0``.  ``C0`` defaults to
    ``p - 1``, the largest possible ``|Tr M|`` for the compact block.
    """
    cls = classify(g)
    c0 = float(g.space.p - 1) if c0 is None else float(c0)
    ell = cls.translation_length if cls.kind == IsometryKind.LOXODROMIC else 0.0
    bound = 2.0 * np.cosh(ell)
    tr = abs(matrix_trace(g))
    return TraceBoundReport(tr, bound, c0, bool(tr <= bound + c0 + slack * max(1.0, bound)), cls)


def minimize_displacement(g: Isometry, starts=None, rng=None) -> float:
    """Direct minimisation of ``y -> d(g y, y)`` (oracle for translation length)."""
    from scipy.optimize import minimize

    space = g.space
    O = space.origin()
    rng = np.random.default_rng(0) if rng is None else rng
    starts = [np.zeros(space.k)] + [rng.standard_normal(space.k) for _ in range(3)] if starts is None else starts

    from .geometry import exp_map

    def f(c):
        y = exp_map(O, O.tangent(c))
        return displacement(g, y)

    best = np.inf
    for c0 in starts:
        res = minimize(f, c0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        best = min(best, res.fun)
    return float(best)
