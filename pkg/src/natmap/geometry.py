"""Complex and quaternionic hyperbolic spaces in the projective model.

``X^p`` is the set of negative lines of the Hermitian form

    <z, w> = sum_{i <= p} conj(w_i) z_i - conj(w_{p+1}) z_{p+1}

on the right vector space ``F^{p+1}`` (``F`` complex or quaternionic).  The
metric is normalised by ``cosh d(x, y) = |<x, y>|`` on representatives with
``<x, x> = -1``, which puts the sectional curvature in ``[-4, -1]``.

All vectors are stored as real arrays of length ``d (p + 1)`` (see
:mod:`natmap.algebra`).  Interior points are kept with ``<x, x> = -1`` and
the last coordinate real positive; boundary points with unit Euclidean norm
and the last coordinate real positive.  Tangent vectors at ``x`` are
horizontal lifts ``v`` with ``<v, x> = 0``, and the Riemannian metric is
``g(u, v) = Re <u, v>``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import COMPLEX, QUATERNION, ScalarAlgebra
from .errors import NonNegativeNorm, NotNullVector, SpaceMismatch

POINT_TOL = 1e-10
NULL_TOL = 1e-10


@dataclass(frozen=True)
class Space:
    """``CH^p`` or ``HH^p`` with real dimension ``k = d p``."""

    algebra: ScalarAlgebra
    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"rank must be a positive integer, got {self.p}")

    @classmethod
    def complex(cls, p: int) -> "Space":
        return cls(ScalarAlgebra(COMPLEX), p)

    @classmethod
    def quaternionic(cls, p: int) -> "Space":
        return cls(ScalarAlgebra(QUATERNION), p)

    @classmethod
    def from_kind(cls, kind: str, p: int) -> "Space":
        return cls(ScalarAlgebra(kind), p)

    @property
    def d(self) -> int:
        return self.algebra.d

    @property
    def k(self) -> int:
        return self.algebra.d * self.p

    @property
    def n(self) -> int:
        """Number of coordinates over the algebra."""
        return self.p + 1

    @property
    def dim(self) -> int:
        """Length of the real representation of a vector."""
        return self.algebra.d * (self.p + 1)

    @property
    def signature(self) -> np.ndarray:
        return _signature(self.d, self.p)

    @property
    def right_units(self) -> np.ndarray:
        return _right_units(self.algebra.kind, self.p)

    @property
    def growth_exponent(self) -> int:
        """Volume entropy ``k + d - 2``."""
        return self.k + self.d - 2

    def origin(self) -> "Point":
        rep = np.zeros(self.dim)
        rep[-self.d] = 1.0
        return Point(self, rep)

    def __str__(self):
        return f"{'CH' if self.algebra.kind == COMPLEX else 'HH'}^{self.p}"


_cache = {}


def _signature(d, p):
    key = ("sig", d, p)
    if key not in _cache:
        sig = np.ones(d * (p + 1))
        sig[-d:] = -1.0
        sig.setflags(write=False)
        _cache[key] = sig
    return _cache[key]


def _right_units(kind, p):
    key = ("R", kind, p)
    if key not in _cache:
        alg = ScalarAlgebra(kind)
        R = np.stack([np.kron(np.eye(p + 1), r) for r in alg.right_units])
        R.setflags(write=False)
        _cache[key] = R
    return _cache[key]


# -- raw array helpers ---------------------------------------------------------


def hform(space: Space, z, w):
    """Components of ``<z, w>`` along ``1, i(, j, k)``, broadcasting over rows."""
    Rw = np.einsum("aij,...j->...ai", space.right_units, np.asarray(w, dtype=float))
    return np.einsum("...j,...aj->...a", np.asarray(z, dtype=float) * space.signature, Rw)


def real_form(space: Space, u, v):
    """``Re <u, v>``; the Riemannian metric on horizontal vectors."""
    return np.sum(np.asarray(u) * space.signature * np.asarray(v), axis=-1)


def rmul(space: Space, z, q):
    """Right scalar multiplication ``z q`` (rows of ``z`` paired with rows of ``q``)."""
    return np.einsum("...a,aij,...j->...i", np.asarray(q, dtype=float), space.right_units,
                     np.asarray(z, dtype=float))


def horizontal(space: Space, x, w):
    """Project ``w`` onto the horizontal space ``{v : <v, x> = 0}`` at ``x``."""
    Rx = np.einsum("aij,j->ai", space.right_units, x)
    coeff = real_form(space, np.asarray(w)[..., None, :], Rx)
    return w + np.einsum("...a,ai->...i", coeff, Rx)


def _phase_to_positive(space, z):
    """Unit scalar ``lam`` with the last coordinate of ``z lam`` real positive."""
    last = z[..., -space.d:]
    return space.algebra.conj(last) / np.linalg.norm(last, axis=-1, keepdims=True)


def canonical_point_rep(space: Space, raw, rescale: bool = True) -> np.ndarray:
    """Canonical representative of the negative line through ``raw``.

    With ``rescale=False`` the caller guarantees ``<raw, raw> = -1`` exactly
    (e.g. ``cosh(t) x + sinh(t) v``); only the phase is fixed.  Recomputing
    the norm of a long representative loses ``eps |raw|^2`` to cancellation.
    """
    raw = np.asarray(raw, dtype=float)
    if rescale:
        nrm = real_form(space, raw, raw)
        if not np.all(nrm < 0):
            raise NonNegativeNorm("vector has non-negative Hermitian norm")
        raw = raw / np.sqrt(-nrm)[..., None]
    return rmul(space, raw, _phase_to_positive(space, raw))


def canonical_boundary_rep(space: Space, raw, tol: float = NULL_TOL) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    scale = np.linalg.norm(raw, axis=-1, keepdims=True)
    if np.any(scale == 0):
        raise NotNullVector("zero vector")
    z = raw / scale
    if np.any(np.abs(real_form(space, z, z)) > tol):
        raise NotNullVector("vector is not null for the Hermitian form")
    # snap onto the null cone: both halves get Euclidean norm 1/sqrt(2)
    head, tail = z[..., :-space.d], z[..., -space.d:]
    head = head / np.linalg.norm(head, axis=-1, keepdims=True)
    tail = tail / np.linalg.norm(tail, axis=-1, keepdims=True)
    z = np.concatenate([head, tail], axis=-1) / np.sqrt(2.0)
    return rmul(space, z, _phase_to_positive(space, z))


def _frame(space, x):
    """g-orthonormal horizontal frame at ``x`` (columns), by Gram-Schmidt."""
    P = horizontal(space, x, np.eye(space.dim)[: space.k])
    G = P @ (space.signature * P).T
    L = np.linalg.cholesky(G)
    return np.linalg.solve(L, P).T


def unit_direction_to(space: Space, x, theta):
    """Horizontal unit vector at ``x`` pointing at boundary rep(s) ``theta``."""
    a = hform(space, theta, x)
    lam = -space.algebra.conj(a) / np.sum(a * a, axis=-1, keepdims=True)
    return rmul(space, theta, lam) - x


def busemann_gradients(space: Space, y, thetas):
    """Gradient vectors at ``y`` of ``B(., theta_j)`` (rows), as horizontal lifts."""
    return -unit_direction_to(space, y, np.atleast_2d(thetas))


def busemann_values(space: Space, y, thetas, base):
    thetas = np.atleast_2d(thetas)
    return np.log(np.linalg.norm(hform(space, thetas, y), axis=-1)) - np.log(
        np.linalg.norm(hform(space, thetas, base), axis=-1)
    )


def hessian_from_gradient(c, Js):
    """Busemann Hessian in an orthonormal frame from the frame gradient ``c``.

    ``g - dB (x) dB + sum_i (dB o J_i) (x) (dB o J_i)``.
    """
    k = c.shape[-1]
    out = np.eye(k) - np.outer(c, c)
    for J in Js:
        cj = J.T @ c
        out += np.outer(cj, cj)
    return out


# -- objects -------------------------------------------------------------------


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Point:
    """Interior point; ``rep`` has Hermitian norm -1 and positive last coordinate."""

    space: Space
    rep: np.ndarray = field(repr=False)

    def __post_init__(self):
        rep = _frozen(self.rep)
        if rep.shape != (self.space.dim,):
            raise ValueError(f"expected a vector of length {self.space.dim}")
        nrm = real_form(self.space, rep, rep)
        if abs(nrm + 1.0) > POINT_TOL * max(1.0, float(rep @ rep)):
            raise NonNegativeNorm(f"point representative has norm {nrm}, expected -1")
        object.__setattr__(self, "rep", rep)

    @cached_property
    def frame(self) -> np.ndarray:
        """Columns: g-orthonormal horizontal frame of the tangent space."""
        f = _frame(self.space, self.rep)
        f.setflags(write=False)
        return f

    @cached_property
    def frame_J(self) -> np.ndarray:
        """The structure operators ``J_1..J_{d-1}`` in :attr:`frame`."""
        F = self.frame
        Js = [F.T @ (self.space.signature[:, None] * (R @ F)) for R in self.space.right_units[1:]]
        return np.array(Js).reshape(len(Js), self.space.k, self.space.k)

    def to_frame(self, vec) -> np.ndarray:
        return (np.asarray(vec) * self.space.signature) @ self.frame

    def from_frame(self, coords) -> np.ndarray:
        return np.asarray(coords) @ self.frame.T

    def tangent(self, coords) -> "TangentVector":
        return TangentVector(self, self.from_frame(coords))

    def components(self) -> np.ndarray:
        return self.space.algebra.vector_from_real(self.rep)

    def __repr__(self):
        return f"Point({self.space}, {np.array2string(self.rep, precision=6)})"


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """Null line; ``rep`` has unit Euclidean norm and positive last coordinate."""

    space: Space
    rep: np.ndarray = field(repr=False)

    def __post_init__(self):
        rep = _frozen(self.rep)
        if rep.shape != (self.space.dim,):
            raise ValueError(f"expected a vector of length {self.space.dim}")
        if abs(np.linalg.norm(rep) - 1.0) > 1e-9 or abs(real_form(self.space, rep, rep)) > NULL_TOL:
            raise NotNullVector("boundary representative must be a unit null vector")
        object.__setattr__(self, "rep", rep)

    def components(self) -> np.ndarray:
        return self.space.algebra.vector_from_real(self.rep)

    def __repr__(self):
        return f"BoundaryPoint({self.space}, {np.array2string(self.rep, precision=6)})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Horizontal lift ``vec`` of a tangent vector at ``base``."""

    base: Point
    vec: np.ndarray = field(repr=False)

    def __post_init__(self):
        vec = _frozen(self.vec)
        space = self.base.space
        if vec.shape != (space.dim,):
            raise ValueError(f"expected a vector of length {space.dim}")
        scale = max(1.0, float(np.linalg.norm(vec))) * max(1.0, float(np.linalg.norm(self.base.rep)))
        if np.max(np.abs(hform(space, vec, self.base.rep))) > 1e-9 * scale:
            raise ValueError("tangent vector is not horizontal at its base point")
        object.__setattr__(self, "vec", vec)

    @property
    def coords(self) -> np.ndarray:
        return self.base.to_frame(self.vec)

    def norm(self) -> float:
        return float(np.sqrt(max(inner(self, self), 0.0)))

    def __add__(self, other):
        _same_base(self, other)
        return TangentVector(self.base, self.vec + other.vec)

    def __sub__(self, other):
        _same_base(self, other)
        return TangentVector(self.base, self.vec - other.vec)

    def __mul__(self, s):
        return TangentVector(self.base, float(s) * self.vec)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return TangentVector(self.base, self.vec / float(s))

    def __neg__(self):
        return TangentVector(self.base, -self.vec)


def _same_base(u, v):
    if u.base is not v.base and not np.allclose(u.base.rep, v.base.rep, atol=1e-12):
        raise SpaceMismatch("tangent vectors live at different points")


@dataclass(frozen=True)
class StructureOperators:
    """``J_1..J_{d-1}`` on the tangent space at ``base``, in its frame."""

    base: Point
    J: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter(self.J)

    def __len__(self):
        return len(self.J)


def _space_of(obj) -> Space:
    return obj.space if hasattr(obj, "space") else obj.base.space


def _check_space(*objs) -> Space:
    first = _space_of(objs[0])
    for o in objs[1:]:
        if _space_of(o) != first:
            raise SpaceMismatch(f"{_space_of(o)} vs {first}")
    return first


# -- operations ----------------------------------------------------------------


def normalize_point(space: Space, raw) -> Point:
    """Interior point represented by ``raw`` (requires ``<raw, raw> < 0``)."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (space.dim,):
        raw = space.algebra.vector_to_real(raw)
    return Point(space, canonical_point_rep(space, raw))


def normalize_boundary(space: Space, raw, tol: float = NULL_TOL) -> BoundaryPoint:
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (space.dim,):
        raw = space.algebra.vector_to_real(raw)
    return BoundaryPoint(space, canonical_boundary_rep(space, raw, tol))


def inner(u: TangentVector, v: TangentVector) -> float:
    _same_base(u, v)
    return float(real_form(u.base.space, u.vec, v.vec))


def distance(x: Point, y: Point) -> float:
    """Riemannian distance, ``cosh d = |<x, y>|``.

    Evaluated as ``2 asinh(|y' - x| / 2)`` with ``y'`` the representative of
    ``y`` whose pairing with ``x`` is real negative, which keeps full
    relative accuracy for nearby points.
    """
    space = _check_space(x, y)
    return float(_distance_raw(space, x.rep, y.rep))


def _distance_raw(space, x, y):
    a = hform(space, y, x)
    lam = -space.algebra.conj(a) / np.linalg.norm(a, axis=-1, keepdims=True)
    w = rmul(space, y, lam) - x
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(real_form(space, w, w), 0.0)) / 2.0)


def exp_map(x: Point, v: TangentVector, t: float = 1.0) -> Point:
    """Point at distance ``t |v|`` from ``x`` along the geodesic with direction ``v``."""
    _check_space(x, v)
    nv = v.norm()
    if nv == 0.0 or t == 0.0:
        return x
    s = t * nv
    rep = np.cosh(s) * x.rep + np.sinh(s) * (v.vec / nv)
    return Point(x.space, canonical_point_rep(x.space, rep, rescale=False))


def log_map(x: Point, y: Point) -> TangentVector:
    """Initial velocity at ``x`` of the geodesic reaching ``y`` at time 1."""
    space = _check_space(x, y)
    dist = _distance_raw(space, x.rep, y.rep)
    if dist == 0.0:
        return TangentVector(x, np.zeros(space.dim))
    a = hform(space, y.rep, x.rep)
    lam = -space.algebra.conj(a) / np.linalg.norm(a)
    w = horizontal(space, x.rep, rmul(space, y.rep, lam) - x.rep)
    return TangentVector(x, dist * w / np.sqrt(real_form(space, w, w)))


def direction_to_boundary(x: Point, theta: BoundaryPoint) -> TangentVector:
    """Unit initial velocity of the ray from ``x`` to ``theta``."""
    space = _check_space(x, theta)
    return TangentVector(x, unit_direction_to(space, x.rep, theta.rep))


def boundary_from_direction(v: TangentVector) -> BoundaryPoint:
    """Endpoint at infinity of the geodesic ray with initial velocity ``v``."""
    x = v.base
    return normalize_boundary(x.space, x.rep + v.vec / v.norm())


def geodesic_ray_to_boundary(x: Point, theta: BoundaryPoint, t: float) -> Point:
    """``c(t)`` for the unit speed ray with ``c(0) = x`` and ``c(inf) = theta``."""
    if t < 0:
        raise ValueError("ray parameter must be non-negative")
    return exp_map(x, direction_to_boundary(x, theta), t)


def busemann(x: Point, theta: BoundaryPoint, base: Point = None) -> float:
    """``B_base(x, theta) = log|<x, theta>| - log|<base, theta>|``."""
    space = _check_space(x, theta)
    base = space.origin() if base is None else base
    return float(busemann_values(space, x.rep, theta.rep, base.rep)[0])


def busemann_gradient(x: Point, theta: BoundaryPoint) -> TangentVector:
    """Unit gradient of ``B(., theta)`` at ``x``: minus the direction to ``theta``."""
    space = _check_space(x, theta)
    return TangentVector(x, busemann_gradients(space, x.rep, theta.rep)[0])


def busemann_hessian(x: Point, theta: BoundaryPoint) -> np.ndarray:
    """Busemann Hessian at ``x`` as a ``k x k`` matrix in ``x.frame``."""
    c = busemann_gradient(x, theta).coords
    return hessian_from_gradient(c, x.frame_J)


def structure_operators(x: Point) -> StructureOperators:
    return StructureOperators(x, x.frame_J)


def log_polar_volume_density(space: Space, t):
    """``log`` of ``sinh(t)^(k-d) (sinh(2t)/2)^(d-1)``, overflow-free."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("polar volume density needs t > 0")

    def log_sinh(s):
        return s + np.log1p(-np.exp(-2.0 * s)) - np.log(2.0)

    return (space.k - space.d) * log_sinh(t) + (space.d - 1) * (log_sinh(2.0 * t) - np.log(2.0))


def polar_volume_density(space: Space, t):
    """Volume density in geodesic polar coordinates about any point."""
    return np.exp(log_polar_volume_density(space, t))


def unit_sphere_area(k: int) -> float:
    from math import gamma, pi

    return 2.0 * pi ** (k / 2) / gamma(k / 2)


# -- random samples ------------------------------------------------------------


def random_boundary_point(space: Space, rng) -> BoundaryPoint:
    u = rng.standard_normal(space.k)
    raw = np.concatenate([u / np.linalg.norm(u), space.algebra.one()])
    return normalize_boundary(space, raw)


def random_unit_tangent(x: Point, rng) -> TangentVector:
    c = rng.standard_normal(x.space.k)
    return x.tangent(c / np.linalg.norm(c))


def random_point(space: Space, rng, max_radius: float = 2.0, center: Point = None) -> Point:
    center = space.origin() if center is None else center
    r = max_radius * rng.uniform()
    return exp_map(center, random_unit_tangent(center, rng), r)


def real_axis_point(space: Space, t: float) -> Point:
    """``(sinh t, 0, ..., 0, cosh t)``; the real geodesic through the origin."""
    rep = np.zeros(space.dim)
    rep[0] = np.sinh(t)
    rep[-space.d] = np.cosh(t)
    return Point(space, rep)


def volume_growth_rate(space: Space, t0: float = 10.0, t1: float = 20.0, n: int = 101) -> float:
    """Least-squares slope of ``log polar_volume_density`` on ``[t0, t1]``.

    Tends to the volume entropy ``k + d - 2`` with error ``O(exp(-2 t0))``.
    """
    t = np.linspace(t0, t1, n)
    slope, _ = np.polyfit(t, log_polar_volume_density(space, t), 1)
    return float(slope)
