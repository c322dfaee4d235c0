"""The natural map ``F(x) = bar(D_* mu_x)`` for sampled boundary data.

Everything here is evaluated on probability-normalised weights
``w_j(x) ~ w_j exp(-delta B(x, theta_j))``; the barycentre is unchanged by the
normalisation.  Frames are the deterministic ones of :class:`Point`.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .barycenter import SolverConfig, check_excluded, solve_interior
from .errors import DegenerateForms, ElementaryData, SingularSystem, SpaceMismatch
from .geometry import (
    Point,
    Space,
    busemann_gradients,
    distance,
    exp_map,
    log_map,
    polar_volume_density,
    real_form,
    unit_sphere_area,
)
from .measures import (
    BoundaryMapSample,
    BoundaryMeasure,
    ConformalDensity,
    cross_polytope_measure,
    identity_boundary_map,
    normalized_density_weights,
)

# K is declared degenerate below this eigenvalue
FORMS_EIG_TOL = 1e-10
CHAIN_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class NaturalMapContext:
    """Conformal density on the source boundary plus a sampled boundary map.

    ``delta`` is the exponent of ``density``; build the density with
    ``delta = k + d - 2`` (the default of :func:`make_context`) for the
    lattice value.
    """

    density: ConformalDensity
    D: BoundaryMapSample
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(max_iters=100, grad_tol=1e-12))

    def __post_init__(self):
        if self.D.source != self.density.space:
            raise SpaceMismatch("boundary map sample does not start on the density's space")
        src, tgt = self.D.source, self.D.target
        if src.algebra != tgt.algebra or tgt.p < src.p:
            raise SpaceMismatch(f"cannot map {src} into {tgt}")
        images = self.D.lookup(self.density.seed.thetas)
        object.__setattr__(self, "_images", images)

    @property
    def source(self) -> Space:
        return self.D.source

    @property
    def target(self) -> Space:
        return self.D.target

    @property
    def delta(self) -> float:
        return self.density.delta

    @property
    def images(self) -> np.ndarray:
        """Images ``D(theta_j)`` aligned with the seed atoms."""
        return self._images


def make_context(seed: BoundaryMeasure, D: BoundaryMapSample, delta: float = None,
                 solver: SolverConfig = None) -> NaturalMapContext:
    delta = seed.space.growth_exponent if delta is None else delta
    density = ConformalDensity(seed, float(delta))
    if solver is None:
        return NaturalMapContext(density, D)
    return NaturalMapContext(density, D, solver)


@dataclass(frozen=True)
class FormsAt:
    """Quadratic forms at ``x`` and ``F(x)`` (frame coordinates).

    ``H`` and ``K`` live on the tangent space of the target at ``F(x)``,
    ``Hprime`` on the tangent space of the source at ``x``.  ``C`` and ``B``
    hold the per-atom unit gradients (rows) at ``F(x)`` and ``x``.
    """

    x: Point
    Fx: Point
    weights: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    Hprime: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)


def _pushed_weights(ctx, x):
    w = normalized_density_weights(ctx.density, x)
    nu = BoundaryMeasure.merged(ctx.target, ctx.images, w)
    check_excluded(nu)
    if nu.weights.max() >= 0.5:
        raise ElementaryData(
            f"pushed-forward measure has an atom of mass {nu.weights.max():.3f} >= 1/2"
        )
    return w, nu


def natural_map_point(ctx: NaturalMapContext, x: Point, start: Point = None) -> Point:
    """``F(x)``: barycentre of the pushed-forward normalised density at ``x``."""
    if x.space != ctx.source:
        raise SpaceMismatch("point is not in the source space")
    _, nu = _pushed_weights(ctx, x)
    rep, *_ = solve_interior(ctx.target, nu.thetas, nu.weights, ctx.solver, None if start is None else start.rep)
    return Point(ctx.target, rep)


def stationarity_residuals(ctx: NaturalMapContext, x: Point, Fx: Point):
    """Norms of ``sum_j w_j(x) dB_{(F(x), D theta_j)}``, summed over the pushed
    measure and over the seed atoms (the two must agree)."""
    w, nu = _pushed_weights(ctx, x)
    pushed = nu.weights @ busemann_gradients(ctx.target, Fx.rep, nu.thetas)
    per_atom = w @ busemann_gradients(ctx.target, Fx.rep, ctx.images)
    return _metric_norm(ctx.target, pushed), _metric_norm(ctx.target, per_atom)


def _metric_norm(space, v):
    return float(np.sqrt(max(real_form(space, v, v), 0.0)))


def forms_at(ctx: NaturalMapContext, x: Point, Fx: Point = None) -> FormsAt:
    """Assemble ``H``, ``Hprime`` and ``K = I - H - sum J_i H J_i`` at ``x``."""
    Fx = natural_map_point(ctx, x) if Fx is None else Fx
    w = normalized_density_weights(ctx.density, x)
    C = Fx.to_frame(busemann_gradients(ctx.target, Fx.rep, ctx.images))
    B = x.to_frame(busemann_gradients(ctx.source, x.rep, ctx.density.seed.thetas))
    H = (C * w[:, None]).T @ C
    Hp = (B * w[:, None]).T @ B
    K = np.eye(ctx.target.k) - H
    for J in Fx.frame_J:
        K -= J @ H @ J
    K = (K + K.T) / 2
    if np.linalg.eigvalsh(K)[0] < FORMS_EIG_TOL:
        raise DegenerateForms("integrated Busemann Hessian is not positive definite")
    return FormsAt(x, Fx, w, C, B, (H + H.T) / 2, (Hp + Hp.T) / 2, K)


def differential_matrix(ctx: NaturalMapContext, forms: FormsAt) -> np.ndarray:
    """``D_x F`` as a ``k_target x k_source`` matrix between the frames.

    Solves ``K A = delta sum_j w_j c_j b_j^T``, the derivative of the
    stationarity equation along ``x``.
    """
    rhs = ctx.delta * (forms.C * forms.weights[:, None]).T @ forms.B
    try:
        L = np.linalg.cholesky(forms.K)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("integrated Busemann Hessian is singular") from exc
    return np.linalg.solve(L.T, np.linalg.solve(L, rhs))


@dataclass(frozen=True)
class Differential:
    """Linear map between tangent spaces, stored in the two frames."""

    x: Point
    Fx: Point
    matrix: np.ndarray = field(repr=False)

    def __call__(self, u):
        from .geometry import TangentVector

        if isinstance(u, TangentVector):
            return self.Fx.tangent(self.matrix @ u.coords)
        return self.matrix @ np.asarray(u)

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)


def differential(ctx: NaturalMapContext, x: Point, forms: FormsAt = None) -> Differential:
    forms = forms_at(ctx, x) if forms is None else forms
    return Differential(x, forms.Fx, differential_matrix(ctx, forms))


def jacobian_from_matrix(A) -> float:
    """``sqrt(det(A^T A))``: volume distortion of a map from a ``k``-space."""
    s = np.linalg.svd(A, compute_uv=False)
    return float(np.prod(s))


def jacobian_k(ctx: NaturalMapContext, x: Point) -> float:
    return jacobian_from_matrix(differential(ctx, x).matrix)


def finite_difference_differential(ctx: NaturalMapContext, x: Point, h: float = 1e-3) -> np.ndarray:
    """Central differences of ``F`` along geodesics through ``x``, in the frames."""
    Fx = natural_map_point(ctx, x)
    k = ctx.source.k
    cols = []
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        fp = natural_map_point(ctx, exp_map(x, x.tangent(e)), start=Fx)
        fm = natural_map_point(ctx, exp_map(x, x.tangent(-e)), start=Fx)
        cols.append((log_map(Fx, fp).coords - log_map(Fx, fm).coords) / (2 * h))
    return np.array(cols).T


# -- determinant chain ---------------------------------------------------------


def is_j_invariant(Q: np.ndarray, Js, tol: float = 1e-8) -> bool:
    """Whether the column span of orthonormal ``Q`` is preserved by every ``J``."""
    for J in Js:
        JQ = J @ Q
        if np.linalg.norm(JQ - Q @ (Q.T @ JQ)) > tol:
            return False
    return True


@dataclass(frozen=True)
class ChainReport:
    """Terms of the determinant chain bounding the Jacobian at one point.

    ``lhs = det(K^V) Jac``, ``mid1 = delta^k det(H^V)^(1/2) det(H')^(1/2)``,
    ``mid2 = delta^k det(H^V)^(1/2) (tr H'/k)^(k/2)``,
    ``rhs = k^(-k/2) delta^k det(H^V)^(1/2)`` and ``jac_bound = rhs / det(K^V)``,
    with ``V`` the image of the differential.
    """

    jac: float
    lhs: float
    mid1: float
    mid2: float
    rhs: float
    jac_bound: float
    rank_deficient: bool
    v_j_invariant: bool
    holds: bool

    def to_dict(self):
        return {
            "jac": self.jac,
            "lhs": self.lhs,
            "mid1": self.mid1,
            "mid2": self.mid2,
            "rhs": self.rhs,
            "jac_bound": self.jac_bound,
            "rank_deficient": self.rank_deficient,
            "v_j_invariant": self.v_j_invariant,
            "holds": self.holds,
        }


def chain_from_forms(ctx: NaturalMapContext, forms: FormsAt, A: np.ndarray = None,
                     slack: float = CHAIN_SLACK) -> ChainReport:
    A = differential_matrix(ctx, forms) if A is None else A
    k = ctx.source.k
    delta = ctx.delta
    jac = jacobian_from_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    rank_deficient = bool(s[-1] <= 1e-12 * max(1.0, s[0]))
    Q, _ = np.linalg.qr(A)
    HV = Q.T @ forms.H @ Q
    KV = Q.T @ forms.K @ Q
    det_HV = max(np.linalg.det(HV), 0.0)
    det_KV = np.linalg.det(KV)
    det_Hp = max(np.linalg.det(forms.Hprime), 0.0)
    tr_Hp = float(np.trace(forms.Hprime))
    lhs = det_KV * jac
    mid1 = delta**k * np.sqrt(det_HV * det_Hp)
    mid2 = delta**k * np.sqrt(det_HV) * (tr_Hp / k) ** (k / 2)
    rhs = k ** (-k / 2) * delta**k * np.sqrt(det_HV)
    bound = rhs / det_KV if not rank_deficient and det_KV > 0 else float("inf")
    tol = slack * max(1.0, rhs)
    holds = bool(lhs <= mid1 + tol and mid1 <= mid2 + tol and abs(mid2 - rhs) <= tol and jac <= bound + slack)
    return ChainReport(jac, float(lhs), float(mid1), float(mid2), float(rhs), float(bound), rank_deficient,
                       is_j_invariant(Q, forms.Fx.frame_J), holds)


def inequality_chain_report(ctx: NaturalMapContext, x: Point) -> ChainReport:
    return chain_from_forms(ctx, forms_at(ctx, x))


def cauchy_gap(ctx: NaturalMapContext, forms: FormsAt, A, u, v) -> float:
    """``delta h(v,v)^(1/2) h'(u,u)^(1/2) - |k(v, A u)|`` (non-negative)."""
    lhs = abs(v @ forms.K @ (A @ u))
    return float(ctx.delta * np.sqrt(v @ forms.H @ v) * np.sqrt(u @ forms.Hprime @ u) - lhs)


# -- probes --------------------------------------------------------------------


@dataclass(frozen=True)
class PointReport:
    x: Point
    Fx: Point
    jac: float
    singular_values: np.ndarray
    chain: ChainReport
    residual: float
    min_k_eig: float

    def to_dict(self):
        return {
            "x": self.x.rep.tolist(),
            "F_x": self.Fx.rep.tolist(),
            "jac": self.jac,
            "singular_values": self.singular_values.tolist(),
            "chain": self.chain.to_dict(),
            "residual": self.residual,
            "min_k_eig": self.min_k_eig,
        }


def evaluate_point(ctx: NaturalMapContext, x: Point) -> PointReport:
    """Everything the natural-map experiments record at one point."""
    forms = forms_at(ctx, x)
    A = differential_matrix(ctx, forms)
    chain = chain_from_forms(ctx, forms, A)
    res = max(stationarity_residuals(ctx, x, forms.Fx))
    return PointReport(x, forms.Fx, chain.jac, np.linalg.svd(A, compute_uv=False), chain, res,
                       float(np.linalg.eigvalsh(forms.K)[0]))


def operator_norm_probe(ctx: NaturalMapContext, ball, pairs=(), segment_samples: int = 8):
    """Largest operator norm of ``D_x F`` over ``ball``, and the displacement check.

    For each pair ``(x, y)`` the segment ``[x, y]`` is sampled too (its norms
    enter ``max_norm``), and ``d(F x, F y) <= max_norm d(x, y)`` is reported.
    """
    per_point = [float(differential(ctx, x).singular_values()[0]) for x in ball]
    checks = []
    for x, y in pairs:
        v = log_map(x, y)
        seg = [exp_map(x, v, t) for t in np.linspace(0.0, 1.0, segment_samples)]
        per_point.extend(float(differential(ctx, z).singular_values()[0]) for z in seg)
        checks.append((distance(natural_map_point(ctx, x), natural_map_point(ctx, y)), distance(x, y)))
    max_norm = max(per_point)
    pair_rows = [{"image_distance": a, "distance": b, "holds": bool(a <= max_norm * b * (1 + 1e-9) + 1e-12)}
                 for a, b in checks]
    return {"max_norm": max_norm, "per_point": per_point, "pairs": pair_rows}


def map_volume(samples) -> float:
    """``sum weight * jac`` over ``(weight, jac)`` samples."""
    samples = np.asarray(samples, dtype=float).reshape(-1, 2)
    if np.any(samples[:, 0] < 0):
        raise ValueError("quadrature weights must be non-negative")
    return float(samples[:, 0] @ samples[:, 1])


def ball_quadrature(space: Space, radius: float, n_radial: int, directions, center: Point = None):
    """Points and weights integrating radial functions over a geodesic ball.

    Gauss-Legendre in the radius against the polar volume density, times an
    equal-weight set of unit directions; exact up to the radial rule for
    radial integrands, Monte Carlo in the angle otherwise.
    """
    center = space.origin() if center is None else center
    directions = np.atleast_2d(directions)
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    nodes, wts = roots_legendre(n_radial)
    t = radius * (nodes + 1) / 2
    wr = wts * radius / 2 * polar_volume_density(space, t) * unit_sphere_area(space.k) / len(directions)
    points, weights = [], []
    for ti, wi in zip(t, wr):
        for u in directions:
            points.append(exp_map(center, center.tangent(u), ti))
            weights.append(wi)
    return points, np.array(weights)


def ball_volume(space: Space, radius: float) -> float:
    """Volume of a geodesic ball, by adaptive quadrature of the polar density."""
    from scipy.integrate import quad

    val, _ = quad(lambda s: polar_volume_density(space, s), 0.0, radius, epsabs=0, epsrel=1e-12)
    return float(unit_sphere_area(space.k) * val)


# -- model configurations ------------------------------------------------------


def symmetric_model(source: Space, target: Space = None, center: Point = None) -> NaturalMapContext:
    """Uniform measure on the ``2k`` rays ``+-e_i`` from ``center`` mapped by the
    standard inclusion; the natural map fixes ``center`` with isometric differential."""
    center = source.origin() if center is None else center
    seed = cross_polytope_measure(center)
    density = ConformalDensity(seed, float(source.growth_exponent), center)
    return NaturalMapContext(density, identity_boundary_map(seed, target))


def embedded_point(x: Point, target: Space) -> Point:
    from .isometry import embed_coordinates

    return Point(target, embed_coordinates(x.space, target, x.rep)[0])
