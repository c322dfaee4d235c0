"""Barycentre of a finite boundary measure.

The barycentre minimises ``phi(y) = sum_j w_j B(y, theta_j)``.  It is found by
damped Newton steps along geodesics, using the closed-form Busemann Hessian
and Armijo backtracking on ``phi``; steepest descent is the fallback when the
Hessian is not safely positive definite.  Once the gradient is below
``newton_switch`` full Newton steps are accepted on gradient decrease, since
``phi`` can no longer resolve the improvement.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ExcludedMeasure, NonConvergence, SpaceMismatch
from .geometry import (
    BoundaryPoint,
    Point,
    Space,
    busemann_gradients,
    busemann_values,
    canonical_point_rep,
    real_form,
)
from .measures import BoundaryMeasure, max_atom_ratio

log = logging.getLogger(__name__)

ILL_CONDITIONED_EIG = 1e-8
# longest geodesic step per iteration
MAX_STEP = 2.0


class Regime(str, Enum):
    INTERIOR = "Interior"
    ATOM_DOMINATED = "AtomDominated"


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.  ``grad_tol`` bounds the mass-normalised gradient norm."""

    max_iters: int = 200
    grad_tol: float = 1e-10
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    newton_switch: float = 1e-4
    initial_point: Point = None

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.armijo_c < 1 or not 0 < self.armijo_shrink < 1:
            raise ValueError("Armijo parameters must lie in (0, 1)")


@dataclass(frozen=True)
class BarycenterResult:
    location: object
    residual: float
    iterations: int
    regime: Regime
    ill_conditioned: bool = False
    min_hessian_eig: float = field(default=float("nan"), repr=False)

    def to_dict(self):
        return {
            "location": self.location.rep.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "regime": self.regime.value,
            "ill_conditioned": self.ill_conditioned,
        }


# -- functional ----------------------------------------------------------------


def _phi(space, y, thetas, weights, base):
    return float(weights @ busemann_values(space, y, thetas, base))


def _grad_frame(space, y, frame, thetas, weights):
    """Frame coordinates of the per-atom gradients and of their weighted sum."""
    C = (busemann_gradients(space, y, thetas) * space.signature) @ frame
    return C, weights @ C


def weighted_hessian(C, weights, Js) -> np.ndarray:
    """``sum_j w_j Hess B(., theta_j)`` from frame gradients ``C`` (rows)."""
    k = C.shape[1]
    H = (C * weights[:, None]).T @ C
    out = weights.sum() * np.eye(k) - H
    for J in Js:
        out -= J @ H @ J
    return out


def phi_eval(beta: BoundaryMeasure, y: Point, base: Point = None) -> float:
    """``phi_beta(y) = sum_j w_j B_base(y, theta_j)``."""
    _check(beta, y)
    base = beta.space.origin() if base is None else base
    return _phi(beta.space, y.rep, beta.thetas, beta.weights, base.rep)


def phi_gradient(beta: BoundaryMeasure, y: Point, base: Point = None):
    """Gradient of :func:`phi_eval` at ``y`` (independent of ``base``)."""
    from .geometry import TangentVector

    _check(beta, y)
    G = busemann_gradients(beta.space, y.rep, beta.thetas)
    return TangentVector(y, beta.weights @ G)


def phi_hessian(beta: BoundaryMeasure, y: Point) -> np.ndarray:
    """Hessian of :func:`phi_eval` at ``y`` in ``y.frame``."""
    _check(beta, y)
    C, _ = _grad_frame(beta.space, y.rep, y.frame, beta.thetas, beta.weights)
    return weighted_hessian(C, beta.weights, y.frame_J)


def stationarity_residual(beta: BoundaryMeasure, y: Point) -> float:
    """``|grad phi_beta(y)|`` divided by the total mass."""
    return phi_gradient(beta, y).norm() / float(beta.weights.sum())


def _check(beta, y):
    if beta.space != y.space:
        raise SpaceMismatch(f"{beta.space} vs {y.space}")


# -- solver --------------------------------------------------------------------


def initial_guess(space: Space, thetas, weights) -> np.ndarray:
    """Weighted mean of the atoms scaled to pair to -1 with the origin,
    when that mean is a negative vector; the origin otherwise."""
    d = space.d
    scale = 1.0 / thetas[:, -d]
    raw = (weights * scale) @ thetas
    if real_form(space, raw, raw) < -1e-12:
        return canonical_point_rep(space, raw)
    return space.origin().rep


def solve_interior(space: Space, thetas, weights, cfg: SolverConfig, start=None):
    """Minimise ``phi`` from ``start``; returns ``(rep, residual, iterations, min_eig)``.

    Raw-array core shared by :func:`barycenter` and the natural map.  Raises
    :class:`NonConvergence` when ``max_iters`` is exhausted.
    """
    from .geometry import _frame

    w = np.asarray(weights, dtype=float) / np.sum(weights)
    y = initial_guess(space, thetas, w) if start is None else np.asarray(start, dtype=float)
    base = y
    Rs = space.right_units[1:]
    best = (np.inf, y, np.nan)

    for it in range(int(cfg.max_iters) + 1):
        F = _frame(space, y)
        C, g = _grad_frame(space, y, F, thetas, w)
        gnorm = float(np.linalg.norm(g))
        Js = [F.T @ (space.signature[:, None] * (R @ F)) for R in Rs]
        hess = weighted_hessian(C, w, Js)
        if gnorm < best[0]:
            best = (gnorm, y, hess)
        if gnorm <= max(cfg.grad_tol, rounding_floor(y)):
            return y, gnorm, it, float(np.linalg.eigvalsh(hess)[0])
        if it == cfg.max_iters:
            break

        step = _newton_direction(hess, g)
        if gnorm < cfg.newton_switch and step is not None:
            # phi differences are below rounding here; judge the step by the gradient
            y_new = _exp(space, y, F @ step)
            _, g_new = _grad_frame(space, y_new, _frame(space, y_new), thetas, w)
            if np.linalg.norm(g_new) < gnorm:
                y = y_new
                continue
        y = _line_search(space, y, F, g, step, thetas, w, base, cfg)

    gnorm, y, hess = best
    raise NonConvergence(
        f"barycenter solver did not reach {cfg.grad_tol:.1e} in {cfg.max_iters} iterations "
        f"(best residual {gnorm:.3e})",
        (y, gnorm, int(cfg.max_iters), float(np.linalg.eigvalsh(hess)[0])),
    )


def rounding_floor(y) -> float:
    """Smallest gradient norm resolvable at a point with coordinates ``y``."""
    return 64 * np.finfo(float).eps * float(np.abs(y).max()) ** 2


def _line_search(space, y, F, g, step, thetas, w, base, cfg):
    """Armijo backtracking along the (length-capped) Newton step, then along ``-g``."""
    f0 = _phi(space, y, thetas, w, base)
    directions = [-g] if step is None else [step, -g]
    for direction in directions:
        length = np.linalg.norm(direction)
        if length > MAX_STEP:
            direction = direction * (MAX_STEP / length)
        slope = float(g @ direction)
        alpha = 1.0
        while alpha > 1e-12:
            y_new = _exp(space, y, alpha * (F @ direction))
            if _phi(space, y_new, thetas, w, base) <= f0 + cfg.armijo_c * alpha * slope:
                return y_new
            alpha *= cfg.armijo_shrink
    # no decrease visible in floating point: stay put, the gradient test decides
    return y


def _newton_direction(hess, g):
    """``-hess^{-1} g`` when the Hessian is safely positive definite, else ``None``."""
    try:
        L = np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    if np.min(np.diag(L)) ** 2 < 1e-14:
        return None
    return -np.linalg.solve(L.T, np.linalg.solve(L, g))


def _exp(space, y, v):
    nv = np.sqrt(max(real_form(space, v, v), 0.0))
    if nv == 0.0:
        return y
    return canonical_point_rep(space, np.cosh(nv) * y + np.sinh(nv) * (v / nv), rescale=False)


def check_excluded(beta: BoundaryMeasure, rtol: float = 1e-12):
    if len(beta) == 2 and abs(beta.weights[0] - beta.weights[1]) <= rtol * beta.weights.max():
        raise ExcludedMeasure("two atoms of equal weight have no barycentre")


def barycenter(beta: BoundaryMeasure, cfg: SolverConfig = None) -> BarycenterResult:
    """Barycentre of ``beta``.

    A measure with an atom carrying at least half the mass returns that atom
    (regime ``AtomDominated``).  Otherwise the interior minimiser of ``phi`` is
    returned with its mass-normalised gradient norm as ``residual``.
    """
    cfg = SolverConfig() if cfg is None else cfg
    check_excluded(beta)
    if max_atom_ratio(beta) >= 0.5:
        j = int(np.argmax(beta.weights))
        return BarycenterResult(BoundaryPoint(beta.space, beta.thetas[j]), 0.0, 0, Regime.ATOM_DOMINATED)
    start = None
    if cfg.initial_point is not None:
        _check(beta, cfg.initial_point)
        start = cfg.initial_point.rep
    try:
        rep, res, its, lam = solve_interior(beta.space, beta.thetas, beta.weights, cfg, start)
    except NonConvergence as exc:
        rep, res, its, lam = exc.result
        exc.result = _result(beta.space, rep, res, its, lam)
        raise
    return _result(beta.space, rep, res, its, lam)


def _result(space, rep, res, its, lam):
    ill = bool(lam < ILL_CONDITIONED_EIG)
    if ill:
        log.warning("barycenter Hessian nearly singular (min eigenvalue %.2e)", lam)
    return BarycenterResult(Point(space, rep), float(res), int(its), Regime.INTERIOR, ill, float(lam))


def with_start(cfg: SolverConfig, y: Point) -> SolverConfig:
    return replace(cfg, initial_point=y)
