"""Determinant functionals on trace-one positive definite matrices.

For a positive definite symmetric ``H`` of trace one on ``R^k`` carrying ``d - 1``
anticommuting complex structures ``J_i``:

    phi(H) = det H / det(I - H - sum_i J_i H J_i)^2
    psi(H) = c * det(H)^((k-d)/(k+d-2)) / det(I-H)^(2(k-1)/(k+d-2))

with ``c = (k-1)^(2k(k-1)/(k+d-2)) / (k+d-2)^(2k)``.  Both peak at ``I/k`` with
value ``(k/(k+d-2)^2)^k`` and ``phi <= psi``.  ``Psi`` is ``psi`` as a
function of the eigenvalues and ``Psi_hat`` its chart on the simplex with
``a_k = 1 - sum a_i``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .algebra import COMPLEX, QUATERNION, ScalarAlgebra
from .errors import InvalidLabConfig, NotInterior, OptimizerFailure, SingularDenominator

TRACE_TOL = 1e-12
EIG_FLOOR = 1e-12
SMALL_GRAD = 1e-6


@dataclass(frozen=True)
class LabConfig:
    """Dimension ``k``, algebra dimension ``d`` and optimiser settings."""

    k: int
    d: int
    restarts: int = 32
    iterations: int = 2000
    seed: int = 0
    grad_tol: float = 1e-11

    def __post_init__(self):
        k, d = self.k, self.d
        if d not in (2, 4):
            raise InvalidLabConfig(f"d must be 2 or 4, got {d}")
        if k % d:
            raise InvalidLabConfig(f"k = {k} is not a multiple of d = {d}")
        if k < d + 2:
            raise InvalidLabConfig(f"k = {k} is below d + 2 = {d + 2}")
        if self.restarts < 1 or self.iterations < 1:
            raise InvalidLabConfig("restarts and iterations must be positive")

    @property
    def growth(self) -> int:
        return self.k + self.d - 2

    @property
    def max_value(self) -> float:
        """``(k/(k+d-2)^2)^k``."""
        return (self.k / self.growth**2) ** self.k

    @property
    def J(self) -> np.ndarray:
        return standard_structure(self.k, self.d)


def standard_structure(k: int, d: int) -> np.ndarray:
    """``J_1..J_{d-1}``: right multiplication by ``i`` (and ``j, k``) on ``R^k``
    seen as ``k/d`` copies of the algebra."""
    alg = ScalarAlgebra(COMPLEX if d == 2 else QUATERNION)
    return np.stack([np.kron(np.eye(k // d), R) for R in alg.right_units[1:]])


# -- functionals ---------------------------------------------------------------


def _check_h(H, k):
    H = np.asarray(H, dtype=float)
    if H.shape != (k, k):
        raise ValueError(f"expected a {k}x{k} matrix")
    if np.abs(H - H.T).max() > 1e-12 * max(1.0, np.abs(H).max()):
        raise ValueError("matrix is not symmetric")
    if abs(np.trace(H) - 1.0) > 1e-10:
        raise ValueError("matrix does not have trace one")
    return (H + H.T) / 2


def denominator_matrix(H, J) -> np.ndarray:
    """``I - H - sum J_i H J_i``."""
    K = np.eye(H.shape[0]) - H
    for Ji in J:
        K -= Ji @ H @ Ji
    return (K + K.T) / 2


def log_phi(H, cfg: LabConfig) -> float:
    H = _check_h(H, cfg.k)
    s1, ld_h = np.linalg.slogdet(H)
    if s1 <= 0:
        raise ValueError("matrix is not positive definite")
    s2, ld_k = np.linalg.slogdet(denominator_matrix(H, cfg.J))
    if s2 == 0 or not np.isfinite(ld_k):
        raise SingularDenominator("I - H - sum J H J is singular")
    return float(ld_h - 2.0 * ld_k)


def phi(H, cfg: LabConfig) -> float:
    return float(np.exp(log_phi(H, cfg)))


def log_phi_gradient(H, cfg: LabConfig) -> np.ndarray:
    """Gradient of ``log phi`` projected to trace-zero symmetric matrices."""
    Kinv = np.linalg.inv(denominator_matrix(H, cfg.J))
    G = np.linalg.inv(H) + 2.0 * Kinv
    for Ji in cfg.J:
        G += 2.0 * Ji @ Kinv @ Ji
    G = (G + G.T) / 2
    return G - np.trace(G) / cfg.k * np.eye(cfg.k)


def _exponents(cfg):
    k, g = cfg.k, cfg.growth
    return (k - cfg.d) / g, 2.0 * (k - 1) / g


def _log_const(cfg):
    k, g = cfg.k, cfg.growth
    return 2.0 * k * (k - 1) / g * np.log(k - 1) - 2.0 * k * np.log(g)


def psi(H, cfg: LabConfig) -> float:
    H = _check_h(H, cfg.k)
    e1, e2 = _exponents(cfg)
    s1, ld_h = np.linalg.slogdet(H)
    s2, ld_1 = np.linalg.slogdet(np.eye(cfg.k) - H)
    if s2 <= 0:
        raise SingularDenominator("I - H is singular")
    if s1 <= 0:
        raise ValueError("matrix is not positive definite")
    return float(np.exp(_log_const(cfg) + e1 * ld_h - e2 * ld_1))


def eigen_map(H) -> np.ndarray:
    """Eigenvalues of ``H`` sorted in decreasing order (a point of the simplex)."""
    H = np.asarray(H, dtype=float)
    a = np.linalg.eigvalsh((H + H.T) / 2)[::-1]
    if a[-1] <= 0:
        raise ValueError("matrix is not positive definite")
    return a


def _check_simplex(a, k):
    a = np.asarray(a, dtype=float)
    if a.shape != (k,):
        raise ValueError(f"expected {k} coordinates")
    if np.any(a <= 0) or abs(a.sum() - 1.0) > TRACE_TOL * k:
        raise NotInterior("point is not in the open simplex")
    return a


def log_Psi(a, cfg: LabConfig) -> float:
    a = _check_simplex(a, cfg.k)
    e1, e2 = _exponents(cfg)
    return float(_log_const(cfg) + e1 * np.log(a).sum() - e2 * np.log1p(-a).sum())


def Psi(a, cfg: LabConfig) -> float:
    return float(np.exp(log_Psi(a, cfg)))


def log_Psi_hat(a, cfg: LabConfig) -> float:
    """``log Psi(a_1, .., a_{k-1}, 1 - sum a_i)``, with ``1 - a_k`` kept as ``sum a_i``."""
    a = np.asarray(a, dtype=float)
    if a.shape != (cfg.k - 1,):
        raise ValueError(f"expected {cfg.k - 1} coordinates")
    s = a.sum()
    if np.any(a <= 0) or s >= 1.0:
        raise NotInterior("point is not in the open simplex")
    e1, e2 = _exponents(cfg)
    num = np.log(a).sum() + np.log1p(-s)
    den = np.log1p(-a).sum() + np.log(s)
    return float(_log_const(cfg) + e1 * num - e2 * den)


def Psi_hat(a, cfg: LabConfig) -> float:
    return float(np.exp(log_Psi_hat(a, cfg)))


def vertex_leading_factor(a, cfg: LabConfig) -> float:
    """``c (a_1 .. a_{k-1})^e1 / (sum a_i)^e2``: ``Psi_hat`` without the factors
    that tend to one at the origin vertex."""
    a = np.asarray(a, dtype=float)
    e1, e2 = _exponents(cfg)
    return float(np.exp(_log_const(cfg) + e1 * np.log(a).sum() - e2 * np.log(a.sum())))


def amgm_majorant(a, cfg: LabConfig) -> float:
    """Arithmetic-geometric mean bound on :func:`vertex_leading_factor`.

    ``(k-1)^((k-1)(k+d)/(k+d-2)) / (k+d-2)^(2k) * s^((k-1)(k-d-2)/(k+d-2))``
    with ``s = sum a_i``.  Since ``prod (1 - a_i) >= 1 - s``,
    ``Psi_hat <= amgm_majorant / (1 - s)``.
    """
    k, d, g = cfg.k, cfg.d, cfg.growth
    s = float(np.sum(a))
    log_c = (k - 1) * (k + d) / g * np.log(k - 1) - 2 * k * np.log(g)
    return float(np.exp(log_c + (k - 1) * (k - d - 2) / g * np.log(s)))


# -- maximisation --------------------------------------------------------------


def _random_start(cfg, rng):
    A = rng.standard_normal((cfg.k, cfg.k + 2))
    H = A @ A.T
    return H / np.trace(H)


def _floor(H):
    lam, V = np.linalg.eigh((H + H.T) / 2)
    lam = np.maximum(lam, EIG_FLOOR)
    H = (V * lam) @ V.T
    return H / np.trace(H)


def _safe_log_phi(H, cfg):
    try:
        if np.linalg.eigvalsh(H)[0] <= 0:
            return -np.inf
        return log_phi(H, cfg)
    except (SingularDenominator, ValueError):
        return -np.inf


def ascend_phi(H0, cfg: LabConfig):
    """Projected gradient ascent of ``log phi`` from ``H0``.

    Barzilai-Borwein steps safeguarded by Armijo backtracking; positive
    definiteness is restored by eigenvalue flooring.  Returns
    ``(H, log_value, grad_norm, iterations)``.
    """
    H = _floor(np.asarray(H0, dtype=float))
    f = _safe_log_phi(H, cfg)
    G = log_phi_gradient(H, cfg)
    step = 1e-3
    for it in range(cfg.iterations):
        gnorm = float(np.linalg.norm(G))
        if gnorm <= cfg.grad_tol:
            return H, f, gnorm, it
        t = step
        if gnorm < SMALL_GRAD:
            # log phi no longer resolves the ascent; judge steps by the gradient
            while t >= 1e-16:
                Hn = _floor(H + t * G)
                if np.linalg.norm(log_phi_gradient(Hn, cfg)) < gnorm:
                    break
                t *= 0.5
            fn = _safe_log_phi(Hn, cfg)
        else:
            while t >= 1e-16:
                Hn = _floor(H + t * G)
                fn = _safe_log_phi(Hn, cfg)
                if fn >= f + 1e-4 * float(np.sum(G * (Hn - H))):
                    break
                t *= 0.5
        if t < 1e-16:
            # no ascent resolvable in floating point
            return H, f, gnorm, it
        Gn = log_phi_gradient(Hn, cfg)
        S, Y = Hn - H, Gn - G
        sy = float(np.sum(S * Y))
        step = float(np.sum(S * S)) / -sy if sy < 0 else min(10 * t, 1.0)
        step = min(max(step, 1e-10), 10.0)
        H, f, G = Hn, fn, Gn
    return H, f, float(np.linalg.norm(G)), cfg.iterations


@dataclass(frozen=True)
class MaximizeResult:
    Hstar: np.ndarray = field(repr=False)
    value: float
    certificate: dict

    def to_dict(self):
        return {"Hstar": self.Hstar.tolist(), "value": self.value, "certificate": self.certificate}


def maximize_phi(cfg: LabConfig, start=None) -> MaximizeResult:
    """Maximise ``phi`` over ``cfg.restarts`` seeded random starts (or from ``start``).

    The certificate records every restart's value, the best-vs-second-best
    gap, the final projected gradient norm and an independent maximisation
    of ``Psi`` over the simplex.  Raises :class:`OptimizerFailure` (carrying
    the best iterate) when no restart reaches a stationary point.
    """
    rng = np.random.default_rng(cfg.seed)
    starts = [np.asarray(start, dtype=float)] if start is not None else [
        _random_start(cfg, rng) for _ in range(cfg.restarts)
    ]
    runs = [ascend_phi(H0, cfg) for H0 in starts]
    order = sorted(range(len(runs)), key=lambda i: -runs[i][1])
    H, f, gnorm, its = runs[order[0]]
    values = [float(np.exp(runs[i][1])) for i in range(len(runs))]
    second = float(np.exp(runs[order[1]][1])) if len(runs) > 1 else float("nan")
    certificate = {
        "restarts": len(runs),
        "seed": cfg.seed,
        "iterations": int(its),
        "grad_norm": gnorm,
        "restart_values": values,
        "best_minus_second": float(np.exp(f)) - second if len(runs) > 1 else 0.0,
        "simplex_cross_check": maximize_Psi(cfg)["value"],
    }
    result = MaximizeResult(H, float(np.exp(f)), certificate)
    if gnorm > 1e3 * cfg.grad_tol:
        raise OptimizerFailure(f"best restart is not stationary (gradient norm {gnorm:.2e})", result)
    return result


def maximize_Psi(cfg: LabConfig) -> dict:
    """Maximise ``log Psi`` over the open simplex in softmax coordinates."""
    k = cfg.k

    def neg(z):
        a = np.exp(z - z.max())
        a /= a.sum()
        return -log_Psi(a / a.sum(), cfg)

    rng = np.random.default_rng(cfg.seed + 1)
    best = None
    for _ in range(4):
        res = minimize(neg, 0.5 * rng.standard_normal(k), method="BFGS", options={"gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    a = np.exp(best.x - best.x.max())
    a /= a.sum()
    return {"value": float(np.exp(-best.fun)), "argmax": np.sort(a)[::-1].tolist()}


# -- boundary analysis ---------------------------------------------------------


@dataclass(frozen=True)
class BoundaryScan:
    margin: float
    vertex_sup: float
    face_sup: float
    interior_max: float
    samples: int

    def to_dict(self):
        return {
            "margin": self.margin,
            "vertex_sup": self.vertex_sup,
            "face_sup": self.face_sup,
            "interior_max": self.interior_max,
            "vertex_ratio": self.vertex_sup / self.interior_max,
            "face_ratio": self.face_sup / self.interior_max,
            "samples": self.samples,
        }


def vertex_samples(cfg: LabConfig, margin: float, n: int, rng) -> np.ndarray:
    """Chart points ``(a_1..a_{k-1})`` with ``sum a_i <= margin`` (the origin vertex).

    By permutation symmetry of ``Psi`` every vertex of the simplex looks like
    this one.  Includes the equal split at ``sum = margin``, where the
    arithmetic-geometric bound is tight.
    """
    k = cfg.k
    pts = [np.full(k - 1, margin / (k - 1))]
    for _ in range(n):
        s = margin * rng.uniform() ** (1.0 / (k - 1))
        pts.append(s * rng.dirichlet(np.ones(k - 1)))
    return np.array(pts)


def face_samples(cfg: LabConfig, margin: float, n: int, rng, vertex_gap: float = 0.1) -> np.ndarray:
    """Simplex points with some coordinate below ``margin`` and every coordinate
    at most ``1 - vertex_gap`` (away from the vertices)."""
    k = cfg.k
    out = []
    while len(out) < n:
        m = int(rng.integers(1, k - 1))
        small = margin * rng.uniform(size=m)
        rest = (1.0 - small.sum()) * rng.dirichlet(np.ones(k - m))
        a = np.concatenate([small, rest])
        if a.max() <= 1.0 - vertex_gap and a.min() > 0:
            out.append(rng.permutation(a))
    return np.array(out)


def boundary_scan(cfg: LabConfig, margin: float, n: int = 2000) -> BoundaryScan:
    """Sup of ``Psi_hat`` near the vertices and near the other boundary points."""
    if not 0 < margin < 1.0 / cfg.k:
        raise ValueError("margin must lie in (0, 1/k)")
    rng = np.random.default_rng(cfg.seed)
    vert = vertex_samples(cfg, margin, n, rng)
    vertex_sup = max(Psi_hat(a, cfg) for a in vert)
    face = face_samples(cfg, margin, n, rng)
    face_sup = max(Psi(a, cfg) for a in face)
    interior = rng.dirichlet(np.ones(cfg.k), size=n)
    interior_max = max([Psi(np.full(cfg.k, 1.0 / cfg.k), cfg)] + [Psi(a, cfg) for a in interior])
    return BoundaryScan(margin, vertex_sup, face_sup, interior_max, 2 * n + 1)


# -- level sets near the maximum ----------------------------------------------


def _trace_zero_basis(k):
    basis = []
    for i in range(k):
        for j in range(i + 1, k):
            E = np.zeros((k, k))
            E[i, j] = E[j, i] = 1 / np.sqrt(2)
            basis.append(E)
    for i in range(k - 1):
        E = np.zeros((k, k))
        E[i, i], E[i + 1, i + 1] = 1.0, -1.0
        basis.append(E)
    # orthonormalise the diagonal part
    M = np.array([b.ravel() for b in basis])
    Q, _ = np.linalg.qr(M.T)
    return [q.reshape(k, k) for q in Q.T]


def log_phi_hessian_at_center(cfg: LabConfig, h: float = 1e-4) -> tuple:
    """Hessian of ``log phi`` at ``I/k`` on trace-zero symmetric matrices
    (central differences in an orthonormal basis)."""
    k = cfg.k
    C = np.eye(k) / k
    basis = _trace_zero_basis(k)
    n = len(basis)
    Hs = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            E, F = basis[i], basis[j]
            val = (log_phi(C + h * (E + F), cfg) - log_phi(C + h * (E - F), cfg)
                   - log_phi(C - h * (E - F), cfg) + log_phi(C - h * (E + F), cfg)) / (4 * h * h)
            Hs[i, j] = Hs[j, i] = val
    return Hs, basis


def _batch_log_phi(cfg, Hs):
    """``log phi`` on a stack of matrices; ``-inf`` outside the domain."""
    K = np.eye(cfg.k) - Hs
    for Ji in cfg.J:
        K = K - Ji @ Hs @ Ji
    s1, l1 = np.linalg.slogdet(Hs)
    s2, l2 = np.linalg.slogdet(K)
    out = l1 - 2.0 * l2
    out[(s1 <= 0) | (s2 == 0)] = -np.inf
    return out


def _ray_radius(cfg, E, threshold):
    """Largest ``t`` with ``log phi(I/k + s E) >= threshold`` for all ``s <= t``."""
    k = cfg.k
    C = np.eye(k) / k
    lam = np.linalg.eigvalsh(E)
    t_hi = min(1.0 / k / max(-lam[0], 1e-300), 10.0) * (1 - 1e-12)
    grid = np.geomspace(1e-9, t_hi, 64)
    ok = _batch_log_phi(cfg, C + grid[:, None, None] * E) >= threshold
    if ok.all():
        return float(t_hi)
    first_bad = int(np.argmin(ok))
    lo = grid[first_bad - 1] if first_bad > 0 else 0.0
    hi = grid[first_bad]
    # refine the crossing on successively finer grids
    for _ in range(4):
        ts = np.linspace(lo, hi, 33)
        ok = _batch_log_phi(cfg, C + ts[:, None, None] * E) >= threshold
        j = int(np.argmin(ok))
        lo, hi = ts[j - 1], ts[j]
    return float(lo)


def sublevel_diameter(cfg: LabConfig, eps: float, n_random: int = 200, refine: int = 150) -> dict:
    """Largest ``|H - I/k|_F`` over ``{phi >= max (1 - eps)}``, searched along rays.

    Candidate directions are the eigenvectors of the Hessian of ``log phi`` at
    ``I/k`` and ``n_random`` random trace-zero directions; the best is then
    refined by random perturbation hill climbing.  ``eps = 0`` returns 0.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return {"eps": 0.0, "diameter": 0.0, "direction": None}
    rng = np.random.default_rng(cfg.seed)
    threshold = np.log(cfg.max_value) + np.log1p(-eps)
    Hs, basis = log_phi_hessian_at_center(cfg)
    _, vecs = np.linalg.eigh(Hs)
    B = np.array([b.ravel() for b in basis])
    dirs = [(v @ B).reshape(cfg.k, cfg.k) for v in vecs.T]
    dirs += [-D for D in dirs]
    for _ in range(n_random):
        c = rng.standard_normal(len(basis))
        dirs.append((c @ B).reshape(cfg.k, cfg.k) / np.linalg.norm(c))
    radii = [_ray_radius(cfg, D, threshold) for D in dirs]
    i = int(np.argmax(radii))
    best_r, best_c = radii[i], B @ dirs[i].ravel()
    scale = 0.3
    for _ in range(refine):
        c = best_c + scale * rng.standard_normal(len(basis))
        c /= np.linalg.norm(c)
        r = _ray_radius(cfg, (c @ B).reshape(cfg.k, cfg.k), threshold)
        if r > best_r:
            best_r, best_c = r, c
        else:
            scale = max(scale * 0.97, 1e-3)
    return {"eps": float(eps), "diameter": float(best_r),
            "direction": (best_c @ B).reshape(cfg.k, cfg.k).tolist()}


def degenerate_path(cfg: LabConfig, steps: int = 12):
    """``H_n`` with one eigenvalue ``2^-n / k`` and the rest equal; ``phi`` stays
    away from the maximum along it."""
    k = cfg.k
    out = []
    for n in range(1, steps + 1):
        small = 2.0**-n / k
        H = np.full(k, (1.0 - small) / (k - 1))
        H[0] = small
        out.append((small, phi(np.diag(H), cfg)))
    return out


@dataclass(frozen=True)
class ConvergenceProbe:
    eps: list
    diameters: list
    strictly_decreasing: bool
    degenerate_gap: float
    degenerate_path: list = field(repr=False)

    def to_dict(self):
        return {
            "eps": self.eps,
            "diameters": self.diameters,
            "strictly_decreasing": self.strictly_decreasing,
            "degenerate_gap": self.degenerate_gap,
            "degenerate_path": [{"eigenvalue": a, "phi": v} for a, v in self.degenerate_path],
        }


def convergence_probe(eps_values, cfg: LabConfig, **kw) -> ConvergenceProbe:
    """Diameters of the near-maximal sets for decreasing ``eps`` and the gap
    along :func:`degenerate_path`."""
    eps_values = [float(e) for e in eps_values]
    if any(e <= 0 for e in eps_values) or any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("eps values must be positive and strictly decreasing")
    diams = [sublevel_diameter(cfg, e, **kw)["diameter"] for e in eps_values]
    path = degenerate_path(cfg)
    gap = cfg.max_value - max(v for _, v in path)
    dec = all(b < a for a, b in zip(diams, diams[1:]))
    return ConvergenceProbe(eps_values, diams, dec, float(gap), path)
