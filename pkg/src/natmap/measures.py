"""Finitely supported measures on the boundary and conformal density families."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateOrbit, InvalidMeasure, SpaceMismatch, UnmappedAtom
from .geometry import (
    BoundaryPoint,
    Point,
    Space,
    busemann_values,
    canonical_boundary_rep,
    distance,
    log_map,
    random_boundary_point,
    unit_direction_to,
)

ATOM_MATCH_TOL = 1e-9
DISTINCT_TOL = 1e-12


def chordal_distance(a, b) -> np.ndarray:
    """Euclidean distance between canonical boundary representatives (<= sqrt 2)."""
    return np.linalg.norm(np.asarray(a) - np.asarray(b), axis=-1)


def _pairwise_chordal(A, B):
    return np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1)


@dataclass(frozen=True, eq=False)
class BoundaryMeasure:
    """Positive weights on distinct boundary points.

    ``thetas`` holds the canonical representatives as rows; probability
    normalisation is not required.
    """

    space: Space
    thetas: np.ndarray = field(repr=False)
    weights: np.ndarray

    def __post_init__(self):
        thetas = np.array(np.atleast_2d(self.thetas), dtype=float)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if thetas.shape != (weights.size, self.space.dim):
            raise InvalidMeasure("atoms and weights do not match")
        if weights.size == 0:
            raise InvalidMeasure("a measure needs at least one atom")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise InvalidMeasure("weights must be finite and strictly positive")
        if weights.size > 1:
            dist = _pairwise_chordal(thetas, thetas)
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= DISTINCT_TOL:
                raise InvalidMeasure("atoms must be pairwise distinct")
        thetas.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(cls, atoms, weights) -> "BoundaryMeasure":
        atoms = list(atoms)
        if not atoms:
            raise InvalidMeasure("a measure needs at least one atom")
        space = atoms[0].space
        if any(a.space != space for a in atoms):
            raise SpaceMismatch("atoms live in different spaces")
        return cls(space, np.array([a.rep for a in atoms]), weights)

    @classmethod
    def merged(cls, space: Space, thetas, weights, tol: float = ATOM_MATCH_TOL) -> "BoundaryMeasure":
        """Build a measure, adding up the weights of coincident atoms."""
        thetas = np.atleast_2d(thetas)
        weights = np.asarray(weights, dtype=float)
        keep, out_w = [], []
        for th, w in zip(thetas, weights):
            for i, kept in enumerate(keep):
                if np.linalg.norm(kept - th) <= tol:
                    out_w[i] += w
                    break
            else:
                keep.append(th)
                out_w.append(w)
        return cls(space, np.array(keep), np.array(out_w))

    @property
    def atoms(self):
        return [BoundaryPoint(self.space, th) for th in self.thetas]

    def __len__(self):
        return self.weights.size

    def scaled(self, c: float) -> "BoundaryMeasure":
        if c <= 0:
            raise InvalidMeasure("scaling factor must be positive")
        return BoundaryMeasure(self.space, self.thetas, c * self.weights)


def total_mass(beta: BoundaryMeasure) -> float:
    return float(beta.weights.sum())


def normalize(beta: BoundaryMeasure) -> BoundaryMeasure:
    return BoundaryMeasure(beta.space, beta.thetas, beta.weights / beta.weights.sum())


def max_atom_ratio(beta: BoundaryMeasure) -> float:
    return float(beta.weights.max() / beta.weights.sum())


# -- boundary maps -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryMapSample:
    """Finite table ``theta_j -> xi_j`` from the boundary of ``source`` to that of ``target``."""

    source: Space
    target: Space
    sources: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)

    def __post_init__(self):
        src = np.array(np.atleast_2d(self.sources), dtype=float)
        tgt = np.array(np.atleast_2d(self.targets), dtype=float)
        if src.shape[0] != tgt.shape[0]:
            raise ValueError("sources and targets must pair up")
        if src.shape[1] != self.source.dim or tgt.shape[1] != self.target.dim:
            raise SpaceMismatch("boundary map sample has wrong coordinate lengths")
        if src.shape[0] > 1:
            dist = _pairwise_chordal(src, src)
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= DISTINCT_TOL:
                raise ValueError("source atoms must be pairwise distinct")
        src.setflags(write=False)
        tgt.setflags(write=False)
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "targets", tgt)

    @classmethod
    def from_pairs(cls, pairs) -> "BoundaryMapSample":
        pairs = list(pairs)
        src, tgt = pairs[0][0].space, pairs[0][1].space
        return cls(src, tgt, np.array([a.rep for a, _ in pairs]), np.array([b.rep for _, b in pairs]))

    def lookup(self, thetas) -> np.ndarray:
        """Images of the given representatives; raises :class:`UnmappedAtom` on a miss."""
        thetas = np.atleast_2d(thetas)
        dist = _pairwise_chordal(thetas, self.sources)
        idx = dist.argmin(axis=1)
        miss = dist[np.arange(len(idx)), idx] > ATOM_MATCH_TOL
        if np.any(miss):
            raise UnmappedAtom(f"{int(miss.sum())} atom(s) have no image in the boundary map sample")
        return self.targets[idx]

    def composed_with(self, g) -> "BoundaryMapSample":
        """``g o D`` for an isometry ``g`` of the target."""
        from .isometry import boundary_image_reps

        return BoundaryMapSample(self.source, self.target, self.sources, boundary_image_reps(g, self.targets))

    def is_elementary(self) -> bool:
        """All images equal: the crude proxy for an elementary representation."""
        return bool(np.all(chordal_distance(self.targets, self.targets[0]) <= ATOM_MATCH_TOL))


def identity_boundary_map(beta: BoundaryMeasure, target: Space = None) -> BoundaryMapSample:
    """``D`` sending each atom to itself, through the standard inclusion into ``target``."""
    from .isometry import embed_coordinates

    target = beta.space if target is None else target
    images = canonical_boundary_rep(target, embed_coordinates(beta.space, target, beta.thetas))
    return BoundaryMapSample(beta.space, target, beta.thetas, images)


def pushforward(beta: BoundaryMeasure, D) -> BoundaryMeasure:
    """Image measure ``D_* beta`` for a sampled boundary map or an isometry."""
    from .isometry import Isometry, boundary_image_reps

    if isinstance(D, Isometry):
        if D.space != beta.space:
            raise SpaceMismatch("isometry acts on a different space")
        return BoundaryMeasure.merged(D.space, boundary_image_reps(D, beta.thetas), beta.weights)
    if isinstance(D, BoundaryMapSample):
        if D.source != beta.space:
            raise SpaceMismatch("boundary map sample has a different source space")
        return BoundaryMeasure.merged(D.target, D.lookup(beta.thetas), beta.weights)
    raise TypeError(f"cannot push a measure forward by {type(D).__name__}")


# -- conformal densities -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConformalDensity:
    """``mu_x = exp(-delta B_base(x, .)) mu_base`` for a seed measure ``mu_base``."""

    seed: BoundaryMeasure
    delta: float
    base: Point = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("conformal exponent must be positive")
        if self.base is None:
            object.__setattr__(self, "base", self.seed.space.origin())
        elif self.base.space != self.seed.space:
            raise SpaceMismatch("base point and seed live in different spaces")

    @property
    def space(self) -> Space:
        return self.seed.space

    def log_weights(self, x: Point) -> np.ndarray:
        B = busemann_values(self.space, x.rep, self.seed.thetas, self.base.rep)
        return np.log(self.seed.weights) - self.delta * B


def density_at(family: ConformalDensity, x: Point) -> BoundaryMeasure:
    """The member ``mu_x`` of the family; the seed itself at the base point."""
    if x is family.base:
        return family.seed
    return BoundaryMeasure(family.space, family.seed.thetas, np.exp(family.log_weights(x)))


def normalized_density_weights(family: ConformalDensity, x: Point) -> np.ndarray:
    """Probability weights of ``mu_x``, computed in log space."""
    lw = family.log_weights(x)
    w = np.exp(lw - lw.max())
    return w / w.sum()


def equivariance_residual(family: ConformalDensity, g, x: Point) -> float:
    """Weak-* gap between ``mu_{g x}`` and ``g_* mu_x`` (not zero in general)."""
    from .isometry import apply

    return weakstar_distance(normalize(density_at(family, apply(g, x))), normalize(pushforward(density_at(family, x), g)))


# -- weak-* metric --------------------------------------------------------------


def wasserstein1(beta1: BoundaryMeasure, beta2: BoundaryMeasure) -> float:
    """Exact 1-Wasserstein distance between the normalised measures (chordal cost).

    Solved as the transport linear program.
    """
    if beta1.space != beta2.space:
        raise SpaceMismatch("measures live on different spaces")
    a = beta1.weights / beta1.weights.sum()
    b = beta2.weights / beta2.weights.sum()
    C = _pairwise_chordal(beta1.thetas, beta2.thetas)
    n, m = C.shape
    if n == 1 or m == 1:
        return float((C * (a[:, None] * b[None, :])).sum())
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A_eq[n + j, j::m] = 1.0
    res = linprog(C.ravel(), A_eq=A_eq[:-1], b_eq=np.concatenate([a, b])[:-1], bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport problem failed: {res.message}")
    return float(max(res.fun, 0.0))


def weakstar_distance(beta1: BoundaryMeasure, beta2: BoundaryMeasure) -> float:
    """``W1`` of the normalised measures plus the mass difference ``|m1 - m2|``."""
    return wasserstein1(beta1, beta2) + abs(total_mass(beta1) - total_mass(beta2))


# -- samples -------------------------------------------------------------------


def patterson_sample(orbit, s: float, base: Point) -> BoundaryMeasure:
    """Orbital measure: each orbit point projected radially from ``base``,
    weighted by ``exp(-s d(base, y))``."""
    if s <= 0:
        raise ValueError("exponent must be positive")
    space = base.space
    thetas, weights = [], []
    for y in orbit:
        dist = distance(base, y)
        if dist < 1e-12:
            raise DegenerateOrbit("an orbit point coincides with the base point")
        v = log_map(base, y).vec / dist
        thetas.append(canonical_boundary_rep(space, base.rep + v))
        weights.append(np.exp(-s * dist))
    return BoundaryMeasure.merged(space, np.array(thetas), np.array(weights))


def random_measure(space: Space, seed: int, n: int, spread_cap: float = 4.0) -> BoundaryMeasure:
    """Deterministic random measure in general position with no heavy atom.

    Atoms are uniform on the boundary sphere seen from the origin with pairwise
    chordal distance above 1e-6; weights are uniform in ``[1, spread_cap]`` and
    redrawn until every atom carries less than half of the mass.
    """
    if n < 3:
        raise ValueError("random measures need at least three atoms")
    rng = np.random.default_rng(seed)
    thetas = []
    while len(thetas) < n:
        th = random_boundary_point(space, rng).rep
        if all(np.linalg.norm(th - t) > 1e-6 for t in thetas):
            thetas.append(th)
    spread_cap = max(float(spread_cap), 1.0)
    for _ in range(1000):
        w = rng.uniform(1.0, spread_cap, size=n)
        if w.max() / w.sum() < 0.5:
            break
    else:
        w = np.ones(n)
    return BoundaryMeasure(space, np.array(thetas), w)


def directions_measure(base: Point, directions, weights=None) -> BoundaryMeasure:
    """Measure on the endpoints of rays from ``base`` with the given frame directions."""
    space = base.space
    dirs = np.atleast_2d(directions)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    reps = base.rep[None, :] + dirs @ base.frame.T
    weights = np.ones(len(dirs)) if weights is None else weights
    return BoundaryMeasure(space, canonical_boundary_rep(space, reps), weights)


def cross_polytope_measure(base: Point) -> BoundaryMeasure:
    """Uniform measure on the ``2k`` endpoints of the rays ``+-e_i`` from ``base``."""
    k = base.space.k
    return directions_measure(base, np.vstack([np.eye(k), -np.eye(k)]))


def direction_coordinates(base: Point, beta: BoundaryMeasure) -> np.ndarray:
    """Unit frame coordinates at ``base`` of the rays towards each atom."""
    V = unit_direction_to(base.space, base.rep, beta.thetas)
    return (V * base.space.signature) @ base.frame
