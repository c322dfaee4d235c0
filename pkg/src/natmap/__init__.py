"""Numerical geometry of complex and quaternionic hyperbolic spaces.

Busemann calculus, barycentres of boundary measures, natural maps between
hyperbolic spaces with their Jacobian bounds, and a lab for the determinant
functional on trace-one positive matrices.
"""

from importlib.metadata import PackageNotFoundError, version

from .barycenter import BarycenterResult, Regime, SolverConfig, barycenter
from .geometry import BoundaryPoint, Point, Space, TangentVector, busemann, distance
from .isometry import Isometry, Representation, classify
from .measures import BoundaryMapSample, BoundaryMeasure, ConformalDensity
from .natural_map import NaturalMapContext, jacobian_k, natural_map_point
from .spectrum_lab import LabConfig, boundary_scan, maximize_phi

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "BarycenterResult",
    "BoundaryMapSample",
    "BoundaryMeasure",
    "BoundaryPoint",
    "ConformalDensity",
    "Isometry",
    "LabConfig",
    "NaturalMapContext",
    "Point",
    "Regime",
    "Representation",
    "SolverConfig",
    "Space",
    "TangentVector",
    "barycenter",
    "boundary_scan",
    "busemann",
    "classify",
    "distance",
    "jacobian_k",
    "maximize_phi",
    "natural_map_point",
]
