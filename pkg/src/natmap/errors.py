"""Exception types raised by the library."""


class NatmapError(Exception):
    """Base class for all library errors."""


class NonNegativeNorm(NatmapError, ValueError):
    """A vector with non-negative Hermitian norm was given as an interior point."""


class NotNullVector(NatmapError, ValueError):
    """A vector that is not null was given as a boundary point."""


class SpaceMismatch(NatmapError, ValueError):
    pass


class NotUnitary(NatmapError, ValueError):
    """A block expected in the compact factor U(n) / Sp(n) is not unitary."""


class NotAnIsometry(NatmapError, ValueError):
    pass


class GeneratorMismatch(NatmapError, ValueError):
    pass


class UnmappedAtom(NatmapError, KeyError):
    pass


class DegenerateOrbit(NatmapError, ValueError):
    pass


class InvalidMeasure(NatmapError, ValueError):
    pass


class ExcludedMeasure(NatmapError, ValueError):
    """The measure is two atoms of equal weight; its barycentre is undefined."""


class NonConvergence(NatmapError, RuntimeError):
    """The solver hit its iteration cap.  ``result`` holds the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ElementaryData(NatmapError, ValueError):
    """The pushed-forward measure has an atom of mass at least 1/2."""


class DegenerateForms(NatmapError, ArithmeticError):
    pass


class SingularSystem(NatmapError, ArithmeticError):
    pass


class SingularDenominator(NatmapError, ArithmeticError):
    pass


class NotInterior(NatmapError, ValueError):
    """A simplex point on (or outside) the boundary was passed to Psi."""


class OptimizerFailure(NatmapError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InvalidLabConfig(NatmapError, ValueError):
    pass


class ConfigError(NatmapError, ValueError):
    """Malformed experiment configuration (CLI exit code 64)."""
