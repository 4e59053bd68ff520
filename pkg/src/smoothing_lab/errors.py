"""Exception types shared across the package."""


class SmoothingLabError(Exception):
    """Base class for all package-specific errors."""


class NotPrimitive(SmoothingLabError):
    """No power of the matrix up to the Wielandt bound is strictly positive."""


class ZeroColumn(SmoothingLabError):
    """A matrix column is identically zero, so it kills a vertex direction."""


class SingularDirection(SmoothingLabError):
    """iota(a) = 0: some direction on the simplex is mapped to zero."""


class NoSingletonBranch(SmoothingLabError):
    """The model gives zero probability to branches of size one."""


class FurstenbergKestenViolated(SmoothingLabError):
    """A singleton-branch atom maps part of the simplex to zero, so negative
    powers of |A v| are unbounded."""


class NoConvergence(SmoothingLabError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class BudgetExceeded(SmoothingLabError):
    """An enumeration or simulation grew past its configured element budget."""


class SupercriticalBlowup(BudgetExceeded):
    """The live tree population exceeded the node budget."""


class WitnessNotFound(SmoothingLabError):
    """A bounded search ended without the requested certificate (not a disproof)."""


class RootNotBracketed(SmoothingLabError):
    """A bisection target does not change sign on the search interval."""


class OutOfRange(SmoothingLabError):
    """An input lies outside the representable interval."""


class NegativeInput(SmoothingLabError):
    """A vector that must be entrywise nonnegative has a negative entry."""


class EmptyTail(SmoothingLabError):
    """No pool sample falls below the largest requested threshold."""


class InsufficientDecay(SmoothingLabError):
    """A transform curve never drops below the fitting threshold."""


class MomentRangeExceeded(SmoothingLabError):
    """A harmonic-moment order lies outside the finite range of the weights."""
