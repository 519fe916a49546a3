"""Exception types raised across the package."""


class PushPullError(Exception):
    """Base class for all package errors."""


# graph
class InfeasibleEdgeCount(PushPullError, ValueError):
    pass


class NotARoot(PushPullError, ValueError):
    pass


# mixing
class EigenvectorNotUnique(PushPullError):
    """Eigenvalue 1 is not simple, or the Perron vector has a sign defect."""


class NonConvergence(PushPullError):
    pass


class DimensionMismatch(PushPullError, ValueError):
    pass


# norms
class SpectralRadiusTooLarge(PushPullError, ValueError):
    pass


class NumericalFailure(PushPullError):
    pass


# objectives
class ShapeMismatch(PushPullError, ValueError):
    pass


class SingularSystem(PushPullError):
    pass


class GenerationFailure(PushPullError):
    pass


# solver / analysis
class NonFiniteIterate(PushPullError, FloatingPointError):
    pass


class AssumptionViolation(PushPullError):
    pass


class StepSizeOutOfRange(PushPullError, ValueError):
    pass


class NotIrreducible(PushPullError, ValueError):
    pass


class DiagonalTooLarge(PushPullError, ValueError):
    pass


class TraceMismatch(PushPullError, ValueError):
    pass
