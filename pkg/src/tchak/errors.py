"""Exception types shared across the package."""


class TchakError(Exception):
    """Base class for all package-specific errors."""


class EvaluationError(TchakError):
    """A basis function could not be evaluated at some point.

    Carries the identifier of the offending point in ``point_id``.
    """

    def __init__(self, message, point_id=None):
        super().__init__(message)
        self.point_id = point_id


class NullspaceNotFound(TchakError):
    """The active column set is numerically full-rank although more
    columns than the requested bound remain.  Signals a mismatch between
    the rank tolerance and the elimination tolerance."""


class NegativeWeight(TchakError):
    """A recombination update would drive a kept weight significantly
    below zero.  Signals numerical breakdown; retry with tighter
    tolerances."""


class Indeterminate(TchakError):
    """The non-negative least-squares iteration hit its cap before the
    optimality conditions were met.  ``best_residual`` carries the best
    residual norm seen."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class SpanViolation(TchakError):
    """The target moment vector lies outside the column span beyond
    tolerance, so no exact rule with free weights exists on the given
    points."""


class NonPositiveTarget(TchakError):
    """The requested target operator is not strictly positive definite."""


class AllDegenerate(TchakError):
    """Every candidate vector has vanishing norm; no design exists."""


class SingularStart(TchakError):
    """No nonsingular initial design could be constructed from the
    candidate family."""


class NotConverged(TchakError):
    """The design iteration did not certify the requested optimality
    level; no weights are extracted from a partial state."""
