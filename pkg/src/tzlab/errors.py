"""Exception types shared across tzlab modules."""


class TzlabError(Exception):
    """Base class for all tzlab errors."""


class ValidationError(TzlabError, ValueError):
    """Bad input: wrong shape, out of range, malformed spec string."""


class OddSideError(ValidationError):
    """Torus construction requires every side length to be even."""


class EmptySidesError(ValidationError):
    """Torus construction requires at least one side."""


class CycleTooShortError(ValidationError):
    """Cartesian cycle products need a cycle of length at least 3."""


class TooLargeError(ValidationError):
    """Instance exceeds the configured exhaustive-enumeration cap."""


class NumericError(TzlabError, RuntimeError):
    """Numeric failure: tracking loss, no convergence, degenerate seed."""


class TrackingFailureError(NumericError):
    """Eigenvalue continuation lost its target (collision within tolerance)."""


class NoConvergenceError(NumericError):
    """An iterative solve did not converge for a particular seed."""


class SeedNotOnCurveError(NumericError):
    """Curve tracing seed does not satisfy the equal-modulus condition."""


class PoleError(NumericError):
    """A rational iteration hit a pole (division by zero)."""


class ZeroLambdaError(ValidationError):
    """The diamond renormalization step is undefined at lambda = 0."""


class DenominatorZeroError(NumericError):
    """A contour-weight denominator vanished at the evaluation point."""


class InconsistentLabelsError(ValidationError):
    """A matching set of contours carries contradictory component labels."""


class SymmetryViolationError(TzlabError):
    """A symmetry identity failed at a specific series order."""

    def __init__(self, order, detail=""):
        self.order = order
        super().__init__(f"symmetry violated at order {order}" + (f": {detail}" if detail else ""))


class BadParametersError(ValidationError):
    """Parameters outside the admissible range of a closed formula."""


class RadiusTooLargeError(ValidationError):
    """Requested evaluation point lies outside the configured convergence radius."""


class ZeroConstantTermError(ValidationError):
    """Logarithmic coefficient extraction needs a positive constant term."""
