"""Exception hierarchy shared by all finslerlab modules."""


class FinslerError(Exception):
    """Base class for all finslerlab errors."""


class InputError(FinslerError):
    """Malformed or out-of-contract input (bad shapes, zero vectors, ...)."""


class DomainError(InputError):
    """A point lies outside the chart domain of a metric."""


class DegeneracyError(FinslerError):
    """The fundamental tensor is degenerate (smallest eigenvalue below floor).

    Carries the witness (x, v) where degeneracy was detected.
    """

    def __init__(self, message, x=None, v=None):
        super().__init__(message)
        self.x = x
        self.v = v


class EvaluationError(FinslerError):
    """An expression could not be evaluated (division by zero, log of a
    nonpositive value, ...). Carries the offending operation name."""

    def __init__(self, message, op=None):
        super().__init__(message)
        self.op = op


class IntegrationError(FinslerError):
    """ODE integration failed (step-size collapse / stiffness)."""


class BVPError(FinslerError):
    """Geodesic boundary-value solve did not converge.

    ``residual`` holds the final shooting residual norm.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class QuadratureError(FinslerError):
    """Adaptive quadrature failed to converge to the requested tolerance."""


class SamplingError(FinslerError):
    """Too many samples of a statistical test had to be skipped."""


class ValidationError(FinslerError):
    """A metric spec failed validation; ``witnesses`` lists (property, x, v)."""

    def __init__(self, message, witnesses=None):
        super().__init__(message)
        self.witnesses = witnesses or []


class SpecError(InputError):
    """A metric spec file violates the schema; ``field`` names the offender."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
