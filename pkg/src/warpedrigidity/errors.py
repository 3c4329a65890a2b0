"""Exception hierarchy shared by all modules."""


class GeometryError(Exception):
    """Base class for every error raised by this package."""


class MarginError(GeometryError):
    """Evaluation point is too close to a non-periodic chart boundary."""


class DegenerateMetricError(GeometryError):
    """Metric matrix is singular or too badly conditioned to invert."""


class CapabilityError(GeometryError):
    """Requested model is outside the supported (kind, dimension) range."""


class ConstancyError(GeometryError):
    """A quantity that must be constant varies by more than the tolerance."""

    def __init__(self, message, spread):
        super().__init__(f"{message} (spread={spread:.3e})")
        self.spread = spread


class DegenerateSolutionError(GeometryError):
    """Gradient vanishes on the zero set, so the solution is identically zero."""


class IntegrationError(GeometryError):
    def __init__(self, message, t):
        super().__init__(f"{message} at t={t!r}")
        self.t = t


class PreconditionError(GeometryError):
    """An operation was called outside its documented hypotheses."""


class ConstructionError(GeometryError):
    """A constructed object failed its own consistency check."""

    def __init__(self, message, value=None):
        super().__init__(message if value is None else f"{message} (value={value:.6e})")
        self.value = value


class NotDecomposableError(GeometryError):
    """Mixed horizontal/vertical Hessian does not vanish."""


class DegenerateFormError(GeometryError):
    """The mu-bar Gram matrix has nullity greater than one."""


class KillingError(GeometryError):
    """Field built from two functions fails to be Killing."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ExpressionError(GeometryError):
    """Scenario expression uses syntax outside the whitelisted grammar."""


class DomainError(GeometryError):
    """Warping function is not positive on the interior of the base."""
