"""Exception types shared across the package.

Every failure mode that callers are expected to catch has its own class so
that CLI and harness code can map errors to exit codes and record tags
without string matching.
"""


class CrossingError(Exception):
    """Base class for all package-specific errors."""


# --- model construction ---------------------------------------------------

class DegenerateModel(CrossingError):
    """The two potentials or the couplings do not define a valid crossing
    (identical diagonals, extra zero of the gap inside the interval, or an
    identically vanishing coupling)."""


class BadInterval(CrossingError):
    """The working interval does not contain 0 in its interior, or the
    cutoff support is not strictly inside the interval."""


# --- oscillatory quadrature -----------------------------------------------

class ToleranceNotMet(CrossingError):
    """Adaptive subdivision hit its panel cap before reaching the requested
    tolerance.  Carries the best estimate and its error bound."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class GridTooLarge(CrossingError):
    """A fixed-step quadrature would need more sample points than the
    configured cap allows."""


# --- stationary phase -----------------------------------------------------

class NotDegenerate(CrossingError):
    """The phase has a non-vanishing derivative at 0, so there is no
    stationary point to expand around."""


class ExtraStationaryPoint(CrossingError):
    """The phase derivative vanishes somewhere in the interval besides 0."""


class ContactOrderTooLow(CrossingError):
    """The requested closed-form asymptotics need contact order >= 2."""


# --- solver -----------------------------------------------------------------

class GridTooCoarse(CrossingError):
    """The solver grid cannot resolve the oscillation of the scalar phase
    factors even after the allowed number of refinements."""


class SeriesDiverging(CrossingError):
    """Successive increments of the iterated-kernel series stopped
    decreasing; the coupling is too strong for the series construction."""


class StepUnderflow(CrossingError):
    """The adaptive ODE integrator failed to advance."""


class IllConditioned(CrossingError):
    """The basis matrix was too ill-conditioned at every evaluation point
    to extract a transfer matrix."""


class KernelMismatch(CrossingError):
    """The transfer matrix extracted from the series bases disagrees with
    its direct kernel-integral representation beyond quadrature error."""


class RegimeViolation(CrossingError):
    """An asymptotic predictor was requested outside its validity regime."""


class SingularT22(CrossingError):
    """The (2,2) transfer-matrix entry is numerically zero, so the
    flow-reversed scattering convention is undefined."""


# --- harness / cli ----------------------------------------------------------

class ConfigError(CrossingError):
    """A sweep or run configuration is structurally invalid."""


class InsufficientData(CrossingError):
    """Not enough data points for a least-squares convergence fit."""


class ParseError(CrossingError):
    """A config document could not be parsed.  Carries line/column."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(CrossingError):
    """A config document parsed but failed validation.  Names the field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
