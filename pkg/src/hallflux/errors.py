"""Exception hierarchy shared by every module."""


class HallfluxError(Exception):
    """Base class for all package errors."""


class InvalidFieldError(HallfluxError, ValueError):
    """A field contains NaN or infinite samples."""


class ShapeError(HallfluxError, ValueError):
    """Field arity or grid does not match what the operation expects."""


class GaugeError(HallfluxError, ValueError):
    """A potential was requested for a field with nonzero mean."""


class ParameterError(HallfluxError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class ResolutionError(ParameterError):
    """A mollifier scale cannot be resolved or localized on the grid."""


class WraparoundError(HallfluxError, ValueError):
    """A kernel support overlaps its own periodic image."""


class ShiftError(HallfluxError, ValueError):
    """A shift vector is not a grid vector or is out of range."""


class BlowUpError(HallfluxError, FloatingPointError):
    """The solver produced non-finite values."""

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"non-finite state at t={t!r}")


class StabilityError(ParameterError):
    """The requested time step exceeds the stability heuristic."""


class DataError(HallfluxError, ValueError):
    """Not enough samples, shells or ladder points for the requested estimate."""


class ComparisonError(HallfluxError, ValueError):
    """Two runs cannot be compared."""


class UsageError(HallfluxError, ValueError):
    """An operation was asked for a law or variant it does not support."""


class LawNotImplementedError(UsageError, NotImplementedError):
    """The law has densities but no anomalous-dissipation formula."""


class ConfigError(HallfluxError, ValueError):
    """A run configuration failed schema validation."""
