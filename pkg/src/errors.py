"""Exception types raised across the polarimetry package."""


class PolarimetryError(Exception):
    """Base class for all package errors."""


class DomainError(PolarimetryError, ValueError):
    """An argument lies outside the range an operation accepts."""


class ValidationError(PolarimetryError, ValueError):
    """A matrix violates a structural invariant (Hermiticity, unitarity, det = 1, ...)."""


class InconsistentDataError(PolarimetryError, ValueError):
    """Measured intensities cannot come from any physical setting.

    Args:
        quantity: Name of the offending quantity, surfaced by the CLI
        message: Human readable description

    """

    def __init__(self, quantity: str, message: str) -> None:
        super().__init__(f"{quantity}: {message}")
        self.quantity = quantity


class AmbiguousGeodesicError(PolarimetryError, ValueError):
    """Two consecutive path vertices are antipodal, so no unique great-circle arc joins them."""


class ConfigError(PolarimetryError):
    """The settings file is malformed."""


class TraceFormatError(PolarimetryError):
    """A trace CSV or path file cannot be parsed."""
