"""Exception types shared across the package."""


class ModeNetsError(Exception):
    """Base class for all package errors."""


class InvalidPartitionError(ModeNetsError, ValueError):
    """Mode partition is not a disjoint cover of the tensor's modes."""


class InsufficientDataError(ModeNetsError, ValueError):
    """Too few effective samples for the requested estimate."""


class InvalidStatsError(ModeNetsError, ValueError):
    """Mode statistics violate their contract (shape, symmetry, PSD)."""


class InvalidModelError(ModeNetsError, ValueError):
    """Model pieces are inconsistent (dimension mismatch, non-PD psi)."""


class DataFormatError(ModeNetsError, ValueError):
    """On-disk data could not be parsed or fails validation."""


class NumericError(ModeNetsError, ArithmeticError):
    """A numeric routine failed beyond its documented fallbacks."""
