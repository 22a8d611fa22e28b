"""
Error handling infrastructure for the OPUC toolkit.

Defines the error type hierarchy and the classification the runner turns
into exit codes.
"""

from enum import Enum
from typing import Optional


class ErrorType(Enum):
    """Error classification for exit codes."""
    VALIDATION = "VALIDATION"            # Bad input or unmet precondition, exit 1
    NUMERICAL_GUARD = "NUMERICAL_GUARD"  # A numerical guard tripped, exit 2


class OpucError(Exception):
    """Base exception for all toolkit errors."""

    def __init__(self, message: str, error_code: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.__class__.__name__


class ValidationError(OpucError):
    """
    Input that can never succeed as given.

    Examples:
    - Malformed config file
    - Unknown subcommand
    - Precondition of an operation not met
    """
    pass


class NumericalGuardError(OpucError):
    """
    A numerical safety guard refused to produce a result.

    Examples:
    - Moment order beyond the anti-aliasing limit
    - Ill-conditioned Toeplitz matrix
    - Grid too coarse for the polynomial degree
    """
    pass


# Validation errors

class ConfigError(ValidationError):
    """Config file missing, unparsable or rejected by its schema."""
    pass


class UnknownSubcommandError(ValidationError):
    """Requested subcommand is not registered."""
    pass


class PreconditionError(ValidationError):
    """An operation was called outside its domain."""
    pass


class CoefficientOutOfDiskError(ValidationError):
    """A Verblunsky coefficient with |alpha| >= 1."""
    pass


# Numerical guards

class AliasingError(NumericalGuardError):
    """Moment order too large for the measure grid."""
    pass


class ConditioningError(NumericalGuardError):
    """Gram/Toeplitz matrix too close to singular."""
    pass


class ResolutionGuardError(NumericalGuardError):
    """Grid too coarse for the requested polynomial degree."""
    pass


class ScaleGuardError(NumericalGuardError):
    """Interval shorter than n^(-1/(2+kappa)) in the interval comparison."""
    pass


class InfiniteEnergyError(NumericalGuardError):
    """A measure with atoms was passed where finite energy is required."""
    pass


class ResourceExhaustedError(NumericalGuardError):
    """Requested grid does not fit in the memory budget."""
    pass


class InvariantViolationError(NumericalGuardError):
    """An internal invariant failed (e.g. nonpositive Pruefer radius factor)."""
    pass
