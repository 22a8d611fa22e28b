"""
Error classifier for the runner's exit codes.

Classifies exceptions into VALIDATION or NUMERICAL_GUARD and derives a
stable error code for the error artifact.
"""

import logging
import re

import pydantic

from opuc.errors import (
    ErrorType,
    OpucError,
    ValidationError,
    NumericalGuardError,
)

logger = logging.getLogger(__name__)


class ErrorClassifier:
    """
    Classifies exceptions to determine the exit code.

    Classification Rules:
    - VALIDATION (exit 1): toolkit ValidationError, pydantic validation failures
    - NUMERICAL_GUARD (exit 2): toolkit NumericalGuardError, floating point errors
    - Unknown exceptions default to NUMERICAL_GUARD
    """

    EXIT_CODES = {
        ErrorType.VALIDATION: 1,
        ErrorType.NUMERICAL_GUARD: 2,
    }

    def classify(self, exception: Exception) -> ErrorType:
        """
        Classify exception into error type.

        Args:
            exception: The exception to classify

        Returns:
            ErrorType enum value
        """
        if isinstance(exception, ValidationError):
            return ErrorType.VALIDATION
        elif isinstance(exception, NumericalGuardError):
            return ErrorType.NUMERICAL_GUARD

        if isinstance(exception, pydantic.ValidationError):
            return ErrorType.VALIDATION

        if isinstance(exception, (FloatingPointError, OverflowError, ZeroDivisionError)):
            return ErrorType.NUMERICAL_GUARD

        logger.debug(f"Unknown exception type {type(exception).__name__}, defaulting to NUMERICAL_GUARD")
        return ErrorType.NUMERICAL_GUARD

    def exit_code(self, exception: Exception) -> int:
        """Process exit code for an exception."""
        return self.EXIT_CODES[self.classify(exception)]

    def get_error_code(self, exception: Exception) -> str:
        """
        Extract or generate error code from exception.

        Args:
            exception: The exception to extract code from

        Returns:
            Error code string (e.g., "CONDITIONING", "ALIASING")
        """
        if isinstance(exception, OpucError) and exception.error_code != exception.__class__.__name__:
            return exception.error_code

        exception_name = exception.__class__.__name__

        # CamelCase to UPPER_SNAKE_CASE
        error_code = re.sub(r'(?<!^)(?=[A-Z])', '_', exception_name).upper()

        # Drop "EXCEPTION" or "ERROR" suffix
        error_code = re.sub(r'_(EXCEPTION|ERROR)$', '', error_code)

        return error_code
