"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, any DataError -> 3,
NumericalError -> 4.
"""


class AuditError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AuditError):
    """Invalid or missing configuration."""


class DataError(AuditError):
    """Base class for problems with input data."""


class ParseError(DataError):
    """Malformed file content. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ShapeError(DataError):
    """Inconsistent embedding geometry."""


class ValidationError(DataError):
    """Data violates an invariant (non-finite value, duplicate id, imbalance...)."""


class NumericalError(AuditError):
    """Numerical failure during fitting or scoring."""


class DegenerateDataError(NumericalError):
    """Inputs make the requested computation meaningless (all-identical scores,
    zero-norm embedding rows, single-class training data)."""
