"""Exception types shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericError -> 3.
"""


class TripletQAError(Exception):
    """Base class for package errors."""


class UsageError(TripletQAError):
    """Invalid flag combination or argument value."""


class DataError(TripletQAError):
    """Malformed or inconsistent input data."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(TripletQAError):
    """Non-finite values or shape mismatches during numeric work."""
