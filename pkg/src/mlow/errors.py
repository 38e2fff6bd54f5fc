"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 2, data or
runtime problems exit 3.
"""


class MlowError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MlowError, ValueError):
    """Malformed argument: wrong shape, non-finite values, bad range."""


class InvalidRankError(InvalidInputError):
    """Requested component count exceeds what the data supports."""


class InvalidMethodError(InvalidInputError):
    """Operation called with a component matrix of the wrong method."""


class InsufficientDataError(MlowError):
    """Series too short for the requested windows or splits."""


class NumericalError(MlowError):
    """Linear-algebra failure (non-convergence, persistent non-finite values)."""


class CsvParseError(MlowError):
    """CSV cell or row that cannot be parsed; carries its location."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column!r})" if column else ")")
        super().__init__(message + where)
