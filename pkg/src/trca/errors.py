"""Exception hierarchy shared by every module."""


class TrcaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TrcaError, ValueError):
    """Invalid configuration or arguments (CLI exit code 2)."""


class DataError(TrcaError, ValueError):
    """Input data that cannot be used as given (CLI exit code 3)."""


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DimensionError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class InputError(DataError):
    """A caller-supplied name or set does not match the object it refers to."""


class GenerationError(TrcaError):
    """The simulator could not satisfy the requested constraints."""


class ContractViolation(TrcaError):
    """A fixer callback broke its contract (wrong shape or new anomalies)."""
