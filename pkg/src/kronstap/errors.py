"""Exception types shared across the package.

The CLI maps KronStapError to the data-error exit status, so anything
raised while validating user supplied matrices, files or configs should
derive from it.
"""


class KronStapError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(KronStapError):
    """Shapes or ranks incompatible with the requested operation."""


class DataError(KronStapError):
    """Malformed input data, on-disk or in-memory."""


class ConfigError(DataError):
    """Bad scene or sweep configuration, carries a line number."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DegenerateInputError(KronStapError):
    """Input collapsed to something the algorithm cannot iterate on."""
