"""Exception hierarchy shared across the package."""


class SnmError(Exception):
    """Base class for all errors raised by smoothmatch."""


class InvalidInputError(SnmError, ValueError):
    """Malformed data, grids or arguments."""


class ConfigurationError(InvalidInputError):
    """Missing or unknown configuration values."""


class NumericalError(SnmError, ArithmeticError):
    """A linear-algebra or sampling step could not be completed."""


class DivergenceError(NumericalError):
    """An ODE trajectory left the finite range."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
