"""Exception types raised across the package."""


class SudocsError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(SudocsError, ValueError):
    pass


class ResampleExhaustedError(SudocsError, RuntimeError):
    pass


class InvalidDensityError(SudocsError, ValueError):
    pass


class InvalidVarianceError(SudocsError, ValueError):
    pass


class DivisionGuardError(SudocsError, ZeroDivisionError):
    pass


class ConfigurationError(SudocsError, ValueError):
    pass


class FitDegenerateError(SudocsError, ValueError):
    pass


class DivergenceError(SudocsError, ArithmeticError):
    """A non-finite value appeared in an iterative solver.

    The offending iteration index is kept in ``iteration``.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
