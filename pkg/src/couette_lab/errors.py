"""Exception types shared across the package.

The CLI maps :class:`ConfigError` to exit code 1 and :class:`NumericalError`
to exit code 2.
"""


class CouetteLabError(Exception):
    """Base class for all package errors."""


class ConfigError(CouetteLabError, ValueError):
    """Invalid parameters or configuration."""


class NumericalError(CouetteLabError, ArithmeticError):
    """A solve, step or fit could not be completed."""


class WindowNotFound(NumericalError):
    """A decay fit found too few samples inside its window."""
