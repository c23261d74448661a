"""Exception types shared across the package."""


class RwaError(Exception):
    """Base class for all package errors."""


class UsageError(RwaError, ValueError):
    """Bad argument: out-of-range index, unknown id, unsupported option."""


class DomainError(RwaError, ValueError):
    """Argument outside the mathematical domain of a function."""


class SingularityError(RwaError, ArithmeticError):
    """A singular potential was evaluated at (or too close to) zero separation."""


class DivergenceError(RwaError):
    """The un-renormalized RWA integral diverges for this potential."""


class UnsupportedError(RwaError):
    """The operation has no implementation for this potential family."""


class NotApplicableError(RwaError):
    """The potential has no collision picture (bounded at the origin)."""


class ValidityError(RwaError):
    """The collision is not short enough for the renormalized closed forms."""


class IndeterminateError(RwaError):
    """A fitted quantity could not be determined from the data."""


class ConfigError(RwaError, ValueError):
    """Malformed or invalid run configuration."""
