"""Exception types shared across the package."""


class HmmSnnError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HmmSnnError, ValueError):
    """Arguments violate an operation's preconditions."""


class FormatError(HmmSnnError):
    """A file on disk does not match the expected format."""


class DegenerateComponentError(HmmSnnError, ArithmeticError):
    """A mixture component collected (numerically) no responsibility."""
