"""Exception hierarchy shared by the library and the command line."""


class TanimotoError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TanimotoError, ValueError):
    """Input data or parameters violate a precondition."""


class NumericalError(TanimotoError, ArithmeticError):
    """A numerical routine failed (factorization, non-finite result)."""
