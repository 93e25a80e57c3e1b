"""Exception hierarchy shared by every module."""


class GPLinCCError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(GPLinCCError, ValueError):
    """Raised when inputs violate a documented precondition."""


class NumericError(GPLinCCError, ArithmeticError):
    """Raised when a factorization or other numerical step fails."""


class RankError(NumericError):
    """Raised when a matrix that must be full rank is not."""


class FittingError(NumericError):
    """Raised when hyperparameter fitting fails for every start."""
