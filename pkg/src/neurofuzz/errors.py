"""Exception hierarchy shared across the package."""


class NeurofuzzError(Exception):
    """Base class for all neurofuzz errors."""


class InvalidParameterError(NeurofuzzError, ValueError):
    """A parameter, configuration value, or argument violates its contract."""


class DataError(NeurofuzzError, ValueError):
    """A dataset or file failed validation (bad cell, ragged row, missing file...)."""


class DegenerateInputError(NeurofuzzError, ArithmeticError):
    """Every rule's firing strength underflowed to zero for some input point."""


class SingularSystemError(NeurofuzzError, ArithmeticError):
    """The least-squares normal equations are rank deficient with zero ridge."""


class NumericalError(NeurofuzzError, ArithmeticError):
    """Training produced a non-finite loss or gradient."""
