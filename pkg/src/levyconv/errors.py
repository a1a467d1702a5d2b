"""Exception hierarchy shared by all modules."""


class LevyConvError(Exception):
    """Base class for errors raised by levyconv."""


class InvalidInputError(LevyConvError, ValueError):
    """An argument is outside the domain of the operation."""


class SingularityError(LevyConvError, ArithmeticError):
    """A negative power or inverse was requested of a non-invertible generator."""


class ResolutionError(LevyConvError, ValueError):
    """A sampled function is too coarse for the requested projection order."""


class ResourceError(LevyConvError, MemoryError):
    """The requested lattice does not fit in the memory budget.

    ``max_feasible`` carries the largest grid order that would fit.
    """

    def __init__(self, message, max_feasible=None):
        super().__init__(message)
        self.max_feasible = max_feasible


class ConfigurationError(LevyConvError, ValueError):
    """A scenario or run configuration is inconsistent."""


class HypothesisError(ConfigurationError):
    """An experiment was asked to run outside the hypotheses it embodies."""
