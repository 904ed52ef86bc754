"""Exception and warning types raised across the package."""


class GraphFdrError(Exception):
    """Base class for errors raised by graphfdr."""


class DegenerateDenominator(GraphFdrError, ArithmeticError):
    """A debiasing denominator (or a covariance diagonal) vanished."""


class DegenerateVariance(GraphFdrError, ArithmeticError):
    """An edge has zero estimated standard deviation.

    The offending pair is available as ``edge``.
    """

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class BudgetExceeded(GraphFdrError):
    """Enumeration produced more objects than the configured cap."""


class NotAForest(GraphFdrError, ValueError):
    """The exact tree sampler was handed a graph containing a cycle."""


class CholeskyFailure(GraphFdrError, ArithmeticError):
    """A matrix that should be symmetric positive definite is not."""


class NonConvergence(UserWarning):
    """Iterative solver hit its iteration cap before meeting tolerance."""
