"""Exception types raised by the estimators."""


class LogcaveError(Exception):
    """Base class for all package errors."""


class DomainError(LogcaveError, ValueError):
    """An argument lies outside the domain of the operation."""


class InputError(LogcaveError, ValueError):
    """Malformed input data (non-finite values, bad weights, wrong shape)."""


class ExistenceError(LogcaveError, ValueError):
    """The log-concave maximum likelihood problem has no solution.

    Raised when the data are concentrated on a single point (the likelihood
    is unbounded above) or when the target distribution has no finite first
    moment (every candidate has log-likelihood minus infinity).
    """


class InfeasibleIterate(LogcaveError, ArithmeticError):
    """An exponent exceeded the overflow guard; the iterate is unusable."""


class SolverError(LogcaveError, RuntimeError):
    """An iterative solver failed to converge.

    ``best`` carries the last usable iterate, if any, so callers can inspect
    how far the solver got.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
