"""Log-concave density estimation on the real line."""

from .active_set import FitReport, fit
from .density import PiecewiseLogLinear, StepCdf, WeightedSample, hellinger_sq, kl_div, tv_distance
from .errors import DomainError, ExistenceError, InputError, SolverError

__version__ = "0.1.0"
