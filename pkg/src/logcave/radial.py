"""Spherically symmetric density estimate built from the norms of the data.

With Z_i = ||X_i|| and h the log-concave fit of the Z_i, the estimate is

    f(x) = h(||x||) / (c_d ||x||^(d-1)),   f(0) = 0,

where c_d = 2 pi^(d/2) / Gamma(d/2) is the surface area of the unit sphere.
Only the norms enter the solver, so the cost does not depend on d.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .active_set import FitReport, fit
from .density import PiecewiseLogLinear, WeightedSample
from .errors import DomainError, ExistenceError, InputError

__all__ = ["RadialDensity", "log_sphere_area", "radial_fit", "radial_evaluate"]


def log_sphere_area(d):
    """log c_d, the log surface area of the unit sphere in R^d."""
    if d < 1:
        raise DomainError("dimension must be at least 1")
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - float(gammaln(0.5 * d))


@dataclass(frozen=True)
class RadialDensity:
    dim: int
    h: PiecewiseLogLinear
    log_cd: float
    fit: FitReport

    @property
    def c_d(self):
        return math.exp(self.log_cd)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InputError(f"points must have {self.dim} coordinates")
        r = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.h.logpdf(r) - self.log_cd - (self.dim - 1) * np.log(r)
        out = np.where(r > 0, out, -np.inf)
        return out if out.ndim else float(out)

    def evaluate(self, x):
        return np.exp(self.logpdf(x))

    __call__ = evaluate


def radial_fit(points):
    """Fit the radial estimate to an (n, d) array of observations."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise DomainError("points must be an (n, d) array with d >= 1")
    if not np.all(np.isfinite(X)):
        raise InputError("points contain non-finite values")
    norms = np.linalg.norm(X, axis=1)
    if not np.any(norms > 0):
        raise ExistenceError("all observations are zero")
    sample = WeightedSample.from_data(norms)
    if sample.n < 2:
        raise ExistenceError(
            "all observations have the same norm, so the norm sample sits on a "
            "single point and the likelihood is unbounded"
        )
    report = fit(sample)
    return RadialDensity(X.shape[1], report.density, log_sphere_area(X.shape[1]), report)


def radial_evaluate(rd, x):
    return rd.evaluate(x)
