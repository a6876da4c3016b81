"""Gaussian smoothing of a log-concave fit that restores the sample variance.

The fitted density keeps the sample mean but has a smaller variance.
Convolving it with N(0, A), where A is the variance deficit, gives a smooth
log-concave density supported on the whole line whose first two moments
equal those of the data.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .active_set import FitReport
from .density import PiecewiseLogLinear, WeightedSample

__all__ = ["SmoothedDensity", "smooth", "smoothed_evaluate"]

log = logging.getLogger(__name__)


def _log_ndtr_diff(hi, lo):
    """log(Phi(hi) - Phi(lo)) for hi > lo, computed in the thinner tail."""
    flip = lo > 0
    a = np.where(flip, -lo, hi)
    b = np.where(flip, -hi, lo)
    la = log_ndtr(a)
    lb = log_ndtr(b)
    d = lb - la
    with np.errstate(divide="ignore"):
        tail = np.where(d > -0.693, np.log(-np.expm1(d)), np.log1p(-np.exp(d)))
    return la + tail


@dataclass(frozen=True)
class SmoothedDensity:
    """A piecewise log-linear density convolved with N(0, bandwidth_var)."""

    base: PiecewiseLogLinear
    bandwidth_var: float

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.bandwidth_var <= 0:
            return self.base.logpdf(x)
        var = self.bandwidth_var
        sd = np.sqrt(var)
        xk = self.base.knots[:-1]
        a = self.base.logvals[:-1]
        b = self.base.slopes
        width = np.diff(self.base.knots)
        z = np.atleast_1d(x)[:, None] - xk[None, :]
        centre = z + b * var
        terms = (a + b * z + 0.5 * b * b * var
                 + _log_ndtr_diff((width - centre) / sd, -centre / sd))
        out = logsumexp(terms, axis=1)
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def evaluate(self, x):
        return np.exp(self.logpdf(x))

    __call__ = evaluate

    def moments(self):
        mean, var = self.base.moments()
        return mean, var + self.bandwidth_var


def smooth(fitted, sample=None):
    """Smoothed estimate from a fit and the sample it was fitted to.

    Parameters
    ----------
    fitted : FitReport or PiecewiseLogLinear
    sample : WeightedSample, optional
        Defaults to ``fitted.sample`` for a :class:`FitReport`.
    """
    if isinstance(fitted, FitReport):
        base = fitted.density
        sample = fitted.sample if sample is None else sample
    else:
        base = fitted
    if sample is None:
        raise ValueError("a sample is needed to compute the variance deficit")
    if not isinstance(sample, WeightedSample):
        sample = WeightedSample.from_data(sample)
    deficit = sample.variance() - base.moments()[1]
    if deficit < 0:
        if deficit < -1e-8:
            log.warning("negative variance deficit %.3g clamped to zero", deficit)
        deficit = 0.0
    return SmoothedDensity(base, float(deficit))


def smoothed_evaluate(s, x):
    return s.evaluate(x)
