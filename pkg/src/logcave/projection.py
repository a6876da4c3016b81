"""Checks and closed-form cases for log-concave projections on the line.

* :func:`verify_characterization` tests the integrated-CDF optimality
  condition of a candidate projection against an arbitrary distribution.
* :func:`pareto_projection` gives the Laplace projection of a symmetrized
  Pareto law.
* :func:`rho` and :func:`marshall_check` implement the Marshall-type bound
  relating the fitted and empirical CDF errors for one-piece truths.
* :func:`mallows_counterexample` and :func:`mixture_affine_piece` reproduce the
  two-sided counterexample to weak continuity and the affine bridge of a
  bimodal mixture.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .active_set import fit
from .density import PiecewiseLogLinear, StepCdf, WeightedSample, l1_distance
from .errors import DomainError, ExistenceError

__all__ = [
    "CharacterizationReport",
    "verify_characterization",
    "SymmetricPareto",
    "LaplaceProjection",
    "pareto_projection",
    "rho",
    "kaffine_density",
    "kappa_star",
    "MarshallResult",
    "marshall_check",
    "sup_cdf_distance",
    "ks_distance",
    "mallows_counterexample",
    "mixture_affine_piece",
]

TRUNCATION_MASS = 1e-12


# -- integrated CDF characterization ---------------------------------------------


@dataclass(frozen=True)
class CharacterizationReport:
    max_excess: float
    argmax: float
    knot_residual: float
    infinity_residual: float
    tol: float
    passed: bool

    def to_dict(self):
        return {
            "max_excess": self.max_excess,
            "argmax": self.argmax,
            "knot_residual": self.knot_residual,
            "infinity_residual": self.infinity_residual,
            "tol": self.tol,
            "pass": self.passed,
        }


def _stationary_points(d, F, a, b, probes):
    """Zeros of d.cdf - F inside (a, b)."""
    if isinstance(F, StepCdf):
        level = float(F(0.5 * (a + b)))
        if level <= d.mass():
            x = float(d.quantile(min(level, 1.0)))
            if a < x < b:
                return [x]
        return []
    t = np.linspace(a, b, probes)
    g = d.cdf(t) - F.cdf(t)
    roots = []
    for i in np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0):
        roots.append(brentq(lambda s: d.cdf(s) - F.cdf(s), t[i], t[i + 1], xtol=1e-14))
    roots.extend(t[1:-1])
    return roots


def verify_characterization(d, F, tol=1e-6, kinks=None, probes=257):
    """Check that ``d`` is the log-concave projection of the law with CDF ``F``.

    With H(x) the integral of d.cdf - F over (-inf, x], the conditions are
    H <= 0 everywhere and H = 0 at the knots of d and at +infinity.

    Parameters
    ----------
    d : PiecewiseLogLinear
    F : StepCdf, PiecewiseLogLinear or SymmetricPareto
        Anything with ``cdf`` (or ``__call__`` for a step CDF),
        ``integrated_cdf``, ``mean`` and ``breakpoints``.
    tol : float
    kinks : array_like, optional
        Points where equality is required.  Defaults to every knot of d,
        endpoints included.  Pass the true kinks when d is a truncated stand-in
        for a density with unbounded support.
    probes : int
        Grid size per cell used to bracket stationary points of H when F is
        continuous.  For a step CDF the stationary points are exact quantiles.
    """
    if isinstance(F, PiecewiseLogLinear):
        breaks = F.knots
    else:
        breaks = np.asarray(F.breakpoints, dtype=float)
    lo, hi = d.support
    grid = np.union1d(d.knots, breaks[(breaks > lo) & (breaks < hi)])
    cands = list(grid)
    for a, b in zip(grid[:-1], grid[1:]):
        cands.extend(_stationary_points(d, F, a, b, probes))
    cands = np.asarray(cands)

    def H(x):
        return d.integrated_cdf(x) - F.integrated_cdf(x)

    h = H(cands)
    i = int(np.argmax(h))
    at_inf = float(F.mean() - d.moments()[0])
    # beyond the support H increases monotonically towards its limit
    max_excess = max(float(h[i]), at_inf)
    argmax = float(cands[i]) if h[i] >= at_inf else math.inf
    pts = d.knots if kinks is None else np.asarray(kinks, dtype=float)
    knot_res = float(np.max(np.abs(H(pts)))) if pts.size else 0.0
    knot_res = max(knot_res, abs(at_inf))
    passed = max_excess <= tol and knot_res <= tol
    return CharacterizationReport(max(max_excess, 0.0), argmax, knot_res, at_inf, tol, passed)


# -- symmetrized Pareto and its Laplace projection ---------------------------------


class SymmetricPareto:
    """Density alpha sigma^alpha / (2 (|x| + sigma)^(alpha + 1))."""

    breakpoints = (0.0,)

    def __init__(self, alpha, sigma):
        if sigma <= 0:
            raise DomainError("sigma must be positive")
        if alpha <= 1:
            raise ExistenceError("alpha <= 1: the law has no finite first moment")
        self.alpha = float(alpha)
        self.sigma = float(sigma)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a, s = self.alpha, self.sigma
        return a * s ** a / (2.0 * (np.abs(x) + s) ** (a + 1))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        tail = 0.5 * (self.sigma / (self.sigma + np.abs(x))) ** self.alpha
        return np.where(x <= 0, tail, 1.0 - tail)

    def integrated_cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, s = self.alpha, self.sigma
        tail = 0.5 * s ** a * (s + np.abs(x)) ** (1.0 - a) / (a - 1.0)
        return np.where(x <= 0, tail, x + tail)

    def mean(self):
        return 0.0


@dataclass(frozen=True)
class LaplaceProjection:
    """Laplace density (rate/2) exp(-rate |x|).

    ``density`` is the same function restricted to a symmetric interval
    holding all but ``mass_deficit`` of the mass.
    """

    rate: float
    density: PiecewiseLogLinear
    mass_deficit: float

    def pdf(self, x):
        return 0.5 * self.rate * np.exp(-self.rate * np.abs(np.asarray(x, dtype=float)))


def pareto_projection(alpha, sigma):
    """Log-concave projection of the symmetrized Pareto law (alpha, sigma)."""
    if alpha <= 1:
        raise ExistenceError(
            "alpha <= 1: the law has no finite first moment, so every "
            "log-concave candidate has log-likelihood -inf"
        )
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    rate = (alpha - 1.0) / sigma
    half = (math.log(1.0 / TRUNCATION_MASS) + 1.0) / rate
    top = math.log(0.5 * rate)
    d = PiecewiseLogLinear([-half, 0.0, half], [top - rate * half, top, top - rate * half])
    return LaplaceProjection(rate, d, math.exp(-rate * half))


# -- rho and the Marshall bound -------------------------------------------------------


def _exp_remainder3(x):
    """e^x - 1 - x - x^2/2 without cancellation."""
    if abs(x) < 2.0:
        term = x ** 3 / 6.0
        total = 0.0
        k = 3
        while abs(term) > 1e-18 * abs(total) or total == 0.0:
            total += term
            k += 1
            term *= x / k
            if k > 60:
                break
        return total
    return math.expm1(x) - x - 0.5 * x * x


def _rho_scalar(x):
    if abs(x) < 1e-4:
        return 2.0 + x / 4.0 + 3.0 * x * x / 80.0 + x ** 3 / 320.0
    if x > 700.0:
        return x - 1.0
    # rho(x) = (x - 1) + x^3 / (2 (e^x - 1 - x - x^2/2))
    return (x - 1.0) + x ** 3 / (2.0 * _exp_remainder3(x))


def rho(x):
    """The Marshall constant rho(x) = (2e^x(x-1) - x^2 + 2)/(2e^x - 2 - 2x - x^2), rho(0) = 2.

    Evaluated through the Taylor remainder of e^x so that neither numerator
    nor denominator cancels near zero.
    """
    if np.ndim(x) == 0:
        return _rho_scalar(float(x))
    return np.vectorize(_rho_scalar, otypes=[float])(x)


def kappa_star(alpha, s1, s2):
    return 0.0 if alpha == 0 else alpha * (s2 - s1)


def kaffine_density(k, params):
    """A member of the k-affine class as a :class:`PiecewiseLogLinear`.

    For k = 1, ``params = (alpha, s1, s2)`` describes the density proportional
    to exp(alpha x) on [s1, s2]; an infinite endpoint (allowed only on the
    side where the density decays) is cut where the remaining mass is 1e-12.
    For k >= 2, ``params = (knots, logvals)`` and the result is normalized.
    """
    if k == 1:
        alpha, s1, s2 = (float(v) for v in params)
        if not s1 < s2:
            raise DomainError("need s1 < s2")
        if alpha == 0:
            if not (math.isfinite(s1) and math.isfinite(s2)):
                raise DomainError("a uniform density needs a bounded interval")
            return PiecewiseLogLinear([s1, s2], [-math.log(s2 - s1)] * 2)
        if math.isinf(s1) and alpha <= 0 or math.isinf(s2) and alpha >= 0:
            raise DomainError("infinite endpoint on the side where exp(alpha x) grows")
        if math.isinf(s1) and math.isinf(s2):
            raise DomainError("at most one endpoint may be infinite")
        cut = math.log(1.0 / TRUNCATION_MASS) / abs(alpha)
        if math.isinf(s2):
            s2 = s1 + cut
            top = math.log(-alpha)
            return PiecewiseLogLinear([s1, s2], [top, top + alpha * (s2 - s1)])
        if math.isinf(s1):
            s1 = s2 - cut
            top = math.log(alpha)
            return PiecewiseLogLinear([s1, s2], [top - alpha * (s2 - s1), top])
        # log of alpha / (e^{alpha s2} - e^{alpha s1}) e^{alpha x} at x = s1
        width = s2 - s1
        lognorm = math.log(abs(alpha)) - math.log(abs(math.expm1(alpha * width)))
        return PiecewiseLogLinear([s1, s2], [lognorm, lognorm + alpha * width])
    knots, logvals = params
    if len(knots) != k + 1:
        raise DomainError(f"a {k}-affine density needs {k + 1} knots")
    d = PiecewiseLogLinear.normalized(knots, logvals)
    if not d.is_concave():
        raise DomainError("log-density is not concave")
    return d


def sup_cdf_distance(d1, d2):
    """sup_x |F1(x) - F2(x)| for two piecewise log-linear densities, exactly.

    On each cell of the merged knot grid the difference of densities changes
    sign at most once, so the extrema of F1 - F2 are at cell ends or at that
    crossing.
    """
    grid = np.union1d(d1.knots, d2.knots)
    cands = [grid]
    a, b = grid[:-1], grid[1:]
    mid = 0.5 * (a + b)
    in1 = (mid > d1.knots[0]) & (mid < d1.knots[-1])
    in2 = (mid > d2.knots[0]) & (mid < d2.knots[-1])
    both = in1 & in2
    if np.any(both):
        k1 = d1._locate(mid[both])
        k2 = d2._locate(mid[both])
        l1 = d1.logvals[k1] + d1.slopes[k1] * (a[both] - d1.knots[k1])
        l2 = d2.logvals[k2] + d2.slopes[k2] * (a[both] - d2.knots[k2])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (l2 - l1) / (d1.slopes[k1] - d2.slopes[k2])
        ok = np.isfinite(t) & (t > 0) & (t < (b - a)[both])
        cands.append(a[both][ok] + t[ok])
    x = np.concatenate(cands)
    return float(np.max(np.abs(d1.cdf(x) - d2.cdf(x))))


def ks_distance(sample, d):
    """sup_x |G(x) - F(x)| for the step CDF G of ``sample`` and continuous F of ``d``."""
    G = StepCdf(sample)
    z = sample.points
    F = d.cdf(z)
    return float(max(np.max(np.abs(G(z) - F)), np.max(np.abs(G.left_limit(z) - F))))


@dataclass(frozen=True)
class MarshallResult:
    lhs: float
    rhs: float
    kappa: float
    rho: float
    passed: bool


def marshall_check(truth, draws, fitted=None, slack=1e-9):
    """Check sup|F_hat - F0| <= rho(|kappa|) sup|F_n - F0| on one sample.

    Parameters
    ----------
    truth : tuple
        (alpha, s1, s2) of a one-piece log-linear density.
    draws : array_like
        Observations from the truth.
    fitted : FitReport, optional
        Fit of ``draws``; computed if omitted.
    """
    alpha = float(truth[0])
    f0 = kaffine_density(1, truth)
    sample = WeightedSample.from_data(draws)
    if fitted is None:
        fitted = fit(sample)
    kappa = alpha * (sample.points[-1] - sample.points[0])
    r = rho(abs(kappa))
    lhs = sup_cdf_distance(fitted.density, f0)
    rhs = r * ks_distance(sample, f0)
    return MarshallResult(lhs, rhs, kappa, r, lhs <= rhs + slack)


# -- counterexamples --------------------------------------------------------------------


def mallows_sample(n):
    """(1 - 1/n) U{-1, 1} + (1/n) U{-(n+1), n+1} as a weighted sample."""
    if n < 2:
        raise DomainError("n must be at least 2")
    outer = 0.5 / n
    inner = 0.5 * (1.0 - 1.0 / n)
    return WeightedSample(
        np.array([-(n + 1.0), -1.0, 1.0, n + 1.0]),
        np.array([outer, inner, inner, outer]),
    )


def mallows_counterexample(n):
    """L1 distance between the projection of the contaminated law and U[-1, 1]."""
    d = fit(mallows_sample(n)).density
    return l1_distance(d, PiecewiseLogLinear([-1.0, 1.0], [-math.log(2.0)] * 2))


def mixture_sample(grid_size=2001, lo=-8.0, hi=8.0, weights=(0.7, 0.3), means=(-1.5, 1.5)):
    """Grid discretization of a two-component normal mixture with unit variances."""
    x = np.linspace(lo, hi, grid_size)
    f = sum(w * norm.pdf(x, loc=m) for w, m in zip(weights, means))
    return WeightedSample(x, f / f.sum())


def mixture_affine_piece(point=0.0, **kwargs):
    """Knot interval of the projected mixture's log-density that contains ``point``."""
    d = fit(mixture_sample(**kwargs)).density
    k = int(np.clip(np.searchsorted(d.knots, point, side="right") - 1, 0, d.knots.size - 2))
    return float(d.knots[k]), float(d.knots[k + 1])
