"""Piecewise log-linear densities, weighted samples and their exact functionals.

A :class:`PiecewiseLogLinear` stores a concave log-density by its values at a
strictly increasing set of knots; between knots the log-density is linear and
outside ``[knots[0], knots[-1]]`` it is minus infinity.  Masses, CDF values,
moments and distances are computed segment by segment in closed form.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError
from .jfun import j_partials, j_value

__all__ = [
    "PiecewiseLogLinear",
    "WeightedSample",
    "StepCdf",
    "tv_distance",
    "hellinger_sq",
    "kl_div",
]

CONCAVITY_TOL = 1e-9
NORMALIZATION_TOL = 1e-8


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PiecewiseLogLinear:
    """A density exp(phi) with phi linear between consecutive knots.

    Parameters
    ----------
    knots : array_like of shape (m,)
        Strictly increasing, finite, m >= 2.
    logvals : array_like of shape (m,)
        Log-density at the knots.

    Construction only checks the shape of the input; use :meth:`is_concave`
    and :meth:`mass` (or :meth:`validate`) for the density invariants.
    """

    knots: np.ndarray
    logvals: np.ndarray
    slopes: np.ndarray = field(init=False, repr=False)
    _masses: np.ndarray = field(init=False, repr=False)
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = _readonly(self.knots)
        phi = _readonly(self.logvals)
        if x.ndim != 1 or x.shape != phi.shape or x.size < 2:
            raise InputError("knots and logvals must be 1-D arrays of equal length >= 2")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(phi)):
            raise InputError("knots and logvals must be finite")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise InputError("knots must be strictly increasing")
        masses = dx * j_value(phi[:-1], phi[1:])
        object.__setattr__(self, "knots", x)
        object.__setattr__(self, "logvals", phi)
        object.__setattr__(self, "slopes", _readonly(np.diff(phi) / dx))
        object.__setattr__(self, "_masses", _readonly(masses))
        object.__setattr__(self, "_cum", _readonly(np.concatenate([[0.0], np.cumsum(masses)])))

    @classmethod
    def normalized(cls, knots, logvals):
        """Build a density after shifting ``logvals`` so the total mass is one."""
        raw = cls(knots, logvals)
        return cls(raw.knots, raw.logvals - np.log(raw.mass()))

    # -- invariants -------------------------------------------------------

    @property
    def support(self):
        return float(self.knots[0]), float(self.knots[-1])

    def mass(self):
        return float(self._cum[-1])

    def is_concave(self, tol=CONCAVITY_TOL):
        return bool(np.all(np.diff(self.slopes) <= tol))

    def validate(self, concavity_tol=CONCAVITY_TOL, mass_tol=NORMALIZATION_TOL):
        if not self.is_concave(concavity_tol):
            raise DomainError("log-density is not concave")
        if abs(self.mass() - 1.0) > mass_tol:
            raise DomainError(f"density integrates to {self.mass()!r}, not 1")
        return self

    def kinks(self, tol=1e-12):
        """Interior knots where the slope strictly decreases."""
        drop = -np.diff(self.slopes)
        return self.knots[1:-1][drop > tol]

    def tail_envelope(self):
        """Constants (alpha, beta) with f(x) <= exp(-alpha |x| + beta) for all x.

        ``alpha`` is the smaller absolute outermost slope.  Since
        phi(x) + alpha |x| is piecewise linear on the support, ``beta`` is its
        maximum over the knots and the origin.
        """
        alpha = float(min(abs(self.slopes[0]), abs(self.slopes[-1])))
        pts = self.knots
        if self.knots[0] < 0.0 < self.knots[-1]:
            pts = np.append(pts, 0.0)
        beta = float(np.max(self._logpdf(pts) + alpha * np.abs(pts)))
        return alpha, beta

    # -- pointwise ----------------------------------------------------------

    def _locate(self, x):
        k = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(k, 0, self.knots.size - 2)

    def _logpdf(self, x):
        x = np.asarray(x, dtype=float)
        k = self._locate(x)
        val = self.logvals[k] + self.slopes[k] * (x - self.knots[k])
        inside = (x >= self.knots[0]) & (x <= self.knots[-1])
        return np.where(inside, val, -np.inf)

    def logpdf(self, x):
        out = self._logpdf(x)
        return out if out.ndim else float(out)

    def evaluate(self, x):
        """Density value exp(phi(x)); zero outside the support."""
        out = np.exp(self._logpdf(x))
        return out if out.ndim else float(out)

    __call__ = evaluate

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.knots[0], self.knots[-1])
        k = self._locate(xc)
        h = xc - self.knots[k]
        part = h * j_value(self.logvals[k], self.logvals[k] + self.slopes[k] * h)
        out = self._cum[k] + part
        out = np.where(x < self.knots[0], 0.0, out)
        out = np.where(x >= self.knots[-1], self._cum[-1], out)
        return out if out.ndim else float(out)

    def integrated_cdf(self, x):
        """Integral of the CDF from -infinity to x."""
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.knots[0], self.knots[-1])
        dx = np.diff(self.knots)
        # integral of F over each full segment: dx*C_k + dx^2 * Jr
        jr = j_partials(self.logvals[:-1], self.logvals[1:])[0]
        seg = dx * self._cum[:-1] + dx * dx * jr
        cum_seg = np.concatenate([[0.0], np.cumsum(seg)])
        k = self._locate(xc)
        h = xc - self.knots[k]
        end = self.logvals[k] + self.slopes[k] * h
        pjr = j_partials(self.logvals[k], end)[0]
        out = cum_seg[k] + h * self._cum[k] + h * h * pjr
        out = np.where(x < self.knots[0], 0.0, out)
        out = out + np.where(x > self.knots[-1], (x - self.knots[-1]) * self._cum[-1], 0.0)
        return out if out.ndim else float(out)

    def quantile(self, p):
        """Inverse CDF by per-segment logarithmic inversion."""
        p = np.asarray(p, dtype=float)
        if np.any(~(p >= -1e-12) | ~(p <= 1.0 + 1e-12)):
            raise DomainError("quantile levels must lie in [0, 1]")
        p = np.clip(p, 0.0, 1.0)
        k = np.searchsorted(self._cum, p, side="right") - 1
        k = np.clip(k, 0, self.knots.size - 2)
        m = p - self._cum[k]
        s = self.slopes[k]
        dx = self.knots[k + 1] - self.knots[k]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            base = m * np.exp(-self.logvals[k])
            y = s * base
            ratio = np.where(y == 0.0, 1.0, np.log1p(np.maximum(y, -1.0)) / y)
            h = np.where(y <= -1.0, dx, base * ratio)
        h = np.clip(np.nan_to_num(h, nan=0.0, posinf=0.0), 0.0, dx)
        out = self.knots[k] + h
        return out if out.ndim else float(out)

    def draw(self, n, seed=None):
        """``n`` i.i.d. draws by inverse-CDF sampling; deterministic given ``seed``."""
        if n < 1:
            raise DomainError("n must be at least 1")
        rng = np.random.default_rng(seed)
        u = rng.uniform(0.0, self.mass(), size=n)
        return self.quantile(np.clip(u, 0.0, 1.0))

    # -- moments ------------------------------------------------------------

    def _piece_moments(self):
        """Per-segment integrals of 1, (x - x_k), (x - x_k)^2 against f."""
        dx = np.diff(self.knots)
        _, js, _, _, jss = j_partials(self.logvals[:-1], self.logvals[1:])
        return self._masses, dx * dx * np.asarray(js), dx ** 3 * np.asarray(jss)

    def moments(self):
        """Exact mean and variance.  Assumes the density is normalized."""
        m0, m1, m2 = self._piece_moments()
        left = self.knots[:-1]
        total = m0.sum()
        mean = float((left * m0 + m1).sum() / total)
        c = left - mean
        var = float((c * c * m0 + 2.0 * c * m1 + m2).sum() / total)
        return mean, var

    def mean(self):
        return self.moments()[0]

    def to_dict(self):
        return {"knots": self.knots.tolist(), "log_density": self.logvals.tolist()}


@dataclass(frozen=True)
class WeightedSample:
    """Distinct sorted support points with positive weights summing to one."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        z = _readonly(self.points)
        w = _readonly(self.weights)
        if z.ndim != 1 or z.shape != w.shape or z.size < 1:
            raise InputError("points and weights must be non-empty 1-D arrays of equal length")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise InputError("points and weights must be finite")
        if np.any(np.diff(z) <= 0):
            raise InputError("points must be strictly increasing")
        if np.any(w <= 0):
            raise InputError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InputError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", z)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_data(cls, values, weights=None):
        """Sort the data and merge tied values into a single weighted point."""
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise InputError("no data")
        if not np.all(np.isfinite(values)):
            raise InputError("data contain non-finite values")
        if weights is None:
            weights = np.ones_like(values)
        else:
            weights = np.asarray(weights, dtype=float).ravel()
            if weights.shape != values.shape:
                raise InputError("weights and data differ in length")
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                raise InputError("weights must be positive and finite")
        pts, inv = np.unique(values, return_inverse=True)
        w = np.bincount(inv.ravel(), weights=weights, minlength=pts.size)
        return cls(pts, w / w.sum())

    @property
    def n(self):
        return self.points.size

    def mean(self):
        return float(np.dot(self.weights, self.points))

    def variance(self):
        c = self.points - self.mean()
        return float(np.dot(self.weights, c * c))

    def cdf(self):
        return StepCdf(self)


class StepCdf:
    """Right-continuous distribution function of a :class:`WeightedSample`."""

    def __init__(self, sample):
        self.sample = sample
        self.points = sample.points
        self._cum = np.cumsum(sample.weights)
        self._cum[-1] = 1.0
        self._cum_zw = np.cumsum(sample.weights * sample.points)

    @property
    def breakpoints(self):
        return self.points

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.points, x, side="right")
        out = np.where(k > 0, self._cum[np.maximum(k - 1, 0)], 0.0)
        return out if out.ndim else float(out)

    def left_limit(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.points, x, side="left")
        out = np.where(k > 0, self._cum[np.maximum(k - 1, 0)], 0.0)
        return out if out.ndim else float(out)

    def integrated_cdf(self, x):
        """Sum of w_i (x - z_i) over z_i <= x."""
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.points, x, side="right")
        idx = np.maximum(k - 1, 0)
        out = np.where(k > 0, x * self._cum[idx] - self._cum_zw[idx], 0.0)
        return out if out.ndim else float(out)

    def mean(self):
        return self.sample.mean()


# -- distances ----------------------------------------------------------------


def _common_cells(d1, d2):
    """Refinement grid of both knot sets with log-values of each density at the ends."""
    grid = np.union1d(d1.knots, d2.knots)
    a, b = grid[:-1], grid[1:]
    mid = 0.5 * (a + b)
    in1 = (mid > d1.knots[0]) & (mid < d1.knots[-1])
    in2 = (mid > d2.knots[0]) & (mid < d2.knots[-1])

    def ends(d, inside):
        k = d._locate(mid)
        lo = d.logvals[k] + d.slopes[k] * (a - d.knots[k])
        hi = d.logvals[k] + d.slopes[k] * (b - d.knots[k])
        return np.where(inside, lo, -np.inf), np.where(inside, hi, -np.inf), d.slopes[k]

    return a, b, in1, in2, ends(d1, in1), ends(d2, in2)


def _piece_mass(h, lo, hi):
    out = np.zeros_like(h)
    ok = np.isfinite(lo) & np.isfinite(hi)
    out[ok] = h[ok] * j_value(lo[ok], hi[ok])
    return out


def tv_distance(d1, d2):
    """Total variation distance, one half the L1 distance, in closed form.

    On each cell of the merged knot grid both log-densities are linear, so
    their difference changes sign at most once; the integral of |f1 - f2| is
    then a sum of exact segment masses.
    """
    return 0.5 * l1_distance(d1, d2)


def l1_distance(d1, d2):
    """Integral of |f1 - f2| in closed form."""
    a, b, in1, in2, (l1, h1, s1), (l2, h2, s2) = _common_cells(d1, d2)
    h = b - a
    only1 = in1 & ~in2
    only2 = in2 & ~in1
    both = in1 & in2
    total = _piece_mass(h, l1, h1)[only1].sum() + _piece_mass(h, l2, h2)[only2].sum()
    if np.any(both):
        h, l1, h1, s1, l2, h2, s2 = (v[both] for v in (h, l1, h1, s1, l2, h2, s2))
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = (l2 - l1) / (s1 - s2)
        split = np.isfinite(cross) & (cross > 0) & (cross < h)
        t = np.where(split, cross, h)
        m1 = t * j_value(l1, l1 + s1 * t)
        m2 = t * j_value(l2, l2 + s2 * t)
        first = np.abs(m1 - m2)
        r = h - t
        c1 = l1 + s1 * t
        c2 = l2 + s2 * t
        second = np.abs(r * j_value(c1, h1) - r * j_value(c2, h2))
        total += float(first.sum() + second.sum())
    return float(total)


def hellinger_sq(d1, d2):
    """Squared Hellinger distance, the integral of (sqrt f1 - sqrt f2)^2."""
    a, b, in1, in2, (l1, h1, _), (l2, h2, _) = _common_cells(d1, d2)
    both = in1 & in2
    h = (b - a)[both]
    affinity = float(_piece_mass(h, 0.5 * (l1[both] + l2[both]), 0.5 * (h1[both] + h2[both])).sum())
    return max(d1.mass() + d2.mass() - 2.0 * affinity, 0.0)


def kl_div(d1, d2):
    """Kullback-Leibler divergence of d2 from d1, the integral of f1 log(f1/f2).

    Returns ``inf`` when the support of d1 is not contained in that of d2.
    """
    lo1, hi1 = d1.support
    lo2, hi2 = d2.support
    if lo1 < lo2 or hi1 > hi2:
        return float("inf")
    a, b, in1, in2, (l1, h1, s1), (l2, h2, s2) = _common_cells(d1, d2)
    h = (b - a)[in1]
    l1, h1, s1, l2, s2 = l1[in1], h1[in1], s1[in1], l2[in1], s2[in1]
    # integrand (dl + ds*u) exp(l1 + s1 u) on [0, h]
    dl = l1 - l2
    ds = s1 - s2
    _, js, _, _, _ = j_partials(l1, h1)
    val = dl * h * j_value(l1, h1) + ds * h * h * np.asarray(js)
    return max(float(val.sum()), 0.0)
