"""The exponential segment integral J(r, s) and its derivatives.

J(r, s) is the integral over t in [0, 1] of exp((1 - t) r + t s), i.e. the
mass of a log-linear density piece of unit width whose log-endpoints are r
and s.  Every exact functional of a piecewise log-linear density reduces to
J and the weighted integrals returned by :func:`j_partials`.

All functions broadcast over numpy arrays.
"""

import numpy as np

from .errors import InfeasibleIterate

#: exponents above this are treated as an infeasible iterate
EXP_GUARD = 700.0

_TAYLOR_RADIUS = 1e-5
_SERIES_RADIUS = 1.0
_SERIES_TERMS = 22


def _check_overflow(m):
    if np.any(m > EXP_GUARD):
        raise InfeasibleIterate(
            f"exponent {float(np.max(m)):.3g} exceeds the overflow guard {EXP_GUARD}"
        )


def _tilted_moments(u):
    """Return (K0, K1, K2) with Kk(u) = int_0^1 tau^k exp(u tau) dtau, u <= 0."""
    u = np.asarray(u, dtype=float)
    k0 = np.empty_like(u)
    k1 = np.empty_like(u)
    k2 = np.empty_like(u)
    small = np.abs(u) < _SERIES_RADIUS
    if np.any(small):
        us = u[small]
        term = np.ones_like(us)
        s0 = np.zeros_like(us)
        s1 = np.zeros_like(us)
        s2 = np.zeros_like(us)
        for m in range(_SERIES_TERMS):
            s0 += term / (m + 1)
            s1 += term / (m + 2)
            s2 += term / (m + 3)
            term = term * us / (m + 1)
        k0[small] = s0
        k1[small] = s1
        k2[small] = s2
    big = ~small
    if np.any(big):
        ub = u[big]
        e = np.exp(ub)
        b0 = np.expm1(ub) / ub
        b1 = (e - b0) / ub
        b2 = (e - 2.0 * b1) / ub
        k0[big] = b0
        k1[big] = b1
        k2[big] = b2
    return k0, k1, k2


def j_value(r, s):
    """Integral of exp((1-t) r + t s) over t in [0, 1].

    Uses (e^s - e^r)/(s - r), evaluated through expm1 from the larger
    endpoint, and a fourth-order Taylor expansion about the midpoint when
    |s - r| < 1e-5.

    Raises
    ------
    InfeasibleIterate
        If max(r, s) exceeds the overflow guard.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    m = np.maximum(r, s)
    _check_overflow(m)
    d = s - r
    u = -np.abs(d)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        closed = np.exp(m) * (np.expm1(u) / u)
        d2 = d * d
        taylor = np.exp(0.5 * (r + s)) * (1.0 + d2 / 24.0 + d2 * d2 / 1920.0)
    out = np.where(np.abs(d) < _TAYLOR_RADIUS, taylor, closed)
    # both endpoints at -inf: an empty piece
    out = np.where(np.isneginf(m), 0.0, out)
    return out if out.ndim else float(out)


def j_partials(r, s):
    """First and second partial derivatives of J.

    Returns
    -------
    tuple of arrays
        (dJ/dr, dJ/ds, d2J/dr2, d2J/drds, d2J/ds2), i.e. the integrals of
        (1-t), t, (1-t)^2, t(1-t) and t^2 against exp((1-t) r + t s).

    Each integral is computed from the larger endpoint with a non-positive
    tilt, so no cancellation occurs in the exponential.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    m = np.maximum(r, s)
    _check_overflow(m)
    u = -np.abs(s - r)
    k0, k1, k2 = _tilted_moments(u)
    e = np.exp(m)
    # tau is the distance (in t) from the larger endpoint
    near = e * (k0 - k1)          # weight (1 - tau)
    far = e * k1                  # weight tau
    near2 = e * (k0 - 2.0 * k1 + k2)
    far2 = e * k2
    cross = e * (k1 - k2)
    s_top = s >= r
    jr = np.where(s_top, far, near)
    js = np.where(s_top, near, far)
    jrr = np.where(s_top, far2, near2)
    jss = np.where(s_top, near2, far2)
    out = (jr, js, jrr, cross, jss)
    if np.ndim(jr) == 0:
        return tuple(float(v) for v in out)
    return out
