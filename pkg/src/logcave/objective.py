"""The finite-dimensional log-likelihood over piecewise linear log-densities.

For a weighted sample z_1 < ... < z_n with weights w_i, a log-density that is
linear between consecutive points is identified with its vector of values
psi at the points, and the objective is

    L(psi) = sum_i w_i psi_i - sum_k delta_k J(psi_k, psi_{k+1})

with delta_k = z_{k+1} - z_k.  The second term is the integral of exp(psi),
so maximizers are automatically normalized.  L is strictly concave.
"""

from dataclasses import dataclass, field

import numpy as np

from .density import WeightedSample
from .errors import InputError
from .jfun import j_partials, j_value

__all__ = [
    "ObjectiveContext",
    "j_value",
    "j_partials",
    "objective",
    "gradient",
    "hessian",
]


@dataclass(frozen=True)
class ObjectiveContext:
    sample: WeightedSample
    gaps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        gaps = np.diff(self.sample.points)
        gaps.setflags(write=False)
        object.__setattr__(self, "gaps", gaps)

    @classmethod
    def from_arrays(cls, points, weights):
        return cls(WeightedSample(points, weights))

    @property
    def points(self):
        return self.sample.points

    @property
    def weights(self):
        return self.sample.weights

    @property
    def n(self):
        return self.sample.n


def _check(ctx, psi):
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (ctx.n,):
        raise InputError(f"psi has shape {psi.shape}, expected ({ctx.n},)")
    return psi


def objective(ctx, psi):
    psi = _check(ctx, psi)
    integral = np.dot(ctx.gaps, j_value(psi[:-1], psi[1:])) if ctx.n > 1 else 0.0
    return float(np.dot(ctx.weights, psi) - integral)


def gradient(ctx, psi):
    psi = _check(ctx, psi)
    g = np.array(ctx.weights, dtype=float)
    if ctx.n > 1:
        jr, js, _, _, _ = j_partials(psi[:-1], psi[1:])
        g[:-1] -= ctx.gaps * jr
        g[1:] -= ctx.gaps * js
    return g


def hessian(ctx, psi):
    """Tridiagonal Hessian as ``(diagonal, off_diagonal)`` arrays.

    The matrix is symmetric with ``off_diagonal[k]`` at positions (k, k+1)
    and (k+1, k); it is negative definite whenever n >= 2.
    """
    psi = _check(ctx, psi)
    diag = np.zeros(ctx.n)
    if ctx.n == 1:
        return diag, np.zeros(0)
    _, _, jrr, jrs, jss = j_partials(psi[:-1], psi[1:])
    diag[:-1] -= ctx.gaps * jrr
    diag[1:] -= ctx.gaps * jss
    off = -ctx.gaps * np.asarray(jrs)
    return diag, off


def tridiagonal_to_dense(diag, off):
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
