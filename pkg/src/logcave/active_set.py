"""Exact log-concave maximum likelihood on the line by an active set method.

The log-density is parametrized by its values psi at the sorted sample
points.  Concavity is the cone of constraints v_j . psi <= 0, where v_j . psi
is the change in slope at interior point j.  A constraint is *active* when
the slope does not change there; the remaining *free* points (always
including both endpoints) are the knots of the estimate.

Indices are 0-based: interior constraints are j = 1, ..., n-2.  The kink
basis b_j used for the optimality test is b_0 = 1, b_j = min(z - z_j, 0) for
interior j, and b_{n-1} = z.

Iterates are carried in reduced form, as values at the free points, so that
active constraints hold exactly rather than up to rounding.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .density import PiecewiseLogLinear, WeightedSample
from .errors import ExistenceError, InfeasibleIterate, InputError, SolverError
from .jfun import j_value
from .objective import ObjectiveContext, gradient, hessian, objective

__all__ = [
    "FitReport",
    "fit",
    "subspace_maximize",
    "kkt_residuals",
    "max_feasible_step",
    "constraint_values",
    "kink_products",
]

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 200


@dataclass(frozen=True)
class FitReport:
    """Result of :func:`fit`.

    Attributes
    ----------
    density : PiecewiseLogLinear
        The estimate, with knots at the free sample points.
    loglik : float
        sum_i w_i log f(z_i).
    outer_iterations, inner_iterations : int
    kkt_max : float
        Largest violation of the optimality conditions: b_j . grad over
        active j, and |b_j . grad| over free j.
    feasibility : float
        Largest slope change at a knot (non-positive for a concave fit).
    psi : ndarray
        Log-density at every sample point.
    active : ndarray
        Sorted active constraint indices.
    loglik_trace : tuple of float
        Objective value after initialization and after every outer iteration.
    """

    density: PiecewiseLogLinear
    loglik: float
    outer_iterations: int
    inner_iterations: int
    kkt_max: float
    feasibility: float
    psi: np.ndarray
    active: np.ndarray
    sample: WeightedSample
    loglik_trace: tuple

    def to_dict(self):
        mean, var = self.density.moments()
        return {
            "knots": self.density.knots.tolist(),
            "log_density": self.density.logvals.tolist(),
            "slopes": self.density.slopes.tolist(),
            "loglik": self.loglik,
            "iterations": {"outer": self.outer_iterations, "inner": self.inner_iterations},
            "kkt_max": self.kkt_max,
            "mean": mean,
            "variance": var,
        }


# -- constraint algebra ---------------------------------------------------------


def constraint_values(points, psi):
    """v_j . psi for interior j, i.e. slope to the right minus slope to the left."""
    slopes = np.diff(psi) / np.diff(points)
    return np.diff(slopes)


def kink_products(ctx, g):
    """b_j . g for j = 0, ..., n-1.

    For interior j this is -sum_{i<j} (z_j - z_i) g_i, accumulated gap by gap
    so that large coordinates do not cancel.
    """
    g = np.asarray(g, dtype=float)
    out = np.empty(ctx.n)
    head = np.cumsum(g)[:-1]
    out[1:] = -np.cumsum(ctx.gaps * head)
    out[0] = g.sum()
    out[-1] = np.dot(ctx.points, g)
    return out


def kkt_residuals(ctx, psi, active):
    """(max over active j of b_j . grad L, max over interior j of v_j . psi).

    Either maximum is ``-inf`` when taken over an empty set.
    """
    psi = np.asarray(psi, dtype=float)
    active = np.asarray(active, dtype=int)
    bg = kink_products(ctx, gradient(ctx, psi))
    first = float(bg[active].max()) if active.size else -np.inf
    cv = constraint_values(ctx.points, psi)
    second = float(cv.max()) if cv.size else -np.inf
    return first, second


def max_feasible_step(points, psi, psi_cand):
    """Largest t in [0, 1] with (1 - t) psi + t psi_cand concave.

    ``psi`` must be feasible.  Each constraint is linear along the segment,
    so t is the smallest ratio -c(psi) / (c(cand) - c(psi)) over the
    constraints that the candidate violates.
    """
    c0 = np.minimum(constraint_values(points, psi), 0.0)
    c1 = constraint_values(points, psi_cand)
    viol = c1 > 0
    if not np.any(viol):
        return 1.0
    ratios = -c0[viol] / (c1[viol] - c0[viol])
    return float(np.clip(ratios.min(), 0.0, 1.0))


# -- reduced subproblem -------------------------------------------------------


def _reduced_context(ctx, free):
    """Objective context on the free points.

    A log-density linear between free points has the same integral on the
    coarse grid, and each sample weight splits linearly between the two free
    points around it.
    """
    x = ctx.points
    xf = x[free]
    p = np.clip(np.searchsorted(free, np.arange(ctx.n), side="right") - 1, 0, free.size - 2)
    lam = (x - xf[p]) / (xf[p + 1] - xf[p])
    w = ctx.weights
    wf = np.bincount(p, (1.0 - lam) * w, minlength=free.size)
    wf += np.bincount(p + 1, lam * w, minlength=free.size)
    # rounding can leave the total a hair away from one
    wf /= wf.sum()
    return ObjectiveContext.from_arrays(xf, wf)


def _safe_objective(rctx, theta):
    try:
        return objective(rctx, theta)
    except InfeasibleIterate:
        return -np.inf


def _newton(rctx, theta, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Damped Newton ascent; returns (theta, iterations)."""
    theta = np.array(theta, dtype=float)
    f = _safe_objective(rctx, theta)
    if not np.isfinite(f):
        raise SolverError("Newton started from an infeasible point", best=theta)
    k = theta.size
    for it in range(max_iter):
        g = gradient(rctx, theta)
        if np.max(np.abs(g)) < tol:
            return theta, it
        diag, off = hessian(rctx, theta)
        ab = np.zeros((2, k))
        ab[0, 1:] = -off
        ab[1] = -diag
        step = solveh_banded(ab, g)
        decrement = float(g @ step)
        t = 1.0
        while True:
            trial = theta + t * step
            ft = _safe_objective(rctx, trial)
            if ft >= f + 1e-4 * t * decrement:
                break
            # inside the quadratic region rounding hides the increase
            if t == 1.0 and decrement < 1e-12 * max(1.0, abs(f)) and np.isfinite(ft):
                break
            t *= 0.5
            if t < 1e-14:
                if np.max(np.abs(g)) < 1e3 * tol:
                    return theta, it
                raise SolverError("Newton line search failed", best=theta)
        theta, f = trial, ft
    raise SolverError(f"Newton did not converge in {max_iter} iterations", best=theta)


def _kinks(xf, theta):
    if xf.size < 3:
        return np.zeros(0)
    return constraint_values(xf, theta)


def _expand(ctx, free, theta):
    return np.interp(ctx.points, ctx.points[free], theta)


def subspace_maximize(ctx, active, warm):
    """Maximize the objective subject to v_j . psi = 0 for j in ``active``.

    Parameters
    ----------
    ctx : ObjectiveContext
    active : iterable of int
        Interior indices (1..n-2) whose constraints are held at equality.
    warm : array_like of shape (n,)
        Starting point; only its values at the free points are used.

    Returns
    -------
    ndarray of shape (n,)
    """
    n = ctx.n
    mask = np.ones(n, dtype=bool)
    act = np.asarray(list(active), dtype=int)
    if act.size and (act.min() < 1 or act.max() > n - 2):
        raise InputError("active indices must be interior (1..n-2)")
    mask[act] = False
    free = np.flatnonzero(mask)
    warm = np.asarray(warm, dtype=float)
    theta, _ = _newton(_reduced_context(ctx, free), warm[free])
    return _expand(ctx, free, theta)


# -- the algorithm ------------------------------------------------------------


def _kkt_max(bg, free_mask):
    interior = np.zeros(bg.size, dtype=bool)
    interior[1:-1] = True
    active = interior & ~free_mask
    parts = [0.0]
    if np.any(active):
        parts.append(float(bg[active].max()))
    parts.append(float(np.abs(bg[free_mask | ~interior]).max()))
    return max(parts)


def fit(sample, tol_kkt=1e-8, max_outer=None, max_inner=None):
    """Log-concave maximum likelihood estimate (log-concave projection).

    Parameters
    ----------
    sample : WeightedSample or array_like
        Raw data are converted with :meth:`WeightedSample.from_data`.
    tol_kkt : float
        The search stops once every active constraint has b_j . grad <= tol_kkt.
    max_outer, max_inner : int, optional
        Iteration caps; default 10 n outer and 5 n inner per outer iteration.

    Returns
    -------
    FitReport

    Raises
    ------
    ExistenceError
        Fewer than two distinct points.
    SolverError
        An iteration cap was exceeded or the Newton subproblem failed.
    """
    if not isinstance(sample, WeightedSample):
        sample = WeightedSample.from_data(sample)
    n = sample.n
    if n < 2:
        raise ExistenceError(
            "all observations coincide: the data lie on a single point, so the "
            "likelihood is unbounded and no log-concave maximizer exists"
        )
    max_outer = 10 * n if max_outer is None else max_outer
    max_inner = 5 * n if max_inner is None else max_inner
    ctx = ObjectiveContext(sample)
    x = sample.points
    span = x[-1] - x[0]

    free = np.array([0, n - 1])
    theta, _ = _newton(_reduced_context(ctx, free), np.full(2, -np.log(span)))
    psi = _expand(ctx, free, theta)
    trace = [objective(ctx, psi)]
    outer = inner = 0

    while n > 2:
        free_mask = np.zeros(n, dtype=bool)
        free_mask[free] = True
        bg = kink_products(ctx, gradient(ctx, psi))
        scores = np.where(free_mask, -np.inf, bg)
        scores[[0, -1]] = -np.inf
        jstar = int(np.argmax(scores))  # first maximizer
        if not scores[jstar] > tol_kkt:
            break
        outer += 1
        if outer > max_outer:
            raise SolverError(f"outer iteration cap {max_outer} exceeded", best=psi)

        pos = int(np.searchsorted(free, jstar))
        free_c = np.insert(free, pos, jstar)
        cur = psi[free_c]
        kink_cur = np.minimum(_kinks(x[free_c], cur), 0.0)
        kink_cur[pos - 1] = 0.0  # psi is linear across the released point
        cand, _ = _newton(_reduced_context(ctx, free_c), cur)

        steps = 0
        while True:
            kink_cand = _kinks(x[free_c], cand)
            viol = kink_cand > 0
            if not np.any(viol):
                break
            steps += 1
            inner += 1
            if steps > max_inner:
                raise SolverError(f"inner iteration cap {max_inner} exceeded", best=psi)
            ratios = np.full(kink_cand.size, np.inf)
            ratios[viol] = -kink_cur[viol] / (kink_cand[viol] - kink_cur[viol])
            block = int(np.argmin(ratios))
            t = float(np.clip(ratios[block], 0.0, 1.0))
            cur = (1.0 - t) * cur + t * cand
            kink_new = (1.0 - t) * kink_cur + t * kink_cand
            scale = 1e-12 * (1.0 + np.max(np.abs(np.diff(cur) / np.diff(x[free_c]))))
            drop = kink_new >= -scale
            drop[block] = True
            keep = np.ones(free_c.size, dtype=bool)
            keep[1:-1] = ~drop
            free_c = free_c[keep]
            cur = cur[keep]
            kink_cur = np.minimum(_kinks(x[free_c], cur), 0.0)
            cand, _ = _newton(_reduced_context(ctx, free_c), cur)

        # A(psi) counts constraints holding with equality as active
        kk = _kinks(x[free_c], cand)
        keep = np.ones(free_c.size, dtype=bool)
        keep[1:-1] = kk < 0
        if not np.all(keep):
            free_c = free_c[keep]
            cand = cand[keep]
        free, theta = free_c, cand
        psi = _expand(ctx, free, theta)
        trace.append(objective(ctx, psi))

    # remove the residual normalization error of the Newton solve
    rctx = _reduced_context(ctx, free)
    mass = float(np.dot(rctx.gaps, j_value(theta[:-1], theta[1:])))
    theta = theta - np.log(mass)
    psi = _expand(ctx, free, theta)

    free_mask = np.zeros(n, dtype=bool)
    free_mask[free] = True
    bg = kink_products(ctx, gradient(ctx, psi))
    kinks = _kinks(x[free], theta)
    active = np.flatnonzero(~free_mask[1:-1]) + 1
    density = PiecewiseLogLinear(x[free], theta)
    report = FitReport(
        density=density,
        loglik=float(np.dot(sample.weights, psi)),
        outer_iterations=outer,
        inner_iterations=inner,
        kkt_max=_kkt_max(bg, free_mask),
        feasibility=float(kinks.max()) if kinks.size else 0.0,
        psi=psi,
        active=active,
        sample=sample,
        loglik_trace=tuple(trace),
    )
    log.debug("fit n=%d knots=%d outer=%d inner=%d kkt=%.3g",
              n, free.size, outer, inner, report.kkt_max)
    return report

