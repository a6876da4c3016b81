"""Noiseless independent component analysis with log-concave marginals.

The data are first whitened, ``Z = X S`` with ``S`` the inverse symmetric
square root of the sample covariance, so the unmixing matrix becomes
``W = O S`` with ``O`` orthogonal.  The log-likelihood

    l(O, g_1, ..., g_d) = (1/n) sum_i sum_j log g_j(o_j . Z_i)

is concave in the marginals for fixed ``O``, and each marginal update is an
exact one-dimensional log-concave fit.  The rotation update cycles through
coordinate pairs and searches the Givens angle for each pair.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import ortho_group

from .active_set import fit
from .density import PiecewiseLogLinear, WeightedSample
from .errors import DomainError, SolverError

__all__ = ["IcaModel", "prewhiten", "ica_fit", "amari_error", "marginal_loglik"]

log = logging.getLogger(__name__)

SWEEP_TOL = 1e-8
ANGLE_TOL = 1e-8
MAX_SWEEPS = 500


@dataclass(frozen=True)
class IcaModel:
    """Fitted ICA model.

    Attributes
    ----------
    unmixing : ndarray, shape (d, d)
        Estimated unmixing matrix ``O @ S``; sources are ``X @ unmixing.T``.
    rotation : ndarray, shape (d, d)
        The orthogonal factor ``O``.
    sqrt_inv_cov : ndarray, shape (d, d)
    marginals : tuple of PiecewiseLogLinear
    loglik_trace : tuple of float
        Log-likelihood after every accepted step of the winning restart.
    restarts_used : int
    """

    unmixing: np.ndarray
    rotation: np.ndarray
    sqrt_inv_cov: np.ndarray
    marginals: tuple
    loglik_trace: tuple = field(default=())
    restarts_used: int = 1
    converged: bool = True

    @property
    def loglik(self):
        return self.loglik_trace[-1]

    def sources(self, points):
        return np.asarray(points, dtype=float) @ self.unmixing.T

    def logpdf(self, points):
        """Joint log-density of the fitted model at the rows of ``points``."""
        s = self.sources(points)
        logdet = np.linalg.slogdet(self.unmixing)[1]
        return logdet + sum(g.logpdf(s[:, j]) for j, g in enumerate(self.marginals))

    def to_dict(self):
        return {
            "unmixing": self.unmixing.tolist(),
            "rotation": self.rotation.tolist(),
            "sqrt_inv_cov": self.sqrt_inv_cov.tolist(),
            "marginals": [g.to_dict() for g in self.marginals],
            "loglik_trace": list(self.loglik_trace),
            "restarts_used": self.restarts_used,
            "converged": self.converged,
        }


def prewhiten(points):
    """Whiten ``points`` by the inverse symmetric square root of the covariance.

    The data are not centred: the log-concave marginals absorb location, so
    only the covariance is needed.

    Returns
    -------
    whitened : ndarray, shape (n, d)
    sqrt_inv_cov : ndarray, shape (d, d)
        Symmetric matrix with ``whitened = points @ sqrt_inv_cov``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise DomainError("points must be an (n, d) array")
    n, d = X.shape
    if n <= d:
        raise DomainError(f"need more observations than dimensions (n={n}, d={d})")
    cov = np.cov(X, rowvar=False, bias=True).reshape(d, d)
    evals, evecs = np.linalg.eigh(cov)
    if evals[0] <= 1e-12 * max(evals[-1], 1e-300):
        raise DomainError(
            "sample covariance is singular: the data lie on a hyperplane, so "
            "no log-concave maximizer exists"
        )
    S = (evecs / np.sqrt(evals)) @ evecs.T
    return X @ S, S


def _fit_marginals(Y):
    return tuple(fit(WeightedSample.from_data(Y[:, j])).density for j in range(Y.shape[1]))


def marginal_loglik(Y, marginals):
    """Mean over rows of the summed marginal log-densities of ``Y``."""
    return float(sum(np.mean(g.logpdf(Y[:, j])) for j, g in enumerate(marginals)))


def _extended_logpdf(g):
    """log g extended linearly beyond its support (used only in the angle search)."""
    x, phi, s = g.knots, g.logvals, g.slopes

    def f(y):
        inside = np.interp(y, x, phi)
        left = phi[0] + s[0] * (y - x[0])
        right = phi[-1] + s[-1] * (y - x[-1])
        return np.where(y < x[0], left, np.where(y > x[-1], right, inside))

    return f


def _givens(d, p, q, theta):
    G = np.eye(d)
    c, s = np.cos(theta), np.sin(theta)
    G[p, p] = c
    G[q, q] = c
    G[p, q] = -s
    G[q, p] = s
    return G


def _rotation_sweep(Z, O, marginals):
    d = O.shape[0]
    ext = [_extended_logpdf(g) for g in marginals]
    O = O.copy()
    for p in range(d - 1):
        for q in range(p + 1, d):
            yp, yq = Z @ O[p], Z @ O[q]

            def neg(theta):
                c, s = np.cos(theta), np.sin(theta)
                return -(np.mean(ext[p](c * yp - s * yq)) + np.mean(ext[q](s * yp + c * yq)))

            res = minimize_scalar(neg, bounds=(-np.pi / 4, np.pi / 4), method="bounded",
                                  options={"xatol": ANGLE_TOL})
            theta = res.x if res.fun < neg(0.0) else 0.0
            O = _givens(d, p, q, theta) @ O
    return O


def _single_restart(Z, O, max_sweeps):
    Y = Z @ O.T
    marginals = _fit_marginals(Y)
    ll = marginal_loglik(Y, marginals)
    trace = [ll]
    for _ in range(max_sweeps):
        O_new = _rotation_sweep(Z, O, marginals)
        Y_new = Z @ O_new.T
        m_new = _fit_marginals(Y_new)
        ll_new = marginal_loglik(Y_new, m_new)
        if not ll_new > ll:
            return O, marginals, trace, True
        gain = ll_new - ll
        O, marginals, ll = O_new, m_new, ll_new
        trace.append(ll)
        if gain < SWEEP_TOL:
            return O, marginals, trace, True
    return O, marginals, trace, False


def ica_fit(points, restarts=10, seed=None, max_sweeps=MAX_SWEEPS):
    """Fit the ICA model by alternating marginal fits and Givens rotations.

    Parameters
    ----------
    points : array_like, shape (n, d)
    restarts : int
        Number of random orthogonal starting rotations; the best final
        log-likelihood wins.
    seed : int or None
    max_sweeps : int

    Raises
    ------
    SolverError
        If no restart converges within ``max_sweeps``; ``best`` holds the
        best model found.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DomainError("ICA needs an (n, d) array with d >= 2")
    if restarts < 1:
        raise DomainError("restarts must be positive")
    Z, S = prewhiten(X)
    d = X.shape[1]
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        O0 = ortho_group.rvs(d, random_state=rng)
        O, marginals, trace, ok = _single_restart(Z, O0, max_sweeps)
        log.debug("restart %d: loglik %.10g after %d steps", r, trace[-1], len(trace))
        if best is None or (ok, trace[-1]) > (best[3], best[2][-1]):
            best = (O, marginals, trace, ok)
    O, marginals, trace, ok = best
    model = IcaModel(O @ S, O, S, marginals, tuple(trace), restarts, ok)
    if not ok:
        raise SolverError(f"ICA did not converge in {max_sweeps} sweeps", best=model)
    return model


def _row_normalize(W):
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def amari_error(W_est, W_true):
    """Normalized Amari cross-talk error between two unmixing matrices.

    Zero exactly when ``W_est`` equals ``W_true`` up to row scaling and
    permutation.  The value lies in [0, 1].
    """
    A = np.asarray(W_est, dtype=float)
    B = np.asarray(W_true, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("amari_error needs two square matrices of the same size")
    for M in (A, B):
        if abs(np.linalg.det(_row_normalize(M))) < 1e-12:
            raise DomainError("amari_error needs invertible matrices")
    d = A.shape[0]
    if d == 1:
        return 0.0
    P = np.abs(_row_normalize(A) @ np.linalg.inv(_row_normalize(B)))
    rows = np.sum(P.sum(axis=1) / P.max(axis=1) - 1.0)
    cols = np.sum(P.sum(axis=0) / P.max(axis=0) - 1.0)
    return float((rows + cols) / (2.0 * d * (d - 1)))
