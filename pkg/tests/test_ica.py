import math

import numpy as np
import pytest
from scipy.stats import ortho_group

from logcave import fit
from logcave.density import tv_distance
from logcave.errors import DomainError
from logcave.ica import amari_error, ica_fit, marginal_loglik, prewhiten
from logcave.projection import kaffine_density

A = np.array([[2.0, 1.0], [1.0, 1.0]])


def sources(n, seed):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(-math.sqrt(3), math.sqrt(3), n), rng.exponential(size=n) - 1.0])


def test_prewhiten_examples(rng):
    Z = rng.standard_normal((5000, 2))
    W0, S0 = prewhiten(Z)
    assert np.linalg.norm(S0 - np.eye(2), 2) < 0.1
    X = Z * np.array([2.0, 3.0])
    W, S = prewhiten(X)
    np.testing.assert_allclose(np.cov(W, rowvar=False, bias=True), np.eye(2), atol=1e-8)
    np.testing.assert_allclose(S, S.T)
    W, _ = prewhiten(sources(2000, 3) @ A.T)
    assert np.linalg.norm(np.cov(W, rowvar=False, bias=True) - np.eye(2), 2) < 0.1


def test_prewhiten_errors():
    with pytest.raises(DomainError):
        prewhiten(np.ones((10, 2)))
    with pytest.raises(DomainError):
        prewhiten(np.zeros((2, 3)))
    x = np.random.default_rng(0).standard_normal(20)
    with pytest.raises(DomainError):
        prewhiten(np.column_stack([x, 2 * x]))


def test_amari_examples(rng):
    W = rng.normal(size=(3, 3))
    assert amari_error(W, W) == pytest.approx(0.0, abs=1e-12)
    P = np.eye(3)[[2, 0, 1]]
    D = np.diag([2.0, -0.5, 7.0])
    assert amari_error(P @ D @ W, W) == pytest.approx(0.0, abs=1e-10)
    t = math.radians(10)
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    W2 = rng.normal(size=(2, 2))
    assert amari_error(R @ W2, W2) > 0
    with pytest.raises(DomainError):
        amari_error(np.ones((2, 2)), np.eye(2))


def test_amari_bounded(rng):
    for _ in range(20):
        e = amari_error(rng.normal(size=(4, 4)), rng.normal(size=(4, 4)))
        assert 0 <= e <= 1


def test_recovery():
    X = sources(2000, 2024) @ A.T
    model = ica_fit(X, restarts=10, seed=7)
    W_true = np.linalg.inv(A)
    assert amari_error(model.unmixing, W_true) < 0.05
    # rows match the truth up to sign, scale and order within 5 degrees
    U = model.unmixing / np.linalg.norm(model.unmixing, axis=1, keepdims=True)
    V = W_true / np.linalg.norm(W_true, axis=1, keepdims=True)
    cos = np.abs(U @ V.T)
    angles = np.degrees(np.arccos(np.clip(cos.max(axis=1), -1, 1)))
    assert np.all(angles < 5)
    assert sorted(cos.argmax(axis=1)) == [0, 1]
    assert np.all(np.diff(model.loglik_trace) > 0)
    assert abs(np.linalg.det(model.unmixing)) > 1e-10
    assert model.restarts_used == 10
    O = model.rotation
    np.testing.assert_allclose(O @ O.T, np.eye(2), atol=1e-10)


def test_fixed_rotation_marginals_match_sources():
    # with the rotation at the truth the marginal step fits the sources themselves
    S = sources(2000, 11)
    X = S @ A.T
    Z, Sinv = prewhiten(X)
    W_true = np.linalg.inv(A)
    # whitened unmixing at the truth: O = W_true Sinv^{-1}, rows rescaled to unit length
    O = W_true @ np.linalg.inv(Sinv)
    scale = np.linalg.norm(O, axis=1)
    O = O / scale[:, None]
    Y = Z @ O.T
    truths = [kaffine_density(1, (0.0, -math.sqrt(3), math.sqrt(3))),
              kaffine_density(1, (-1.0, -1.0, math.inf))]
    for j, truth in enumerate(truths):
        g = fit(Y[:, j] / scale[j]).density
        assert tv_distance(g, truth) < 0.1


def test_product_density_consistency(rng):
    # axis-aligned independent data at the identity rotation: the marginal step
    # is exactly a pair of one-dimensional fits
    S = sources(400, 5)
    Z, _ = prewhiten(S)
    from logcave.ica import _fit_marginals
    marg = _fit_marginals(Z)
    for j in range(2):
        direct = fit(Z[:, j]).density
        np.testing.assert_allclose(marg[j].knots, direct.knots)
        np.testing.assert_allclose(marg[j].logvals, direct.logvals)
    assert marginal_loglik(Z, marg) == pytest.approx(
        sum(fit(Z[:, j]).loglik for j in range(2)), rel=1e-12)


def test_gaussian_sources_still_return(rng):
    X = rng.standard_normal((300, 2)) @ A.T
    model = ica_fit(X, restarts=2, seed=1)
    assert np.isfinite(model.loglik)
    assert np.all(np.diff(model.loglik_trace) > 0)


def test_deterministic_given_seed():
    X = sources(300, 9) @ A.T
    m1 = ica_fit(X, restarts=2, seed=3)
    m2 = ica_fit(X, restarts=2, seed=3)
    np.testing.assert_array_equal(m1.unmixing, m2.unmixing)


def test_model_logpdf_and_dict():
    X = sources(300, 9) @ A.T
    m = ica_fit(X, restarts=1, seed=0)
    lp = m.logpdf(X)
    assert lp.shape == (300,)
    out = m.to_dict()
    assert len(out["marginals"]) == 2 and out["restarts_used"] == 1


def test_input_errors():
    with pytest.raises(DomainError):
        ica_fit(np.zeros(10))
    with pytest.raises(DomainError):
        ica_fit(np.random.default_rng(0).normal(size=(20, 2)), restarts=0)


def test_random_rotation_start_is_orthogonal():
    O = ortho_group.rvs(3, random_state=np.random.default_rng(0))
    np.testing.assert_allclose(O @ O.T, np.eye(3), atol=1e-12)
