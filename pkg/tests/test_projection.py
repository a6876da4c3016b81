import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from logcave import PiecewiseLogLinear, StepCdf, WeightedSample, fit
from logcave.errors import DomainError, ExistenceError
from logcave.projection import (
    SymmetricPareto,
    kaffine_density,
    kappa_star,
    ks_distance,
    mallows_counterexample,
    mallows_sample,
    marshall_check,
    mixture_affine_piece,
    pareto_projection,
    rho,
    sup_cdf_distance,
    verify_characterization,
)

Q = WeightedSample([0.0, 1.0, 2.0], [0.5, 0.4, 0.1])
P = WeightedSample([0.0, 1.0], [0.5, 0.5])
UNIT = PiecewiseLogLinear([0.0, 1.0], [0.0, 0.0])


def rho_mp(x):
    mp.mp.dps = 60
    x = mp.mpf(x)
    if x == 0:
        return mp.mpf(2)
    e = mp.exp(x)
    return (2 * e * (x - 1) - x * x + 2) / (2 * e - 2 - 2 * x - x * x)


# -- characterization ---------------------------------------------------------------


def test_verify_examples():
    assert verify_characterization(fit(Q).density, StepCdf(Q)).passed
    assert verify_characterization(UNIT, StepCdf(P)).passed
    bad = verify_characterization(UNIT, StepCdf(Q))
    assert not bad.passed
    assert bad.max_excess > 1e-3


def test_verify_detects_wrong_knot(rng):
    x = rng.standard_normal(100)
    rep = fit(x)
    d = rep.density
    shifted = PiecewiseLogLinear.normalized(d.knots, d.logvals + 0.05 * d.knots)
    assert not verify_characterization(shifted, StepCdf(rep.sample)).passed


def test_verify_against_continuous_law():
    # a log-concave law is its own projection
    d = PiecewiseLogLinear.normalized([-1.0, 0.0, 2.0], [-1.0, 0.0, -3.0])
    assert verify_characterization(d, d).passed


def test_report_dict():
    out = verify_characterization(UNIT, StepCdf(P)).to_dict()
    assert out["pass"] is True
    assert set(out) == {"max_excess", "argmax", "knot_residual", "infinity_residual", "tol", "pass"}


# -- Pareto and Laplace ---------------------------------------------------------------


@pytest.mark.parametrize("alpha,sigma,rate", [(2.0, 1.0, 1.0), (3.0, 2.0, 1.0), (5.0, 1.0, 4.0)])
def test_pareto_projection(alpha, sigma, rate):
    lap = pareto_projection(alpha, sigma)
    assert lap.rate == rate
    assert lap.mass_deficit < 1e-12
    assert lap.density.mass() == pytest.approx(1.0, abs=1e-12)
    for x in (-2.0, -0.3, 0.0, 1.5):
        assert lap.density(x) == pytest.approx(0.5 * rate * math.exp(-rate * abs(x)), rel=1e-12)
        assert lap.pdf(x) == pytest.approx(0.5 * rate * math.exp(-rate * abs(x)), rel=1e-14)
    rep = verify_characterization(lap.density, SymmetricPareto(alpha, sigma), tol=1e-5, kinks=[0.0])
    assert rep.passed


def test_symmetric_pareto_closed_forms():
    law = SymmetricPareto(3.0, 2.0)
    assert integrate.quad(law.pdf, -np.inf, np.inf)[0] == pytest.approx(1.0, abs=1e-10)
    for x in (-3.0, -0.5, 0.0, 0.7, 4.0):
        assert law.cdf(x) == pytest.approx(integrate.quad(law.pdf, -np.inf, x)[0], abs=1e-10)
        assert law.integrated_cdf(x) == pytest.approx(
            integrate.quad(law.cdf, -np.inf, x)[0], abs=1e-8)


def test_pareto_requires_finite_mean():
    with pytest.raises(ExistenceError):
        pareto_projection(1.0, 1.0)
    with pytest.raises(DomainError):
        pareto_projection(2.0, 0.0)


def test_laplace_beats_concave_perturbations(rng):
    # moving the log-density within the concave class never raises the integrated log-likelihood
    alpha, sigma = 3.0, 1.0
    law = SymmetricPareto(alpha, sigma)
    rate = (alpha - 1) / sigma

    def score(phi):
        lik = integrate.quad(lambda t: phi(t) * law.pdf(t), -np.inf, 0)[0] + \
            integrate.quad(lambda t: phi(t) * law.pdf(t), 0, np.inf)[0]
        mass = integrate.quad(lambda t: math.exp(phi(t)), -np.inf, 0)[0] + \
            integrate.quad(lambda t: math.exp(phi(t)), 0, np.inf)[0]
        return lik - math.log(mass)

    def base(t):
        return math.log(rate / 2) - rate * abs(t)

    best = score(base)
    for _ in range(6):
        a1, a2 = np.sort(rng.uniform(-1, 1, size=2))[::-1]
        c = rng.normal()

        def delta(t):
            return min(a1 * t, a2 * t + c)

        for eps in (0.05, 0.2):
            assert score(lambda t: base(t) + eps * delta(t)) <= best + 1e-9


# -- rho ---------------------------------------------------------------------


def test_rho_zero_and_two():
    assert rho(0.0) == 2.0
    assert rho(2.0) == pytest.approx(float(rho_mp(2)), rel=1e-14)
    assert rho(2.0) <= 3.0


def test_rho_matches_high_precision():
    for x in [-50, -10, -2.5, -1e-3, -1e-5, 1e-7, 1e-5, 9e-5, 1.1e-4, 1e-3, 0.5, 1.9, 2.1, 10, 80, 600]:
        assert rho(x) == pytest.approx(float(rho_mp(x)), rel=1e-12)


def test_rho_grid_properties():
    x = np.linspace(-10, 10, 2001)
    r = rho(x)
    assert np.all(np.diff(r) > 0)
    assert np.all(r <= np.maximum(3.0, 2.0 * x))
    assert r[1000] == 2.0


# -- k-affine class, Marshall -------------------------------------------------------


def test_kaffine_examples():
    d = kaffine_density(1, (0.0, 0.0, 1.0))
    np.testing.assert_allclose(d.logvals, 0.0)
    e = kaffine_density(1, (-1.0, 0.0, math.inf))
    assert e.mass() == pytest.approx(1 - 1e-12, abs=1e-15)
    assert e(0.5) == pytest.approx(math.exp(-0.5), rel=1e-14)
    t = kaffine_density(1, (-2.0, 0.0, 1.0))
    assert t.mass() == pytest.approx(1.0, abs=1e-14)
    tent = kaffine_density(2, ([-1.0, 0.0, 1.0], [-1.0, 0.3, -1.0]))
    tent.validate()
    assert kappa_star(-2.0, 0.0, 1.0) == -2.0
    assert kappa_star(0.0, -math.inf, 0.0) == 0.0


def test_kaffine_errors():
    with pytest.raises(DomainError):
        kaffine_density(1, (0.0, 0.0, math.inf))
    with pytest.raises(DomainError):
        kaffine_density(1, (-1.0, -math.inf, 0.0))
    with pytest.raises(DomainError):
        kaffine_density(1, (1.0, 0.0, math.inf))
    # exp(x) on (-inf, 0] is a legitimate member of the class
    assert kaffine_density(1, (1.0, -math.inf, 0.0))(0.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        kaffine_density(1, (1.0, 2.0, 1.0))
    with pytest.raises(DomainError):
        kaffine_density(2, ([-1.0, 0.0, 1.0], [0.0, -1.0, 0.0]))
    with pytest.raises(DomainError):
        kaffine_density(3, ([-1.0, 0.0, 1.0], [0.0, 0.0, 0.0]))


def test_sup_distances_against_grid(rng):
    d1 = kaffine_density(2, ([-1.0, 0.2, 1.5], [-1.0, 0.3, -2.0]))
    d2 = kaffine_density(1, (-0.5, -1.2, 1.0))
    x = np.linspace(-1.5, 2.0, 200001)
    grid = np.max(np.abs(d1.cdf(x) - d2.cdf(x)))
    exact = sup_cdf_distance(d1, d2)
    assert exact >= grid - 1e-15
    assert exact == pytest.approx(grid, abs=1e-8)
    s = WeightedSample.from_data(rng.uniform(-1, 1.5, size=30))
    G = StepCdf(s)
    z = s.points
    brute = max(np.max(np.abs(G(x) - d1.cdf(x))), np.max(np.abs(G(z) - d1.cdf(z))),
                np.max(np.abs(G.left_limit(z) - d1.cdf(z))))
    assert ks_distance(s, d1) == pytest.approx(brute, abs=1e-12)


@pytest.mark.parametrize("truth", [(0.0, 0.0, 1.0), (-1.0, 0.0, math.inf), (-2.0, 0.0, 1.0), (3.0, -1.0, 0.0)])
def test_marshall_holds(truth):
    f0 = kaffine_density(1, truth)
    for seed in range(20):
        res = marshall_check(truth, f0.draw(200, seed=seed))
        assert res.passed
        assert res.rho == pytest.approx(rho(abs(res.kappa)))


def test_marshall_two_points():
    assert marshall_check((0.0, 0.0, 1.0), [0.2, 0.7]).passed


# -- counterexamples ----------------------------------------------------------------


def test_mallows_sample():
    s = mallows_sample(10)
    np.testing.assert_allclose(s.points, [-11, -1, 1, 11])
    np.testing.assert_allclose(s.weights, [0.05, 0.45, 0.45, 0.05])
    with pytest.raises(DomainError):
        mallows_sample(1)


def test_mallows_limit():
    limit = 4 / (math.sqrt(5) + 1)
    gaps = [abs(mallows_counterexample(n) - limit) for n in (2, 5, 20, 100)]
    assert all(b < a for a, b in zip(gaps[:3], gaps[1:4]))
    assert gaps[-1] < 1e-10


def test_mallows_fit_shape():
    d = fit(mallows_sample(1000)).density
    np.testing.assert_allclose(d.knots, [-1001, -1, 1, 1001])
    np.testing.assert_allclose(d.slopes[0], -d.slopes[-1], rtol=1e-9)
    assert abs(d.slopes[1]) < 1e-9
    # the outer slope solves a golden-ratio equation in the limit
    assert d.slopes[-1] == pytest.approx(-(math.sqrt(5) - 1) / 2, rel=1e-8)


def test_mixture_affine_piece():
    a, b = mixture_affine_piece(0.0)
    assert a <= -0.3 and b >= 0.3
