import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from levyou.densities import (GaussianDensity, PolynomialDecayDensity, TabulatedDensity,
                              TruncatedStableDensity, clamp, density_from_config,
                              restrict_to_ball, uniform_interval)
from levyou.errors import InvalidDensityError, InvalidInputError, UnsupportedDimensionError

FAMILIES_1D = {
    "gaussian": GaussianDensity(variance=2.0, lambda0=1.5),
    "polynomial": PolynomialDecayDensity.from_mass(2.0, r=4.0),
    "stable": TruncatedStableDensity(c=0.3, alpha=1.2, r_cut=0.5),
    "tabulated": TabulatedDensity([-1.0, 0.0, 2.0], [0.0, 1.0, 0.0]),
    "uniform": uniform_interval(-1.0, 3.0, lambda0=2.0),
}


@pytest.mark.parametrize("name", FAMILIES_1D)
def test_mass_matches_scipy_quad(name):
    rho = FAMILIES_1D[name]
    pts = sorted(set([-1.0, 0.0, 2.0, 3.0, -0.5, 0.5]))
    val = integrate.quad(lambda z: float(rho.pdf(np.array([[z]]))[0]), -np.inf, np.inf,
                         points=None, limit=500)[0] if name in ("gaussian", "polynomial") else \
        sum(integrate.quad(lambda z: float(rho.pdf(np.array([[z]]))[0]), a, b, limit=500)[0]
            for a, b in zip([-np.inf] + pts, pts + [np.inf]))
    assert val == pytest.approx(rho.lambda0, rel=1e-7)


@pytest.mark.parametrize("name", FAMILIES_1D)
def test_logpdf_consistent(name):
    rho = FAMILIES_1D[name]
    z = np.linspace(-2.5, 2.5, 41)[:, None]
    with np.errstate(divide="ignore"):
        np.testing.assert_allclose(np.exp(rho._logpdf(z)), rho._pdf(z), rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("name", FAMILIES_1D)
def test_samples_nonzero_and_follow_law(name):
    rho = FAMILIES_1D[name]
    x = rho.sample(np.random.default_rng(1), 40_000)[:, 0]
    assert np.all(x != 0)
    grid = np.linspace(np.quantile(x, 0.02), np.quantile(x, 0.98), 7)
    dens = lambda z: float(rho.pdf(np.array([[z]]))[0]) / rho.lambda0
    if name in ("gaussian", "polynomial"):
        cdf = [integrate.quad(dens, -np.inf, g, limit=500)[0] for g in grid]
    else:
        kinks = [-1.0, -0.5, 0.0, 0.5, 2.0, 3.0]
        cdf = [integrate.quad(dens, -60, g, points=[k for k in kinks if k < g], limit=500)[0]
               for g in grid]
    emp = [(x <= g).mean() for g in grid]
    np.testing.assert_allclose(emp, cdf, atol=0.012)


def test_gaussian_moments_2d():
    rho = GaussianDensity(variance=0.5, lambda0=1.0, mean=[1.0, -1.0])
    x = rho.sample(np.random.default_rng(2), 100_000)
    np.testing.assert_allclose(x.mean(axis=0), [1.0, -1.0], atol=0.01)
    np.testing.assert_allclose(np.cov(x.T), 0.5 * np.eye(2), atol=0.01)
    assert rho.radial


def test_polynomial_requires_integrability():
    with pytest.raises(InvalidDensityError):
        PolynomialDecayDensity(1.0, r=1.0, dim=1)
    with pytest.raises(InvalidDensityError):
        PolynomialDecayDensity(1.0, r=2.0, dim=2)


def test_polynomial_2d_mass():
    rho = PolynomialDecayDensity.from_mass(3.0, r=5.0, dim=2)
    val = integrate.quad(lambda r: 2 * math.pi * r * float(rho.pdf(np.array([[r, 0.0]]))[0]),
                         0, np.inf)[0]
    assert val == pytest.approx(3.0, rel=1e-8)


def test_tabulated_validation():
    with pytest.raises(InvalidDensityError):
        TabulatedDensity([0.0, 1.0], [1.0, -1.0])
    with pytest.raises(InvalidDensityError):
        TabulatedDensity([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InvalidDensityError):
        TabulatedDensity([0.0, 1.0], [0.0, 0.0])


def test_tabulated_outside_grid_is_zero():
    rho = uniform_interval(0.0, 1.0)
    np.testing.assert_array_equal(rho.pdf(np.array([[-0.1], [1.1]])), 0.0)


@given(st.floats(0.05, 5.0), st.floats(0.1, 10.0))
def test_clamp_caps_density(var, lam):
    rho = GaussianDensity(variance=var, lambda0=lam)
    c = clamp(rho, 1.0)
    z = np.linspace(-3, 3, 61)[:, None]
    assert np.all(c.pdf(z) <= 1.0 + 1e-12)
    if rho.peak() <= 1.0:
        assert c is rho


def test_clamped_mass_matches_quad():
    rho = GaussianDensity(variance=0.01, lambda0=1.0)
    c = clamp(rho, 1.0)
    ref = integrate.quad(lambda z: min(1.0, float(rho.pdf(np.array([[z]]))[0])), -1, 1,
                         points=[-0.3, 0.3], limit=200)[0]
    assert c.lambda0 == pytest.approx(ref, rel=1e-8)


def test_restrict_to_ball_mass_and_support():
    rho = GaussianDensity()
    b = restrict_to_ball(rho, [0.0], 1.0)
    assert b.lambda0 == pytest.approx(stats.norm.cdf(1) - stats.norm.cdf(-1), rel=1e-10)
    s = b.sample(np.random.default_rng(0), 5000)
    assert np.all(np.abs(s) <= 1.0)


def test_from_config_round_trip():
    for spec in [{"family": "gaussian", "variance": 2.0, "lambda0": 3.0},
                 {"family": "polynomial_decay", "lambda0": 1.0, "r": 3.0},
                 {"family": "truncated_stable", "c": 1.0, "alpha": 0.5, "r_cut": 1.0}]:
        rho = density_from_config(spec)
        again = density_from_config(rho.to_dict())
        z = np.linspace(-3, 3, 13)[:, None]
        np.testing.assert_allclose(again.pdf(z), rho.pdf(z))
    with pytest.raises(InvalidInputError):
        density_from_config({"family": "cauchy"})
    with pytest.raises(InvalidInputError):
        density_from_config({"family": "gaussian", "sigma": 1.0})


def test_tabulated_high_dimension_rejected():
    with pytest.raises(UnsupportedDimensionError):
        TabulatedDensity([[0, 1]] * 4, np.ones((2, 2, 2, 2)))
