import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from levyou import coupling as cp
from levyou.densities import GaussianDensity, TabulatedDensity, uniform_interval
from levyou.errors import (DivisionDomainError, InvalidInputError, PreconditionError,
                           UnsupportedDimensionError)
from levyou.levy_sim import LevyNoise, sample_X
from levyou.linmodel import OUModel
from levyou.testfunctions import constant, indicator_halfspace, indicator_interval

import oracles

MODEL = OUModel([[0.0]], [[1.0]])
RHO = GaussianDensity(lambda0=1.0)


@pytest.fixture(scope="module")
def cfg():
    return cp.coupling_config(RHO, MODEL)


def test_default_config_gaussian(cfg):
    q = stats.norm.ppf(0.75)
    assert cfg.eps == pytest.approx(2 * q, rel=1e-10)
    assert cfg.ball_mass == pytest.approx(0.5, rel=1e-10)
    assert cfg.max_step == pytest.approx(q, rel=1e-10)
    from scipy.integrate import quad
    inv = quad(lambda z: 1 / stats.norm.pdf(z), -2 * q, 2 * q)[0]
    assert cfg.inverse_integral == pytest.approx(inv, rel=1e-9)
    assert cfg.sigma_bound == pytest.approx(inv / 0.25, rel=1e-9)


def test_weight_eta_values(cfg):
    assert cp.weight_eta(np.array([[0.0]]), cfg)[0] == pytest.approx(2.0)
    assert cp.weight_eta(np.array([[10.0]]), cfg)[0] == 0.0


def test_weight_eta_mean_one(cfg):
    xi = RHO.sample(np.random.default_rng(0), 100_000)
    w = cp.weight_eta(xi, cfg)
    assert abs(w.mean() - 1) <= 4 * w.std() / math.sqrt(w.size)


def test_eta_tilde_reduces_at_equal_points(cfg):
    xi = RHO.sample(np.random.default_rng(1), 1000)
    tau = np.random.default_rng(2).uniform(0, 5, 1000)
    np.testing.assert_array_equal(cp.weight_eta_tilde(xi, tau, [0.3], [0.3], MODEL, cfg),
                                  cp.weight_eta(xi, cfg))


@pytest.mark.parametrize("tau", [0.0, 1.7, 9.0])
def test_eta_tilde_conditional_moments(cfg, tau):
    xi = RHO.sample(np.random.default_rng(int(tau * 10)), 200_000)
    w = cp.weight_eta_tilde(xi, np.full(xi.shape[0], tau), [0.0], [cfg.max_step / 2], MODEL, cfg)
    se = w.std() / math.sqrt(w.size)
    assert abs(w.mean() - 1) <= 4 * se
    w2 = w ** 2
    assert w2.mean() <= cfg.sigma_bound + 3 * w2.std() / math.sqrt(w.size)


def test_eta_tilde_step_limit(cfg):
    with pytest.raises(InvalidInputError):
        cp.weight_eta_tilde(np.zeros((1, 1)) + 0.1, np.zeros(1), [0.0], [2 * cfg.max_step],
                            MODEL, cfg)


def test_config_preconditions():
    with pytest.raises(PreconditionError) as exc:
        cp.coupling_config(TabulatedDensity([-2.0, 0.0, 2.0], [1.0, 0.0, 1.0]), MODEL,
                           z0=[0.0], eps=1.0)
    assert "1/rho0" in exc.value.hypothesis
    with pytest.raises(PreconditionError):
        cp.coupling_config(GaussianDensity(dim=1), OUModel(np.zeros((2, 2)), np.ones((2, 1))))
    with pytest.raises(PreconditionError):
        cp.coupling_config(uniform_interval(1.0, 2.0), MODEL, z0=[0.0], eps=0.5)


def test_uniform_density_config_is_fine():
    c = cp.coupling_config(uniform_interval(-1.0, 1.0, 1.0), MODEL)
    assert c.ball_mass == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("lt", [4.0, 16.0, 64.0])
def test_gap_degenerate_weights(cfg, lt):
    g = cp.lemma31_gap(lt, cfg, "one", replicas=200_000, seed=1)
    assert abs(g.estimate.mean - 1 / lt) <= 4 * g.estimate.stderr


@pytest.mark.parametrize("weights", ["eta", "eta_tilde"])
def test_gap_bound(cfg, weights):
    for lt in (4.0, 16.0):
        g = cp.lemma31_gap(lt, cfg, weights, MODEL, [0.0], [cfg.max_step], 100_000, seed=2)
        assert g.estimate.mean <= 1.1 * g.bound
    assert cfg.sigma_eta == pytest.approx(2.0, rel=1e-10)


def test_gap_large_horizon(cfg):
    g = cp.lemma31_gap(400.0, cfg, "eta", replicas=50_000, seed=3)
    assert g.bound == pytest.approx(0.005, rel=1e-10)
    assert g.estimate.mean <= 0.0055


def test_tv_zero_at_equal_points(cfg):
    e = cp.tv_weight_bound(MODEL, cfg, [0.4], [0.4], 16.0, 20_000, seed=0)
    assert e.value == 0.0 and e.stderr == 0.0


def test_tv_bound_dominates_histogram_and_decays(cfg):
    x, y = [0.0], [cfg.max_step]
    prev = None
    for k, t in enumerate((4.0, 16.0, 64.0)):
        w = cp.tv_weight_bound(MODEL, cfg, x, y, t, 100_000, seed=1, stream=k)
        assert 0 <= w.value <= 2
        X = sample_X(MODEL, LevyNoise(RHO), x, t, 200_000, seed=2, stream=k)
        Y = sample_X(MODEL, LevyNoise(RHO), y, t, 200_000, seed=2, stream=k)
        h = cp.tv_histogram(X, Y, seed=k, paired_samples=True)
        assert h.value <= w.value + 3 * math.hypot(h.stderr, w.stderr)
        if prev is not None:
            assert w.value <= prev.value + 3 * math.hypot(w.stderr, prev.stderr)
        prev = w


def test_tv_swapped_roles(cfg):
    a = cp.tv_weight_bound(MODEL, cfg, [0.0], [0.5], 16.0, 100_000, seed=3)
    b = cp.tv_weight_bound(MODEL, cfg, [0.5], [0.0], 16.0, 100_000, seed=4)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr)


def test_tv_chaining(cfg):
    d = 1.05 * cfg.max_step
    chained = cp.tv_weight_bound(MODEL, cfg, [0.0], [d], 16.0, 50_000, seed=5)
    assert chained.links == 2
    single = cp.tv_weight_bound(MODEL, cfg, [0.0], [d / 2], 16.0, 50_000, seed=5)
    assert chained.raw == pytest.approx(2 * single.raw, rel=1e-14)


def test_tv_requires_dissipativity():
    m = OUModel([[0.0, 1.0], [1.0, 0.0]], np.eye(2))
    c = cp.coupling_config(GaussianDensity(dim=2), m)
    with pytest.raises(PreconditionError) as exc:
        cp.tv_weight_bound(m, c, [0, 0], [0.1, 0], 1.0, 100)
    assert "dissipativity" in exc.value.hypothesis


def test_histogram_trivial_cases():
    x = np.random.default_rng(0).normal(size=5000)
    assert cp.tv_histogram(x, x).value == 0.0
    assert cp.tv_histogram(x, x + 100.0, bins=50).value == pytest.approx(2.0)
    with pytest.raises(UnsupportedDimensionError):
        cp.tv_histogram(np.zeros((10, 4)), np.zeros((10, 4)))


def test_histogram_gaussian_shift():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(1_000_000)
    y = rng.standard_normal(1_000_000) + 1.0
    e = cp.tv_histogram(x, y, bootstrap=50)
    assert e.value == pytest.approx(oracles.gaussian_shift_tv(1.0, 1.0), abs=0.02)
    assert 0 < e.stderr < 0.01


def test_reflection_examples():
    assert cp.reflection_tv([0.0], [0.0], 1.0) == 0.0
    assert cp.reflection_tv([0.0], [2.0], 1.0) == pytest.approx(
        2 * (2 * stats.norm.cdf(1) - 1), rel=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 100))
def test_reflection_bound(x, y, t):
    v = cp.reflection_tv([x], [y], t)
    assert 0 <= v <= min(2.0, 2 * math.sqrt(2) * abs(x - y) / math.sqrt(t)) + 1e-12
    assert v == pytest.approx(oracles.gaussian_shift_tv(x - y, math.sqrt(t)), abs=1e-12)


def test_fit_loglog_exact():
    ts = np.array([4.0, 16.0, 64.0])
    fit = cp.fit_loglog(ts, 3.0 * ts ** -0.5)
    assert fit["slope"] == pytest.approx(-0.5) and fit["r2"] == pytest.approx(1.0)
    assert math.exp(fit["intercept"]) == pytest.approx(3.0)


def test_berry_esseen_zero_start():
    rows = cp.berry_esseen_experiment(RHO, 0.0, [4.0, 16.0], replicas=20_000)
    assert all(r["tv"] == 0.0 for r in rows)


def test_berry_esseen_requires_standardized():
    with pytest.raises(InvalidInputError):
        cp.berry_esseen_experiment(GaussianDensity(variance=2.0), 1.0, [4.0], replicas=100)
    with pytest.raises(InvalidInputError):
        cp.check_standardized(GaussianDensity(lambda0=2.0))


def test_l1_trivial_functions():
    noise = LevyNoise(GaussianDensity(lambda0=2.0))
    one = cp.l1_comparison_check(MODEL, noise, constant(1.0), [0.0], 1.0, 1.0, 10_000, seed=0)
    assert one.lhs.mean == 1.0 and one.rhs.mean == pytest.approx(math.exp(-2.0))
    zero = cp.l1_comparison_check(MODEL, noise, constant(0.0), [0.0], 1.0, 1.0, 1000, seed=0)
    assert zero.lhs_at_least()


def test_l1_halfline():
    noise = LevyNoise(GaussianDensity(lambda0=2.0))
    f = indicator_halfspace([1.0], 0.0)
    cmp = cp.l1_comparison_check(MODEL, noise, f, [0.0], 1.0, 1.0, 200_000, seed=1)
    assert cmp.lhs_at_least(3.0)
    # P(X_2 >= 0) by conditioning on the number of jumps
    exact = oracles.poisson_mean_of(lambda k: np.where(k == 0, 1.0, 0.5), 4.0)
    assert abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr


def test_l1_preconditions():
    with pytest.raises(PreconditionError):
        cp.l1_comparison_check(OUModel([[-1.0]], [[1.0]]), LevyNoise(RHO), constant(), [0.0],
                               1.0, 1.0, 10)
    with pytest.raises(PreconditionError):
        cp.l1_comparison_check(MODEL, LevyNoise(RHO, gaussian_cov=[[1.0]]), constant(), [0.0],
                               1.0, 1.0, 10)
    with pytest.raises(PreconditionError):
        cp.l1_comparison_check(MODEL, LevyNoise(RHO, drift=[0.1]), constant(), [0.0],
                               1.0, 1.0, 10)


def test_dimension_check_constant_function():
    chk = cp.gaussian_dimension_check(2, constant(1.0), 1.0, 3.0, [0.0, 0.0], 1000)
    assert chk.passed and chk.factor == pytest.approx(4.0)


def test_dimension_check_interval_quadrature():
    f = indicator_interval(0.0, 1.0)
    chk = cp.gaussian_dimension_check(1, f, 1.0, 1.0, [0.0], 200_000, seed=2)
    lhs, rhs = chk.quadrature
    assert lhs == pytest.approx(oracles.heat_prob_interval(0.0, 0.0, 1.0, 1.0), abs=1e-6)
    assert rhs == pytest.approx(math.sqrt(2) * oracles.heat_prob_interval(0.0, 0.0, 1.0, 2.0),
                                abs=1e-6)
    assert lhs <= rhs and chk.passed


def test_dimension_check_long_time_limit():
    f = indicator_interval(0.0, 1.0)
    chk = cp.gaussian_dimension_check(1, f, 1.0, 100.0, [0.0], 50_000, seed=3)
    assert chk.factor == pytest.approx(math.sqrt(101))
    assert chk.passed
    assert cp.dimension_factor(1, 1.0, 100.0, "swapped") == pytest.approx(math.sqrt(1.01))


def test_swapped_constant_fails_for_concentrated_f():
    # a narrow interval at the start point: P_t f is much larger than P_{t+s} f when s >> t
    f = indicator_interval(0.0, 0.1)
    lhs = oracles.heat_prob_interval(0.0, 0.0, 0.1, 0.01)
    rhs = oracles.heat_prob_interval(0.0, 0.0, 0.1, 1.01)
    assert lhs > cp.dimension_factor(1, 0.01, 1.0, "swapped") * rhs
    assert lhs <= cp.dimension_factor(1, 0.01, 1.0, "kernel") * rhs
    chk = cp.gaussian_dimension_check(1, f, 0.01, 1.0, [0.0], 1000, constant="swapped")
    assert chk.quadrature[0] > chk.quadrature[1]


def test_division_domain_guard(cfg):
    # a hand-built config that skipped the integrability check
    holed = TabulatedDensity([-3.0, 0.1, 3.0], [0.2, 0.0, 0.2])
    bad = cp.CouplingConfig(**{**cfg.__dict__, "rho": holed})
    with pytest.raises(DivisionDomainError):
        cp.weight_eta_tilde(np.array([[0.1]]), np.zeros(1), [0.0], [0.1], MODEL, bad)
