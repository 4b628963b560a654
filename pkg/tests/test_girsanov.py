import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from levyou.densities import GaussianDensity, PolynomialDecayDensity, restrict_to_ball
from levyou.errors import InvalidInputError, InvalidShiftError
from levyou.girsanov import (ShiftSpec, constant_functional, density_U, density_U_batch,
                             girsanov_check, jump_count_functional, mecke_check, mecke_suite,
                             shift_path, terminal_functional)
from levyou.levy_sim import JumpPath, LevyNoise, sample_jump_batch
from levyou.linmodel import OUModel
from levyou.testfunctions import exp_bump

import oracles

RHO = GaussianDensity(lambda0=1.0)
T = 2.0


def test_shift_empty_path():
    p = shift_path(JumpPath.empty(1.0), [0.7], 0.5)
    assert len(p) == 1 and p.times[0] == 0.5 and p.sizes[0, 0] == 0.7


@given(st.lists(st.floats(0.01, 0.99), min_size=0, max_size=6, unique=True),
       st.floats(0.001, 0.999))
def test_shift_adds_one_jump(times, tau):
    times = sorted(times)
    if tau in times:
        return
    path = JumpPath(1.0, np.array(times), np.ones((len(times), 1)))
    shifted = shift_path(path, [2.0], tau)
    assert len(shifted) == len(path) + 1
    assert np.all(np.diff(shifted.times) > 0)


def test_shift_rejects_zero_and_collision():
    path = JumpPath(1.0, np.array([0.5]), np.ones((1, 1)))
    with pytest.raises(InvalidShiftError):
        shift_path(path, [0.0], 0.2)
    with pytest.raises(InvalidShiftError):
        shift_path(path, [1.0], 0.5)
    with pytest.raises(InvalidInputError):
        shift_path(path, [1.0], 1.5)


def test_shift_changes_terminal_state_linearly():
    model = OUModel(np.array([[-0.5]]), np.array([[2.0]]))
    noise = LevyNoise(RHO)
    from levyou.levy_sim import ou_terminal_state
    path = JumpPath(1.0, np.array([0.2]), np.array([[0.3]]))
    base = ou_terminal_state(model, noise, path, None, [1.0], 1.0)
    moved = ou_terminal_state(model, noise, shift_path(path, [0.4], 0.6), None, [1.0], 1.0)
    assert moved[0] - base[0] == pytest.approx(math.exp(-0.5 * 0.4) * 2.0 * 0.4, rel=1e-13)


@given(st.integers(0, 8))
def test_u_counts_jumps(k):
    spec = ShiftSpec.uniform(GaussianDensity(lambda0=1.7), 3.0)
    path = JumpPath(3.0, np.linspace(0.1, 2.9, k), np.ones((k, 1)))
    assert density_U(path, spec) == pytest.approx(k / (1.7 * 3.0), rel=1e-14)
    assert density_U(shift_path(path, [0.5], 0.05), spec) == pytest.approx(
        (k + 1) / (1.7 * 3.0), rel=1e-14)


def test_u_empty_path_zero():
    assert density_U(JumpPath.empty(1.0), ShiftSpec.uniform(RHO, 1.0)) == 0.0


def test_u_general_g_matches_product_form():
    spec = ShiftSpec.uniform(RHO, 2.0)
    general = ShiftSpec(RHO, RHO, 2.0, g=lambda w, z, t: 1.0 / (1.0 * 2.0) * float(len(w) >= 0))
    b = sample_jump_batch(RHO, 2.0, np.random.default_rng(0), 50)
    for r in range(50):
        assert density_U(b.path(r), general) == pytest.approx(density_U(b.path(r), spec))


def test_u_order_invariant():
    """Sum over remove-one-jump configurations does not depend on listing order."""
    def g(w, z, t):
        return float(np.exp(-np.abs(w.sizes).sum()) * (1 + abs(z[0])) * (t + 1))
    spec = ShiftSpec(RHO, RHO, 2.0, g=g)
    path = JumpPath(2.0, np.array([0.1, 0.7, 1.5]), np.array([[0.5], [-1.0], [2.0]]))
    rev = JumpPath(2.0, path.times, path.sizes)
    val = density_U(path, spec)
    manual = sum(g(JumpPath(2.0, np.delete(path.times, i), np.delete(path.sizes, i, 0)),
                   path.sizes[i], path.times[i]) for i in (2, 0, 1))
    assert val == pytest.approx(manual, rel=1e-14)
    assert density_U(rev, spec) == val


def test_u_batch_matches_scalar():
    spec = ShiftSpec(restrict_to_ball(RHO, [0.0], 1.0), RHO, 2.0)
    b = sample_jump_batch(RHO, 2.0, np.random.default_rng(1), 200)
    U = density_U_batch(b, spec)
    for r in range(0, 200, 17):
        assert U[r] == pytest.approx(density_U(b.path(r), spec), rel=1e-13)
    assert np.all(U >= 0)


def test_girsanov_constant_one_closed_form():
    spec = ShiftSpec.uniform(RHO, T)
    cmp = girsanov_check(constant_functional(1.0), spec, 200_000, seed=3)
    exact = 1 - math.exp(-T)
    assert cmp.agrees(3.0)
    assert abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr
    assert abs(cmp.rhs.mean - exact) <= 4 * cmp.rhs.stderr


def test_girsanov_zero():
    cmp = girsanov_check(constant_functional(0.0), ShiftSpec.uniform(RHO, T), 5000, seed=0)
    assert cmp.lhs.mean == 0.0 and cmp.rhs.mean == 0.0


def test_girsanov_count_against_poisson_sum():
    cmp = girsanov_check(jump_count_functional(T), ShiftSpec.uniform(RHO, T), 200_000, seed=4)
    exact = oracles.poisson_mean_of(lambda k: k, T, kmax=50)
    assert cmp.agrees(3.0)
    assert abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr
    assert cmp.rhs.mean == pytest.approx(exact, rel=1e-12)  # RHS is λT per replica


@pytest.mark.parametrize("rho", [GaussianDensity(variance=0.5, lambda0=1.3),
                                 PolynomialDecayDensity.from_mass(0.8, 3.5)])
def test_girsanov_terminal_and_ball_shift(rho):
    model = OUModel(np.array([[-0.4]]), np.array([[1.0]]))
    noise = LevyNoise(rho)
    F = terminal_functional(model, noise, exp_bump([0.5], 0.7), [0.2], T)
    for spec in (ShiftSpec.uniform(rho, T), ShiftSpec(restrict_to_ball(rho, [0.0], 0.8), rho, T)):
        assert girsanov_check(F, spec, 100_000, seed=5).agrees(3.0)


def test_girsanov_requires_no_atom():
    with pytest.raises(InvalidInputError):
        girsanov_check(constant_functional(), ShiftSpec(RHO, RHO, T, eps_atom=0.1), 10, 0)


@pytest.mark.parametrize("lam", [0.5, 2.0, 8.0])
def test_mecke_suite(lam):
    Tm = lam / RHO.lambda0
    fails = 0
    for k, (name, F) in enumerate(mecke_suite(Tm).items()):
        cmp = mecke_check(F, RHO, Tm, 100_000, seed=10, stream=k)
        fails += not cmp.agrees(3.0)
    assert fails <= 1


def test_mecke_indicator_closed_form():
    F = mecke_suite(2.0)["indicator"]
    cmp = mecke_check(F, RHO, 2.0, 200_000, seed=2)
    exact = (2 * stats.norm.cdf(1) - 1) * 2.0 * 0.5
    assert abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr
    assert abs(cmp.rhs.mean - exact) <= 4 * cmp.rhs.stderr


def test_mecke_total_count_factorial_moment():
    lam = 2.0
    cmp = mecke_check(mecke_suite(lam)["total_count"], RHO, lam, 200_000, seed=6)
    exact = oracles.poisson_mean_of(lambda k: k * k, lam)
    assert exact == pytest.approx(lam * (lam + 1))
    assert abs(cmp.rhs.mean - exact) <= 4 * cmp.rhs.stderr
    assert abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr


def test_mecke_zero():
    cmp = mecke_check(lambda b, idx: np.zeros(np.size(idx)), RHO, 1.0, 1000, 0)
    assert cmp.lhs.mean == 0.0 and cmp.rhs.mean == 0.0


def test_mecke_deterministic_over_workers():
    F = mecke_suite(2.0)["damped_product"]
    a = mecke_check(F, RHO, 2.0, 30_000, seed=1)
    b = mecke_check(F, RHO, 2.0, 30_000, seed=1, workers=4)
    assert a.as_dict() == b.as_dict()
