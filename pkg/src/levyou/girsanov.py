"""Random path shifts w -> w + xi 1_{[tau, inf)}, the shift density U, and
Monte Carlo checks of the Mecke identity and of the conditional Girsanov
formula

    E[F(L) 1_{U(L) > 0}] = E[(F / U)(L + xi 1_{[tau, inf)})].

Functionals act on whole batches so the checks stay vectorized:

* a path functional is ``F(batch, rng) -> (R,)``;
* a Mecke functional is ``F(batch, idx) -> (len(idx),)``, evaluating
  F(gamma, z) for the configuration gamma of replica ``batch.owner[idx]``
  at its point z = (batch.times[idx], batch.sizes[idx]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .densities import JumpDensity
from .errors import ConsistencyError, InvalidDensityError, InvalidInputError, InvalidShiftError
from .levy_sim import JumpPath, LevyNoise, PathBatch, TerminalSampler, sample_jump_batch
from .linmodel import OUModel
from .mc import Comparison, paired, run_blocks

PathFunctional = Callable[[PathBatch, np.random.Generator], np.ndarray]
MeckeFunctional = Callable[[PathBatch, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ShiftSpec:
    """Law of the shift (xi, tau) and the density g of (L, xi, tau) w.r.t.
    law(L) x nu(dz) x dt.

    Only independent, product-form shifts are sampled: xi ~ xi_law /
    xi_law.lambda0 and tau ~ Uniform[0, T], independent of L, for which
    g(w, z, t) = h(z) / T with h = (xi_law / xi_law.lambda0) / nu.
    ``g`` can still be overridden for evaluating U with a general density.
    """

    xi_law: JumpDensity
    nu: JumpDensity
    horizon: float
    eps_atom: float = 0.0
    g: Callable[[JumpPath, np.ndarray, float], float] | None = None

    def __post_init__(self) -> None:
        if not self.horizon > 0:
            raise InvalidInputError("shift horizon must be > 0")
        if self.eps_atom < 0:
            raise InvalidInputError("eps_atom must be >= 0")
        if self.xi_law.dim != self.nu.dim:
            raise InvalidInputError("xi_law and nu live in different dimensions")

    @classmethod
    def uniform(cls, nu: JumpDensity, horizon: float) -> "ShiftSpec":
        """xi ~ nu / lambda0, tau ~ U[0, T]; then g = 1 / (lambda0 T)."""
        return cls(nu, nu, horizon)

    @property
    def product_form(self) -> bool:
        return self.g is None

    def h(self, z: np.ndarray) -> np.ndarray:
        """Density of the xi law relative to nu, at points z of shape (K, d)."""
        z = np.asarray(z, dtype=float).reshape(-1, self.nu.dim)
        if self.xi_law is self.nu:
            return np.full(z.shape[0], 1.0 / self.nu.lambda0)
        num = self.xi_law.pdf(z) / self.xi_law.lambda0
        den = self.nu.pdf(z)
        bad = (num > 0) & (den <= 0)
        if np.any(bad):
            raise InvalidDensityError("xi law is not absolutely continuous w.r.t. nu")
        out = np.zeros_like(num)
        pos = num > 0
        out[pos] = num[pos] / den[pos]
        return out

    def g_values(self, z: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.horizon)
        return self.h(z) * inside / self.horizon

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw (xi, tau); xi first."""
        xi = self.xi_law.sample(rng, size)
        tau = self.horizon * rng.random(size)
        return xi, tau


def shift_path(path: JumpPath, xi, tau: float) -> JumpPath:
    """The path with one extra jump of size xi at time tau."""
    xi = np.asarray(xi, dtype=float).reshape(path.dim)
    if not np.any(xi != 0):
        raise InvalidShiftError("shift xi must be non-zero")
    if not 0 <= tau <= path.horizon:
        raise InvalidInputError(f"tau = {tau} outside [0, {path.horizon}]")
    if np.any(path.times == tau):
        raise InvalidShiftError("tau coincides with an existing jump time")
    times = np.append(path.times, tau)
    sizes = np.vstack([path.sizes, xi[None, :]])
    order = np.argsort(times, kind="stable")
    return JumpPath(path.horizon, times[order], sizes[order])


def _remove_jump(path: JumpPath, i: int) -> JumpPath:
    keep = np.arange(len(path)) != i
    return JumpPath(path.horizon, path.times[keep], path.sizes[keep])


def density_U(path: JumpPath, spec: ShiftSpec, T: float | None = None) -> float:
    """U(w) = eps + sum over jumps (t, dw_t), t <= T, of g(w - dw_t 1_{[t, inf)}, dw_t, t)."""
    T = spec.horizon if T is None else T
    mask = path.times <= T
    if spec.product_form:
        vals = spec.g_values(path.sizes[mask], path.times[mask])
    else:
        idx = np.flatnonzero(mask)
        vals = np.array([spec.g(_remove_jump(path, i), path.sizes[i], float(path.times[i]))
                         for i in idx], dtype=float)
    if np.any(vals < 0):
        raise InvalidDensityError("g returned a negative value")
    return float(spec.eps_atom + math.fsum(vals))


def density_U_batch(batch: PathBatch, spec: ShiftSpec) -> np.ndarray:
    """Vectorized U for product-form specs."""
    if not spec.product_form:
        return np.array([density_U(batch.path(r), spec) for r in range(batch.replicas)])
    vals = spec.g_values(batch.sizes, batch.times)
    return spec.eps_atom + batch.segment_sum(vals)


# ---- path functionals ------------------------------------------------------

def constant_functional(c: float = 1.0) -> PathFunctional:
    return lambda batch, rng: np.full(batch.replicas, float(c))


def jump_count_functional(T: float) -> PathFunctional:
    """F(w) = n_T(w)."""
    return lambda batch, rng: batch.count_upto(T).astype(float)


def terminal_functional(model: OUModel, noise: LevyNoise, f: Callable[[np.ndarray], np.ndarray],
                        x, t: float) -> PathFunctional:
    """F(w) = f(X_t^x) with L^0 = w.  Any Gaussian part or L^1 is drawn
    afresh from ``rng``, which keeps E[F] a functional of w alone."""
    sampler = TerminalSampler(model, noise, t)

    def F(batch: PathBatch, rng: np.random.Generator) -> np.ndarray:
        b1 = None
        if noise.jump1 is not None:
            _, b1 = noise.sample_paths(t, rng, batch.replicas)
        return np.asarray(f(sampler.terminal(x, batch, b1, rng)), dtype=float)

    return F


def girsanov_check(F: PathFunctional, spec: ShiftSpec, replicas: int, seed: int,
                   workers: int = 1, stream: int = 0) -> Comparison:
    """Both sides of the conditional Girsanov identity on shared draws of L^0.

    L^0 is the compound Poisson process with intensity ``spec.nu`` on
    [0, spec.horizon].  Per replica: F(L) 1_{U(L)>0} and F(L')/U(L') with
    L' = L + xi 1_{[tau, inf)}.
    """
    if spec.eps_atom != 0:
        raise InvalidInputError("girsanov_check needs eps_atom = 0 (xi != 0 a.s.)")
    T = spec.horizon

    def block(rng, size):
        batch = sample_jump_batch(spec.nu, T, rng, size)
        xi, tau = spec.sample(rng, size)
        shifted = batch.with_extra_jump(tau, xi)
        U = density_U_batch(batch, spec)
        U_shift = density_U_batch(shifted, spec)
        if np.any(U_shift <= 0):
            raise ConsistencyError("U vanished on a shifted path")
        lhs = F(batch, rng) * (U > 0)
        rhs = F(shifted, rng) / U_shift
        return np.column_stack([lhs, rhs])

    return paired(run_blocks(block, replicas, seed, workers, stream), seed)


# ---- Mecke -----------------------------------------------------------------

def mecke_check(F: MeckeFunctional, density: JumpDensity, T: float, replicas: int, seed: int,
                workers: int = 1, stream: int = 0) -> Comparison:
    """Both sides of the Mecke identity for the Poisson process with
    intensity sigma = nu0 x Lebesgue on R^d x [0, T]:

        LHS = sigma(total) E[F(gamma + delta_Z, Z)],  Z ~ sigma / sigma(total)
        RHS = E[sum_{z in gamma} F(gamma, z)]

    evaluated on the same gamma per replica.
    """
    if not T > 0:
        raise InvalidInputError("T must be > 0")
    mass = density.lambda0 * T

    def block(rng, size):
        batch = sample_jump_batch(density, T, rng, size)
        z = density.sample(rng, size)
        tz = T * rng.random(size)
        plus, idx = batch.with_extra_jump(tz, z, return_index=True)
        lhs = mass * _checked(F(plus, idx))
        rhs = batch.segment_sum(_checked(F(batch, np.arange(batch.times.size))))
        return np.column_stack([lhs, rhs])

    return paired(run_blocks(block, replicas, seed, workers, stream), seed)


def _checked(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("functional returned a non-finite value")
    return v


def mecke_suite(T: float) -> dict[str, MeckeFunctional]:
    """Five functionals: indicators, linear statistics and products."""

    def indicator(b, idx):
        return ((np.abs(b.sizes[idx]).max(axis=1) <= 1.0) & (b.times[idx] <= 0.5 * T)).astype(float)

    def total_count(b, idx):
        return b.counts[b.owner[idx]].astype(float)

    def earlier_points(b, idx):
        rank = idx - b.offsets[b.owner[idx]]
        return np.linalg.norm(b.sizes[idx], axis=1) * np.minimum(rank, 3)

    def damped_product(b, idx):
        sq = b.segment_sum((b.sizes ** 2).sum(axis=1))
        return np.cos(b.sizes[idx, 0]) ** 2 / (1.0 + sq[b.owner[idx]])

    def time_weighted(b, idx):
        return (b.times[idx] / T) * np.exp(-0.25 * b.counts[b.owner[idx]])

    return {"indicator": indicator, "total_count": total_count,
            "earlier_points": earlier_points, "damped_product": damped_product,
            "time_weighted": time_weighted}
