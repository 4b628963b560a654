"""Harnack-type inequalities for the conditional semigroup
P_t^1 f(x) = E[f(X_t^x) 1{τ1 <= t}], with τ1 the first ν0-jump.

    (P_t^1 f(x))^p <= P_t^1 f^p(y) · [(1 − e^{−λ0 t}) V_p(c e^{‖A‖t}|x − y|)]^{p−1}

where c = ‖B1⁻¹‖ and

    V_p(r) = (1/λ0) sup_{|z'|<=r} ∫ ρ0(z − z')^q ρ0(z)^{1−q} dz,  q = p/(p−1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .densities import GaussianDensity, JumpDensity
from .errors import InapplicableHypothesisError, InvalidInputError, UnsupportedDimensionError
from .levy_sim import LevyNoise, TerminalSampler, sample_jump_batch
from .linmodel import OUModel
from .mc import Comparison, MeanEstimate, estimate, paired, run_blocks
from .quadrature import integrate_half_line, integrate_rd, sphere_area, sphere_rule
from .testfunctions import TestFunction

SUP_GRID_POINTS = 64
VP_RTOL = 1e-10
_GOLDEN = (math.sqrt(5) - 1) / 2


def vp_gaussian(p: float, r, variance: float = 1.0):
    """Closed form for ρ0 = λ0 N(m, σ² I): exp(p r² / (2 (p−1)² σ²))."""
    r = np.asarray(r, dtype=float)
    return np.exp(p * r ** 2 / (2 * (p - 1) ** 2 * variance))


def _check_p(p: float) -> float:
    if not p > 1:
        raise InvalidInputError(f"p must be > 1, got {p}")
    return p / (p - 1)


def vp_at_shift(rho: JumpDensity, p: float, shift, rtol: float = VP_RTOL) -> float:
    """(1/λ0) ∫ ρ0(z − z')^q ρ0(z)^{1−q} dz for one shift z'; inf on divergence."""
    q = _check_p(p)
    zp = np.atleast_1d(np.asarray(shift, dtype=float))
    if zp.size != rho.dim:
        raise InvalidInputError("shift has the wrong dimension")
    if rho.dim > 3:
        raise UnsupportedDimensionError("V_p quadrature supports d <= 3")
    if not np.any(zp):
        return 1.0
    broken = [False]

    def integrand(z):
        lnum = rho._logpdf(z - zp)
        lden = rho._logpdf(z)
        out = np.zeros(lnum.shape)
        pos = np.isfinite(lnum)
        if np.any(pos & ~np.isfinite(lden)):
            broken[0] = True
            return np.full(lnum.shape, np.inf)
        with np.errstate(over="ignore", under="ignore"):
            out[pos] = np.exp(q * lnum[pos] + (1 - q) * lden[pos])
        return out

    bps: list[float] = []
    if rho.dim == 1:
        bps = sorted(set(rho.breakpoints()) | {b + zp[0] for b in rho.breakpoints()})
    centre = rho.mode() + zp
    with np.errstate(invalid="ignore"):
        val = integrate_rd(integrand, centre, rho.scale(), rtol=rtol, breakpoints=bps)
    if broken[0] or not math.isfinite(val):
        return math.inf
    return val / rho.lambda0


def _directions(rho: JumpDensity) -> np.ndarray:
    if rho.radial:
        e = np.zeros(rho.dim)
        e[0] = 1.0
        return e[None, :]
    if rho.dim == 1:
        return np.array([[1.0], [-1.0]])
    return sphere_rule(rho.dim, 4 if rho.dim == 3 else 16)[0]


def _golden_max(g: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = g(d)
    return (c, gc) if gc >= gd else (d, gd)


@dataclass(frozen=True)
class VpValue:
    value: float
    argmax_radius: float
    sup_at_boundary: bool


def compute_vp_detail(rho: JumpDensity, p: float, r: float,
                      grid_points: int = SUP_GRID_POINTS, rtol: float = VP_RTOL) -> VpValue:
    """V_p(r) with the location of the supremum.

    The sup over |z'| <= r is taken over ``grid_points`` radii (times a set
    of directions unless ρ0 is radial) and refined by golden-section search
    around the best grid radius.
    """
    _check_p(p)
    if r < 0:
        raise InvalidInputError("r must be >= 0")
    if r == 0:
        return VpValue(1.0, 0.0, True)
    radii = np.linspace(0.0, r, grid_points)
    best = (1.0, 0.0, None)
    for e in _directions(rho):
        vals = np.array([vp_at_shift(rho, p, s * e, rtol) if s > 0 else 1.0 for s in radii])
        if np.isinf(vals).any():
            k = int(np.argmax(np.isinf(vals)))
            return VpValue(math.inf, float(radii[k]), k == grid_points - 1)
        k = int(np.argmax(vals))
        if vals[k] > best[0]:
            best = (float(vals[k]), float(radii[k]), e)
        if 0 < k < grid_points - 1:
            s, v = _golden_max(lambda s: vp_at_shift(rho, p, s * e, rtol),
                               radii[k - 1], radii[k + 1], 1e-6 * r)
            if v > best[0]:
                best = (v, s, e)
    return VpValue(best[0], best[1], best[1] >= r * (1 - 1e-12))


def compute_vp(rho: JumpDensity, p: float, r: float, grid_points: int = SUP_GRID_POINTS) -> float:
    """V_p(r); ``math.inf`` when the integral diverges."""
    return compute_vp_detail(rho, p, r, grid_points).value


@dataclass(frozen=True)
class VpProfile:
    p: float
    rho: JumpDensity
    radii: tuple[float, ...]
    values: tuple[float, ...]
    quadrature_tol: float = VP_RTOL
    sup_grid_points: int = SUP_GRID_POINTS
    sup_at_boundary: bool = True

    @classmethod
    def build(cls, rho: JumpDensity, p: float, radii, grid_points: int = SUP_GRID_POINTS):
        details = [compute_vp_detail(rho, p, float(r), grid_points) for r in radii]
        return cls(p, rho, tuple(float(r) for r in radii), tuple(d.value for d in details),
                   VP_RTOL, grid_points, all(d.sup_at_boundary for d in details))

    def rows(self) -> list[dict]:
        return [{"r": r, "vp": v} for r, v in zip(self.radii, self.values)]


def radial_vp(rho: JumpDensity, p: float) -> Callable[[float], float]:
    """r -> V_p(r) for a radial ρ0, taking the supremum at |z'| = r (the
    non-decreasing case).  Cached; much cheaper than :func:`compute_vp`."""
    if not rho.radial:
        return lambda r: compute_vp(rho, p, r)
    if isinstance(rho, GaussianDensity):
        return lambda r: float(vp_gaussian(p, r, rho.variance))
    e = np.zeros(rho.dim)
    e[0] = 1.0
    return lru_cache(maxsize=None)(lambda r: vp_at_shift(rho, p, r * e))


# ---- conditional semigroup ---------------------------------------------------

def p1_estimate(f: TestFunction, model: OUModel, noise: LevyNoise, x, t: float, replicas: int,
                seed: int = 0, workers: int = 1, stream: int = 0) -> MeanEstimate:
    """E[f(X_t^x) 1{τ1 <= t}]."""
    if t < 0:
        raise InvalidInputError("t must be >= 0")
    sampler = TerminalSampler(model, noise, t)

    def block(rng, size):
        X, b0 = sampler.draw(x, rng, size)
        return f(X) * (b0.counts > 0)

    return estimate(run_blocks(block, replicas, seed, workers, stream), seed)


@dataclass(frozen=True)
class HarnackRecord:
    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float
    radius: float
    vp: float
    p: float

    @property
    def stderr(self) -> float:
        return math.hypot(self.lhs_stderr, self.rhs_stderr)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + 3.0 * self.stderr + 1e-15

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "lhs_stderr": self.lhs_stderr,
                "rhs_stderr": self.rhs_stderr, "margin": self.margin, "radius": self.radius,
                "vp": self.vp, "p": self.p, "pass": self.passed}


def harnack_check(f: TestFunction, model: OUModel, noise: LevyNoise, x, y, t: float, p: float,
                  replicas: int, seed: int = 0, workers: int = 1,
                  vp: Callable[[float], float] | None = None, stream: int = 0) -> HarnackRecord:
    """Both sides of the power Harnack inequality, with delta-method errors.

    P_t^1 f(x) and P_t^1 f^p(y) use independent streams (2·stream and
    2·stream + 1).
    """
    if not f.nonnegative:
        raise InvalidInputError("Harnack inequality needs f >= 0")
    _check_p(p)
    x = np.asarray(x, dtype=float).reshape(model.n)
    y = np.asarray(y, dtype=float).reshape(model.n)
    c = model.split().b1_inv_norm
    radius = c * math.exp(model.a_norm * t) * float(np.linalg.norm(x - y))
    V = (vp or radial_vp(noise.jump0, p))(radius) if radius > 0 else 1.0
    if not math.isfinite(V):
        raise InapplicableHypothesisError("V_p finite", f"V_p({radius:.6g}) diverges")
    ex = p1_estimate(f, model, noise, x, t, replicas, seed, workers, 2 * stream)
    ey = p1_estimate(f.power(p), model, noise, y, t, replicas, seed, workers, 2 * stream + 1)
    K = ((1 - math.exp(-noise.jump0.lambda0 * t)) * V) ** (p - 1)
    lhs = ex.mean ** p
    lhs_se = p * abs(ex.mean) ** (p - 1) * ex.stderr
    return HarnackRecord(lhs, ey.mean * K, lhs_se, ey.stderr * K, radius, V, p)


def ultracontractivity_bound(rho: JumpDensity, p: float, t: float, model: OUModel,
                             vp: Callable[[float], float] | None = None) -> float:
    """(1 − e^{−λ0t}) e^{‖A‖t/p} {∫_{R^n} V_p(κ|x|)^{1−p} dx}^{−1/p}, κ = c e^{‖A‖t}.

    Returns ``math.inf`` when the x-integral diverges (no usable bound).
    """
    _check_p(p)
    n = model.n
    if n > 3:
        raise UnsupportedDimensionError("ultracontractivity bound supports n <= 3")
    if t < 0:
        raise InvalidInputError("t must be >= 0")
    if t == 0:
        return 0.0
    vp = vp or radial_vp(rho, p)
    kappa = model.split().b1_inv_norm * math.exp(model.a_norm * t)

    def g(r):
        v = np.array([vp(kappa * float(ri)) for ri in np.ravel(r)])
        with np.errstate(divide="ignore", over="ignore"):
            w = np.where(np.isinf(v), 0.0, v ** (1 - p))
        return np.ravel(r) ** (n - 1) * w

    radial = integrate_half_line(g, 0.0, 1.0 / kappa, rtol=1e-12)
    integral = sphere_area(n) * radial
    if not math.isfinite(integral) or integral <= 0:
        return math.inf
    return (1 - math.exp(-rho.lambda0 * t)) * math.exp(model.a_norm * t / p) * integral ** (-1 / p)


def semigroup_comparison_check(model: OUModel, noise: LevyNoise, extra_jump: JumpDensity,
                               f: TestFunction, x, t: float, replicas: int, seed: int = 0,
                               workers: int = 1, stream: int = 0) -> Comparison:
    """\\bar P_t f(x) versus e^{−λ t} P_t f(x), where \\bar P_t adds an
    independent compound Poisson process of intensity ``extra_jump``
    (λ = its mass).  The base noise is shared between the sides."""
    if extra_jump.dim != model.d:
        raise InvalidInputError("extra jump dimension differs from B columns")
    sampler = TerminalSampler(model, noise, t)
    factor = math.exp(-extra_jump.lambda0 * t)

    def block(rng, size):
        X, _ = sampler.draw(x, rng, size)
        extra = sample_jump_batch(extra_jump, t, rng, size)
        Xbar = X + sampler.jump_part(extra)
        return np.column_stack([f(Xbar), factor * f(X)])

    return paired(run_blocks(block, replicas, seed, workers, stream), seed)
