"""Total-variation estimates for Lévy-driven OU processes.

The main estimator bounds ‖P_T(x,·) − P_T(y,·)‖_var from simulated jump
data only.  With S = (1/λ0T) Σ η_i and S̃ = (1/λ0T) Σ η̃_i evaluated on one
shared draw of the ν0-compound Poisson process,

    |P_T f(x) − P_T f(y)| ≤ E| f(X_T^y)(1 − S̃) + f(X_T^x)(S − 1) |,

and the supremum over |f| ≤ 1 of the integrand is |1 − S̃| + |S − 1| when
X_T^x ≠ X_T^y (always the case for x ≠ y, since e^{AT} is invertible) and
|S − S̃| when x = y.

Also here: the Gaussian reflection formula, a histogram TV estimator used
as an independent oracle, the Berry–Esseen sharpness experiment, and two
semigroup comparison inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import linregress

from .densities import JumpDensity, clamp
from .errors import (DivisionDomainError, InvalidInputError, PreconditionError,
                     RankDeficientError, UnsupportedDimensionError)
from .levy_sim import LevyNoise, sample_jump_batch, sample_X
from .linmodel import ColumnSplit, OUModel, expm_apply
from .mc import Comparison, MeanEstimate, estimate, paired, run_blocks
from .quadrature import adaptive_gl, integrate_ball, integrate_half_line, integrate_real_line
from .testfunctions import TestFunction

BOOTSTRAP_RESAMPLES = 200
MAX_BINS_PER_AXIS = {1: 20000, 2: 1000, 3: 100}


# ---- configuration ---------------------------------------------------------

@dataclass(frozen=True)
class CouplingConfig:
    """The ball B_{ε/2}(z0) and the constants derived from it."""

    rho: JumpDensity
    z0: np.ndarray
    eps: float
    ball_mass: float
    inverse_integral: float
    sigma_bound: float
    max_step: float
    split: ColumnSplit
    clamped: bool = False

    @property
    def lambda0(self) -> float:
        return self.rho.lambda0

    @property
    def sigma_eta(self) -> float:
        """E η² = λ0 / ν0(B_{ε/2})."""
        return self.lambda0 / self.ball_mass

    def links(self, x, y) -> int:
        """m_{x,y}: number of steps of length <= max_step from x to y (at least 1)."""
        dist = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
        if dist <= self.max_step:
            return 1
        return int(math.ceil(2 * self.split.b1_inv_norm * dist / self.eps - 1e-12))

    def to_dict(self) -> dict:
        return {"z0": self.z0.tolist(), "eps": self.eps, "ball_mass": self.ball_mass,
                "inverse_integral": self.inverse_integral, "sigma_bound": self.sigma_bound,
                "max_step": self.max_step, "lambda0": self.lambda0, "clamped": self.clamped,
                "split": self.split.metadata()}


def _ball_mass(rho: JumpDensity, z0: np.ndarray, radius: float) -> float:
    bps = [p for p in rho.breakpoints() if abs(p - z0[0]) < radius] if rho.dim == 1 else ()
    return integrate_ball(rho._pdf, z0, radius, rtol=1e-11, breakpoints=bps)


def default_eps(rho: JumpDensity, z0) -> float:
    """ε with ν0(B_{ε/2}(z0)) = λ0 / 2."""
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    target = 0.5 * rho.lambda0
    hi = rho.scale()
    while _ball_mass(rho, z0, hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise InvalidInputError("cannot find a ball holding half of the jump mass")
    r = brentq(lambda r: _ball_mass(rho, z0, r) - target, 0.0, hi, xtol=1e-13, rtol=1e-13)
    return 2.0 * r


def coupling_config(rho0: JumpDensity, model: OUModel, z0=None, eps: float | None = None,
                    clamp_density: bool = True) -> CouplingConfig:
    """Assemble the ball, its mass, σ and the single-step distance.

    With ``clamp_density`` the density is replaced by min(ρ0, 1) (a no-op
    when ρ0 <= 1 already); the difference is an independent jump component
    that does not enter the bound.
    """
    if rho0.dim != model.d:
        raise InvalidInputError(f"jump dimension {rho0.dim} != B columns {model.d}")
    try:
        split = model.split()
    except RankDeficientError as exc:
        raise PreconditionError("Rank(B) = n", str(exc)) from None
    rho = clamp(rho0, 1.0) if clamp_density else rho0
    z0 = rho.mode() if z0 is None else np.atleast_1d(np.asarray(z0, dtype=float))
    if z0.size != rho.dim:
        raise InvalidInputError("z0 has the wrong dimension")
    eps = default_eps(rho, z0) if eps is None else float(eps)
    if not eps > 0:
        raise InvalidInputError("eps must be > 0")
    mass = _ball_mass(rho, z0, eps / 2)
    if not mass > 0:
        raise PreconditionError("nu0(B_{eps/2}(z0)) > 0", f"ball mass is {mass}")

    def inv(z):
        with np.errstate(divide="ignore"):
            return 1.0 / rho._pdf(z)

    bps = [p for p in rho.breakpoints() if abs(p - z0[0]) < eps] if rho.dim == 1 else ()
    inv_int = integrate_ball(inv, z0, eps, rtol=1e-10, breakpoints=bps)
    if not math.isfinite(inv_int):
        raise PreconditionError("integrability of 1/rho0 over B_eps(z0)",
                                "rho0 vanishes inside the ball")
    sigma = rho.lambda0 * inv_int / mass ** 2
    return CouplingConfig(rho, z0, eps, mass, inv_int, sigma,
                          eps / (2 * split.b1_inv_norm), split, rho is not rho0)


# ---- weights ---------------------------------------------------------------

def _rows(xi, d: int) -> np.ndarray:
    return np.asarray(xi, dtype=float).reshape(-1, d)


def weight_eta(xi, cfg: CouplingConfig) -> np.ndarray:
    """η = λ0 1_{B_{ε/2}(z0)}(ξ) / ν0(B_{ε/2}), row-wise."""
    xi = _rows(xi, cfg.rho.dim)
    inside = np.linalg.norm(xi - cfg.z0, axis=1) <= cfg.eps / 2
    return (cfg.lambda0 / cfg.ball_mass) * inside


def shift_vectors(tau, x, y, model: OUModel, cfg: CouplingConfig) -> np.ndarray:
    """v_i = B1⁻¹ e^{A τ_i}(x − y), embedded in R^d."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    diff = np.asarray(x, float).reshape(model.n) - np.asarray(y, float).reshape(model.n)
    moved = expm_apply(model.A, tau, np.broadcast_to(diff, (tau.size, model.n)))
    return cfg.split.embed(moved @ cfg.split.B1_inv.T)


def weight_eta_tilde(xi, tau, x, y, model: OUModel, cfg: CouplingConfig) -> np.ndarray:
    """η̃ = (λ0/ν0(B_{ε/2})) ρ0(ξ − v)/ρ0(ξ) 1_{B_{ε/2}(z0) + v}(ξ), row-wise."""
    dist = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if dist > cfg.max_step * (1 + 1e-12):
        raise InvalidInputError(f"|x - y| = {dist} exceeds max_step = {cfg.max_step}")
    xi = _rows(xi, cfg.rho.dim)
    v = shift_vectors(tau, x, y, model, cfg)
    if v.shape[0] == 1 and xi.shape[0] > 1:
        v = np.broadcast_to(v, xi.shape)
    back = xi - v
    inside = np.linalg.norm(back - cfg.z0, axis=1) <= cfg.eps / 2
    out = np.zeros(xi.shape[0])
    if not inside.any():
        return out
    num = cfg.rho._pdf(back[inside])
    den = cfg.rho._pdf(xi[inside])
    if np.any(den <= 0):
        raise DivisionDomainError("rho0 vanishes at a jump inside the shifted ball")
    out[inside] = (cfg.lambda0 / cfg.ball_mass) * (num / den)
    return out


# ---- second-moment gap of the weight sums -----------------------------------

@dataclass(frozen=True)
class GapEstimate:
    estimate: MeanEstimate
    sigma: float
    bound: float
    weights: str

    @property
    def ratio(self) -> float:
        return self.estimate.mean / self.bound


def lemma31_gap(T: float, cfg: CouplingConfig, weights: str = "eta", model: OUModel | None = None,
                x=None, y=None, replicas: int = 200_000, seed: int = 0, workers: int = 1,
                stream: int = 0) -> GapEstimate:
    """E(1 − (1/λ0T) Σ_{i<=N_T} η_i)² and the bound σ/(λ0T).

    ``weights`` is ``"one"`` (η ≡ 1, σ = 1), ``"eta"`` or ``"eta_tilde"``
    (needs model, x, y).
    """
    if not T > 0:
        raise InvalidInputError("T must be > 0")
    lt = cfg.lambda0 * T
    if weights == "one":
        sigma = 1.0
    elif weights == "eta":
        sigma = cfg.sigma_eta
    elif weights == "eta_tilde":
        if model is None or x is None or y is None:
            raise InvalidInputError("eta_tilde weights need model, x and y")
        sigma = cfg.sigma_bound
    else:
        raise InvalidInputError(f"unknown weights {weights!r}")

    def block(rng, size):
        b = sample_jump_batch(cfg.rho, T, rng, size)
        if weights == "one":
            w = np.ones(b.times.size)
        elif weights == "eta":
            w = weight_eta(b.sizes, cfg)
        else:
            w = weight_eta_tilde(b.sizes, b.times, x, y, model, cfg)
        return (1.0 - b.segment_sum(w) / lt) ** 2

    est = estimate(run_blocks(block, replicas, seed, workers, stream), seed)
    return GapEstimate(est, sigma, sigma / lt, weights)


# ---- TV estimates ----------------------------------------------------------

@dataclass(frozen=True)
class TVEstimate:
    value: float
    stderr: float
    method: str
    t: float
    x: tuple = ()
    y: tuple = ()
    raw: float | None = None
    links: int = 1
    replicas: int = 0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"t": self.t, "tv": self.value, "stderr": self.stderr, "method": self.method,
                "raw": self.value if self.raw is None else self.raw, "links": self.links,
                "replicas": self.replicas, **self.extra}


def tv_weight_bound(model: OUModel, cfg: CouplingConfig, x, y, T: float, replicas: int,
                    seed: int = 0, workers: int = 1, stream: int = 0) -> TVEstimate:
    """Upper estimate of ‖P_T(x,·) − P_T(y,·)‖_var from the weight sums.

    For |x − y| > max_step the segment x→y is cut into m_{x,y} equal links
    and the link bounds are added.  Every link has the same displacement,
    and the estimator depends on (x, y) only through x − y, so all links
    share one estimate and the total is m_{x,y} times it.
    """
    if not model.is_dissipative():
        raise PreconditionError("dissipativity <Ax, x> <= 0",
                                "the symmetric part of A has a positive eigenvalue")
    if not T > 0:
        raise InvalidInputError("T must be > 0")
    x = np.asarray(x, dtype=float).reshape(model.n)
    y = np.asarray(y, dtype=float).reshape(model.n)
    m = cfg.links(x, y)
    y_link = x + (y - x) / m
    same = bool(np.all(x == y))
    lt = cfg.lambda0 * T

    def block(rng, size):
        b = sample_jump_batch(cfg.rho, T, rng, size)
        S = b.segment_sum(weight_eta(b.sizes, cfg)) / lt
        St = b.segment_sum(weight_eta_tilde(b.sizes, b.times, x, y_link, model, cfg)) / lt
        if same:
            return np.abs(S - St)
        return np.abs(1.0 - St) + np.abs(S - 1.0)

    est = estimate(run_blocks(block, replicas, seed, workers, stream), seed)
    raw = m * est.mean
    return TVEstimate(min(2.0, raw), m * est.stderr, "weight_bound", float(T),
                      tuple(x.tolist()), tuple(y.tolist()), raw, m, replicas)


def reflection_tv(x, y, t: float) -> float:
    """‖·‖_var distance of Brownian motions from x and y at time t:
    2 √(2/π) ∫_0^{|x−y|/(2√t)} e^{−u²/2} du."""
    if not t > 0:
        raise InvalidInputError("t must be > 0")
    a = float(np.linalg.norm(np.atleast_1d(np.asarray(x, float) - np.asarray(y, float))))
    a /= 2 * math.sqrt(t)
    if a == 0:
        return 0.0
    val = adaptive_gl(lambda u: np.exp(-0.5 * u * u), 0.0, a, rtol=1e-13)
    return 2.0 * math.sqrt(2.0 / math.pi) * float(val)


def _edges(pooled: np.ndarray, bins, dim: int) -> list[np.ndarray]:
    out = []
    for j in range(dim):
        col = pooled[:, j]
        lo, hi = float(col.min()), float(col.max())
        if hi == lo:
            out.append(np.array([lo - 0.5, hi + 0.5]))
            continue
        if isinstance(bins, (int, np.integer)):
            k = int(bins)
        else:
            q75, q25 = np.percentile(col, [75, 25])
            width = 2.0 * (q75 - q25) * col.size ** (-1.0 / 3.0)
            k = int(math.ceil((hi - lo) / width)) if width > 0 else 1
        k = max(1, min(k, MAX_BINS_PER_AXIS[dim]))
        out.append(np.linspace(lo, hi, k + 1))
    return out


def _cells(samples: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    """Flat cell index per sample."""
    idx = np.zeros(samples.shape[0], dtype=np.int64)
    for j, e in enumerate(edges):
        k = np.clip(np.searchsorted(e, samples[:, j], side="right") - 1, 0, e.size - 2)
        idx = idx * (e.size - 1) + k
    return idx


def tv_histogram(samples_x, samples_y, bins="fd", bootstrap: int = BOOTSTRAP_RESAMPLES,
                 seed: int = 0, paired_samples: bool = False, t: float = float("nan")) -> TVEstimate:
    """Σ_cells |p̂_x − p̂_y| on a shared grid (Freedman–Diaconis width per axis).

    The bootstrap resamples cell counts multinomially.  With
    ``paired_samples`` (row i of both arrays generated from the same noise)
    the pairs are resampled jointly, which keeps the positive correlation.
    """
    X = np.asarray(samples_x, dtype=float)
    Y = np.asarray(samples_y, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    Y = Y[:, None] if Y.ndim == 1 else Y
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise InvalidInputError("both sample lists must be non-empty")
    dim = X.shape[1]
    if Y.shape[1] != dim:
        raise InvalidInputError("samples have different dimensions")
    if dim > 3:
        raise UnsupportedDimensionError("histogram TV supports dimension <= 3; "
                                        "use the weight bound instead")
    edges = _edges(np.vstack([X, Y]), bins, dim)
    ncell = int(np.prod([e.size - 1 for e in edges]))
    cx, cy = _cells(X, edges), _cells(Y, edges)
    nx, ny = X.shape[0], Y.shape[0]

    def tv(hx, hy):
        return float(np.abs(hx / nx - hy / ny).sum())

    value = tv(np.bincount(cx, minlength=ncell), np.bincount(cy, minlength=ncell))
    rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 0xB007]))
    reps = np.empty(bootstrap)
    if paired_samples:
        if nx != ny:
            raise InvalidInputError("paired samples need equal lengths")
        pairs, counts = np.unique(cx * ncell + cy, return_counts=True)
        px, py = pairs // ncell, pairs % ncell
        prob = counts / nx
        for b in range(bootstrap):
            w = rng.multinomial(nx, prob)
            reps[b] = tv(np.bincount(px, w, ncell), np.bincount(py, w, ncell))
    else:
        ux, kx = np.unique(cx, return_counts=True)
        uy, ky = np.unique(cy, return_counts=True)
        for b in range(bootstrap):
            hx = np.bincount(ux, rng.multinomial(nx, kx / nx), ncell)
            hy = np.bincount(uy, rng.multinomial(ny, ky / ny), ncell)
            reps[b] = tv(hx, hy)
    stderr = float(reps.std(ddof=1)) if bootstrap > 1 else math.inf
    return TVEstimate(min(2.0, value), stderr, "histogram", t, replicas=nx,
                      extra={"cells": ncell})


def fit_loglog(ts, values) -> dict:
    """OLS fit of log(value) against log(t)."""
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0) or np.any(ts <= 0):
        raise InvalidInputError("log-log fit needs positive data")
    res = linregress(np.log(ts), np.log(vals))
    return {"slope": float(res.slope), "intercept": float(res.intercept),
            "r2": float(res.rvalue ** 2)}


# ---- Berry–Esseen sharpness -----------------------------------------------

def check_standardized(nu: JumpDensity, tol: float = 1e-6) -> dict:
    """Verify by quadrature that ν is a probability law on R with mean 0,
    variance 1 and a finite third absolute moment."""
    if nu.dim != 1:
        raise InvalidInputError("the sharpness experiment is one-dimensional")
    bps = nu.breakpoints()
    mirrored = [-p for p in bps]
    right = lambda k: integrate_half_line(lambda z: z ** k * nu._pdf(z[:, None]), 0.0,
                                          nu.scale(), 1e-11, bps)
    left = lambda k: integrate_half_line(lambda z: z ** k * nu._pdf(-z[:, None]), 0.0,
                                         nu.scale(), 1e-11, mirrored)
    mass = integrate_real_line(lambda z: nu._pdf(z[:, None]), 0.0, nu.scale(), 1e-11, bps)
    mean = right(1) - left(1)
    var = right(2) + left(2) - mean ** 2
    third = right(3) + left(3)
    problems = []
    if abs(mass - 1) > tol:
        problems.append(f"mass {mass:.8g} != 1")
    if abs(mean) > tol:
        problems.append(f"mean {mean:.3g} != 0")
    if abs(var - 1) > tol:
        problems.append(f"variance {var:.8g} != 1")
    if not math.isfinite(third):
        problems.append("third absolute moment is infinite")
    if problems:
        raise InvalidInputError("jump law not standardized: " + "; ".join(problems))
    return {"mass": mass, "mean": mean, "variance": var, "third_abs_moment": third}


def berry_esseen_experiment(nu: JumpDensity, x: float, t_grid, replicas: int = 1_000_000,
                            seed: int = 0, workers: int = 1, bins="fd") -> list[dict]:
    """√t·TV(t) for the rate-1 compound Poisson process with jump law ν,
    started at x versus 0, with TV from paired histograms.

    Both starting points share the noise (X^x = X^0 + x), so x = 0 gives
    exactly zero.
    """
    moments = check_standardized(nu)
    model = OUModel(np.zeros((1, 1)), np.ones((1, 1)))
    noise = LevyNoise(nu)
    rows = []
    for k, t in enumerate(t_grid):
        X0 = sample_X(model, noise, [0.0], t, replicas, seed, workers, stream=k)[:, 0]
        est = tv_histogram(X0 + x, X0, bins=bins, seed=seed + k, paired_samples=True, t=t)
        s = math.sqrt(t)
        rows.append({"t": float(t), "tv": est.value, "stderr": est.stderr,
                     "sqrt_t_tv": s * est.value, "sqrt_t_stderr": s * est.stderr,
                     "cells": est.extra["cells"], "replicas": replicas})
    rows[0]["moments"] = moments
    return rows


# ---- comparison inequalities -----------------------------------------------

def l1_comparison_check(model: OUModel, noise: LevyNoise, f: TestFunction, x, t: float, s: float,
                        replicas: int, seed: int = 0, workers: int = 1,
                        stream: int = 0) -> Comparison:
    """P_{t+s} f(x) versus e^{−λs} P_t f(x) for X_t = x + B L_t, λ = ν(R^d).

    Both sides use one path on [0, t+s]; the right side reads it at t.
    """
    if np.any(model.A):
        raise PreconditionError("A = 0", "the jump comparison needs a driftless linear part")
    if np.any(noise.gaussian_cov):
        raise PreconditionError("pure-jump noise", "gaussian_cov must vanish")
    if np.any(noise.effective_drift()):
        raise PreconditionError("compensated drift b = ∫_{|z|<=1} z nu(dz)",
                                "the effective drift of the simulated process must vanish")
    if not (t >= 0 and s >= 0):
        raise InvalidInputError("t and s must be >= 0")
    lam = noise.total_jump_rate
    x = np.asarray(x, dtype=float).reshape(model.n)
    factor = math.exp(-lam * s)

    def block(rng, size):
        b0, b1 = noise.sample_paths(t + s, rng, size)
        end = np.zeros((size, model.d))
        mid = np.zeros((size, model.d))
        for b in (b0, b1):
            if b is None:
                continue
            end += b.segment_sum(b.sizes)
            mid += b.segment_sum(b.sizes * (b.times <= t)[:, None])
        lhs = f(x + end @ model.B.T)
        rhs = factor * f(x + mid @ model.B.T)
        return np.column_stack([lhs, rhs])

    return paired(run_blocks(block, replicas, seed, workers, stream), seed)


@dataclass(frozen=True)
class DimensionCheck:
    comparison: Comparison
    factor: float
    constant: str
    quadrature: tuple[float, float] | None = None

    @property
    def passed(self) -> bool:
        return self.comparison.lhs_at_most(3.0)


def dimension_factor(n: int, t: float, s: float, constant: str = "kernel") -> float:
    """``kernel``: ((t+s)/t)^{n/2} = sup_z p_t(z)/p_{t+s}(z), valid for all t, s.
    ``swapped``: ((t+s)/s)^{n/2}, valid for s <= t only."""
    if constant == "kernel":
        return ((t + s) / t) ** (n / 2)
    if constant == "swapped":
        return ((t + s) / s) ** (n / 2)
    raise InvalidInputError(f"unknown constant {constant!r}")


def heat_semigroup_quadrature(f: TestFunction, x: float, t: float) -> float:
    """P_t f(x) = E f(x + √t Z) for n = 1 by adaptive quadrature."""
    if t == 0:
        return float(f(np.array([[x]]))[0])
    sd = math.sqrt(t)
    g = lambda z: f(z[:, None]) * np.exp(-0.5 * ((z - x) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
    if not f.nonnegative:
        raise InvalidInputError("quadrature route needs f >= 0")
    return integrate_real_line(g, x, sd, rtol=1e-12, breakpoints=list(f.breakpoints))


def gaussian_dimension_check(n: int, f: TestFunction, t: float, s: float, x, replicas: int,
                             seed: int = 0, workers: int = 1, constant: str = "kernel",
                             stream: int = 0) -> DimensionCheck:
    """P_t f(x) versus factor·P_{t+s} f(x) for Brownian motion in R^n (Q = I).

    The Monte Carlo route shares Z_t between the sides (X_{t+s} = X_t + Z_s);
    for n = 1 both sides are also computed by quadrature.
    """
    if not (t > 0 and s > 0):
        raise InvalidInputError("t and s must be > 0")
    x = np.asarray(x, dtype=float).reshape(n)
    factor = dimension_factor(n, t, s, constant)

    def block(rng, size):
        zt = rng.standard_normal((size, n)) * math.sqrt(t)
        zs = rng.standard_normal((size, n)) * math.sqrt(s)
        return np.column_stack([f(x + zt), factor * f(x + zt + zs)])

    comp = paired(run_blocks(block, replicas, seed, workers, stream), seed)
    quad = None
    if n == 1 and f.nonnegative:
        quad = (heat_semigroup_quadrature(f, float(x[0]), t),
                factor * heat_semigroup_quadrature(f, float(x[0]), t + s))
    return DimensionCheck(comp, factor, constant, quad)
