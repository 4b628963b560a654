"""Finite jump densities rho0 on R^d with total mass lambda0.

A density is both an evaluator ``pdf(z) = rho0(z)`` (points of shape
(..., d)) and a sampler of the normalized law rho0/lambda0.  Samplers never
return the zero vector: the path space excludes zero jumps, so the
(measure-zero) event is redrawn.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import special

from .errors import InvalidDensityError, InvalidInputError, UnsupportedDimensionError
from .quadrature import integrate_ball, integrate_rd, sphere_area


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _points(z, d: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    if z.shape[-1] != d:
        raise InvalidInputError(f"expected points in R^{d}, got shape {z.shape}")
    return z


def _uniform_directions(rng: np.random.Generator, size: int, d: int) -> np.ndarray:
    if d == 1:
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)[:, None]
    g = rng.standard_normal((size, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


class JumpDensity:
    """Base class; subclasses implement ``_pdf`` and ``_draw``."""

    family = "abstract"
    dim: int = 1
    center: np.ndarray | None = None  # radial symmetry centre, if any

    @property
    def lambda0(self) -> float:
        raise NotImplementedError

    @property
    def radial(self) -> bool:
        return self.center is not None

    def pdf(self, z) -> np.ndarray:
        return self._pdf(_points(z, self.dim))

    def _pdf(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _logpdf(self, z: np.ndarray) -> np.ndarray:
        """log rho0 (-inf off the support); overridden where the direct
        density would underflow."""
        with np.errstate(divide="ignore"):
            return np.log(self._pdf(z))

    def _draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` i.i.d. draws of rho0/lambda0, shape (size, d)."""
        out = self._draw(rng, size).reshape(size, self.dim)
        zero = ~np.any(out != 0.0, axis=1)
        while zero.any():
            out[zero] = self._draw(rng, int(zero.sum())).reshape(-1, self.dim)
            zero = ~np.any(out != 0.0, axis=1)
        return out

    def mode(self) -> np.ndarray:
        return np.zeros(self.dim) if self.center is None else np.array(self.center)

    def peak(self) -> float:
        return float(self.pdf(self.mode()[None, :])[0])

    def mean(self) -> np.ndarray | None:
        return None

    def cov(self) -> np.ndarray | None:
        return None

    def scale(self) -> float:
        """Length scale used to seed quadrature windows."""
        return 1.0

    def breakpoints(self) -> list[float]:
        """1-D coordinates where the density is not smooth."""
        return []

    def to_dict(self) -> dict:
        raise NotImplementedError


class GaussianDensity(JumpDensity):
    """rho0 = lambda0 * N(mean, variance * I)."""

    family = "gaussian"

    def __init__(self, variance: float = 1.0, lambda0: float = 1.0, mean=None, dim: int = 1):
        if variance <= 0 or lambda0 <= 0:
            raise InvalidDensityError("gaussian density needs variance > 0 and lambda0 > 0")
        self.variance = float(variance)
        self._lambda0 = float(lambda0)
        self.dim = int(dim) if mean is None else int(np.size(mean))
        self.center = np.zeros(self.dim) if mean is None else np.asarray(mean, float).reshape(self.dim)

    @property
    def lambda0(self) -> float:
        return self._lambda0

    def _pdf(self, z):
        r2 = ((z - self.center) ** 2).sum(axis=-1)
        norm = (2 * math.pi * self.variance) ** (-self.dim / 2)
        return self._lambda0 * norm * np.exp(-0.5 * r2 / self.variance)

    def _logpdf(self, z):
        r2 = ((z - self.center) ** 2).sum(axis=-1)
        return (math.log(self._lambda0) - 0.5 * self.dim * math.log(2 * math.pi * self.variance)
                - 0.5 * r2 / self.variance)

    def _draw(self, rng, size):
        return self.center + math.sqrt(self.variance) * rng.standard_normal((size, self.dim))

    def mean(self):
        return self.center.copy()

    def cov(self):
        return self.variance * np.eye(self.dim)

    def scale(self):
        return math.sqrt(self.variance)

    def to_dict(self):
        return {"family": self.family, "variance": self.variance, "lambda0": self._lambda0,
                "mean": self.center.tolist()}


class PolynomialDecayDensity(JumpDensity):
    """rho0(z) = c (1 + |z|)^{-r}, integrable iff r > d.

    lambda0 = c |S^{d-1}| B(d, r - d); the radius of a draw is U/(1-U) with
    U ~ Beta(d, r - d).
    """

    family = "polynomial_decay"

    def __init__(self, c: float, r: float, dim: int = 1):
        if c <= 0:
            raise InvalidDensityError("polynomial_decay needs c > 0")
        if r <= dim:
            raise InvalidDensityError(f"polynomial_decay needs r > d (r={r}, d={dim})")
        self.c, self.r, self.dim = float(c), float(r), int(dim)
        self.center = np.zeros(self.dim)

    @classmethod
    def from_mass(cls, lambda0: float, r: float, dim: int = 1) -> "PolynomialDecayDensity":
        return cls(lambda0 / (sphere_area(dim) * special.beta(dim, r - dim)), r, dim)

    @property
    def lambda0(self):
        return self.c * sphere_area(self.dim) * special.beta(self.dim, self.r - self.dim)

    def _pdf(self, z):
        return self.c * (1.0 + np.linalg.norm(z, axis=-1)) ** (-self.r)

    def _logpdf(self, z):
        return math.log(self.c) - self.r * np.log1p(np.linalg.norm(z, axis=-1))

    def _draw(self, rng, size):
        u = rng.beta(self.dim, self.r - self.dim, size)
        return (u / (1.0 - u))[:, None] * _uniform_directions(rng, size, self.dim)

    def radial_moment(self, k: float) -> float:
        """E|xi|^k under the normalized law (inf when it diverges)."""
        d, r = self.dim, self.r
        if r - d - k <= 0:
            return math.inf
        return special.beta(d + k, r - d - k) / special.beta(d, r - d)

    def mean(self):
        return np.zeros(self.dim) if self.r > self.dim + 1 else None

    def cov(self):
        m2 = self.radial_moment(2)
        return None if not math.isfinite(m2) else (m2 / self.dim) * np.eye(self.dim)

    def to_dict(self):
        return {"family": self.family, "c": self.c, "r": self.r, "dim": self.dim}


class TruncatedStableDensity(JumpDensity):
    """rho0(z) = c / max(|z|, r_cut)^{d + alpha}: the alpha-stable Lévy
    density with its singular core flattened inside the ball of radius
    r_cut.  lambda0 = c r_cut^{-alpha} |S^{d-1}| (1/d + 1/alpha).
    """

    family = "truncated_stable"

    def __init__(self, c: float, alpha: float, r_cut: float, dim: int = 1):
        if c <= 0 or r_cut <= 0 or not 0 < alpha < 2:
            raise InvalidDensityError("truncated_stable needs c > 0, r_cut > 0, 0 < alpha < 2")
        self.c, self.alpha, self.r_cut, self.dim = float(c), float(alpha), float(r_cut), int(dim)
        self.center = np.zeros(self.dim)

    @property
    def lambda0(self):
        d, a = self.dim, self.alpha
        return self.c * self.r_cut ** (-a) * sphere_area(d) * (1.0 / d + 1.0 / a)

    def _pdf(self, z):
        rad = np.maximum(np.linalg.norm(z, axis=-1), self.r_cut)
        return self.c * rad ** (-(self.dim + self.alpha))

    def _logpdf(self, z):
        rad = np.maximum(np.linalg.norm(z, axis=-1), self.r_cut)
        return math.log(self.c) - (self.dim + self.alpha) * np.log(rad)

    def inner_probability(self) -> float:
        return self.alpha / (self.alpha + self.dim)

    def _draw(self, rng, size):
        inner = rng.random(size) < self.inner_probability()
        u = 1.0 - rng.random(size)
        rad = np.where(inner, self.r_cut * u ** (1.0 / self.dim),
                       self.r_cut * u ** (-1.0 / self.alpha))
        return rad[:, None] * _uniform_directions(rng, size, self.dim)

    def radial_cdf(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        p = self.inner_probability()
        inside = p * (np.clip(s, 0, self.r_cut) / self.r_cut) ** self.dim
        outside = (1 - p) * (1 - (np.maximum(s, self.r_cut) / self.r_cut) ** (-self.alpha))
        return inside + outside

    def mean(self):
        return np.zeros(self.dim) if self.alpha > 1 else None

    def scale(self):
        return self.r_cut

    def breakpoints(self):
        return [-self.r_cut, self.r_cut] if self.dim == 1 else []

    def to_dict(self):
        return {"family": self.family, "c": self.c, "alpha": self.alpha,
                "r_cut": self.r_cut, "dim": self.dim}


class TabulatedDensity(JumpDensity):
    """Density interpolated (multi)linearly from values on a regular grid,
    zero outside the grid.  1-D sampling is exact inverse-CDF on the
    piecewise-linear density; d >= 2 uses rejection from a Gaussian that
    provably dominates the interpolant on every cell.
    """

    family = "tabulated"

    def __init__(self, grid, values):
        if isinstance(grid, np.ndarray) or (len(grid) and np.isscalar(grid[0])):
            axes = [np.asarray(grid, dtype=float)]
        else:
            axes = [np.asarray(g, dtype=float) for g in grid]
        vals = np.asarray(values, dtype=float)
        self.dim = len(axes)
        if self.dim > 3:
            raise UnsupportedDimensionError("tabulated densities support d <= 3")
        if vals.shape != tuple(a.size for a in axes):
            raise InvalidDensityError(f"values shape {vals.shape} does not match grid")
        if any(a.size < 2 or np.any(np.diff(a) <= 0) for a in axes):
            raise InvalidDensityError("grid axes must be strictly increasing with >= 2 points")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise InvalidDensityError("tabulated values must be finite and >= 0")
        self.axes, self.values = axes, vals
        mass = vals
        for a in reversed(axes):
            mass = _trapezoid(mass, a, axis=-1)
        self._lambda0 = float(mass)
        if self._lambda0 <= 0:
            raise InvalidDensityError("tabulated density has zero mass")
        self.center = None
        if self.dim == 1:
            g, v = axes[0], vals
            self._cell_mass = 0.5 * np.diff(g) * (v[:-1] + v[1:])
            self._cdf = np.concatenate([[0.0], np.cumsum(self._cell_mass)])
        else:
            from scipy.interpolate import RegularGridInterpolator

            self._interp = RegularGridInterpolator(axes, vals, bounds_error=False, fill_value=0.0)
            self._setup_rejection()

    @property
    def lambda0(self):
        return self._lambda0

    def _pdf(self, z):
        if self.dim == 1:
            return np.interp(z[..., 0], self.axes[0], self.values, left=0.0, right=0.0)
        flat = z.reshape(-1, self.dim)
        return self._interp(flat).reshape(z.shape[:-1])

    def _draw(self, rng, size):
        if self.dim == 1:
            return self._draw_1d(rng, size)[:, None]
        out = np.empty((size, self.dim))
        filled = 0
        while filled < size:
            k = max(2 * (size - filled), 64)
            prop = rng.multivariate_normal(self._g_mean, self._g_cov, size=k)
            ratio = self._pdf(prop) / (self._bound * self._g_pdf(prop))
            keep = prop[rng.random(k) < ratio]
            take = min(keep.shape[0], size - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out

    def _draw_1d(self, rng, size):
        g, v = self.axes[0], self.values
        u = rng.random(size) * self._lambda0
        j = np.clip(np.searchsorted(self._cdf, u, side="right") - 1, 0, g.size - 2)
        h = g[j + 1] - g[j]
        a, b = v[j], v[j + 1]
        target = u - self._cdf[j]
        slope = (b - a) / h
        # solve a*s + slope*s^2/2 = target for s in [0, h]
        disc = np.maximum(a * a + 2 * slope * target, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s_quad = (np.sqrt(disc) - a) / slope
            s_lin = target / a
        s = np.where(np.abs(slope) * h > 1e-12 * np.maximum(a, 1e-300), s_quad, s_lin)
        return g[j] + np.clip(np.nan_to_num(s), 0.0, h)

    def _setup_rejection(self):
        mesh = np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)
        w = self.values / self.values.sum()
        mu = (mesh * w[..., None]).reshape(-1, self.dim).sum(axis=0)
        dev = (mesh - mu).reshape(-1, self.dim)
        cov = (dev * w.reshape(-1, 1)).T @ dev
        spans = np.array([a[-1] - a[0] for a in self.axes])
        cov = 2.0 * cov + np.diag((spans / 20.0) ** 2)
        self._g_mean, self._g_cov = mu, cov
        inv = np.linalg.inv(cov)
        self._g_norm = 1.0 / math.sqrt((2 * math.pi) ** self.dim * np.linalg.det(cov))
        self._g_inv = inv
        # per-cell bound: max corner value / min corner Gaussian (convexity)
        gp = self._g_pdf(mesh.reshape(-1, self.dim)).reshape(self.values.shape)
        vmax, gmin = self.values, gp
        for ax in range(self.dim):
            sl_lo = [slice(None)] * self.dim
            sl_hi = [slice(None)] * self.dim
            sl_lo[ax], sl_hi[ax] = slice(None, -1), slice(1, None)
            vmax = np.maximum(vmax[tuple(sl_lo)], vmax[tuple(sl_hi)])
            gmin = np.minimum(gmin[tuple(sl_lo)], gmin[tuple(sl_hi)])
        self._bound = float((vmax / gmin).max()) * 1.0000001

    def _g_pdf(self, z):
        dz = z - self._g_mean
        return self._g_norm * np.exp(-0.5 * np.einsum("ni,ij,nj->n", dz, self._g_inv, dz))

    def peak(self):
        return float(self.values.max())

    def mode(self):
        """Centre of the top plateau when it is itself maximal, else the first maximal node."""
        top = np.argwhere(self.values == self.values.max())
        pts = np.array([[a[i] for a, i in zip(self.axes, row)] for row in top])
        centre = pts.mean(axis=0)
        if self._pdf(centre[None, :])[0] >= self.values.max() * (1 - 1e-12):
            return centre
        return pts[0]

    def _moment_1d(self, k: int) -> float:
        from .quadrature import _gl_nodes

        x, w = _gl_nodes(8)
        g, v = self.axes[0], self.values
        lo, hi = g[:-1], g[1:]
        nodes = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x
        vals = np.interp(nodes, g, v) * nodes ** k
        return float((0.5 * (hi - lo) * (vals @ w)).sum() / self._lambda0)

    def mean(self):
        if self.dim == 1:
            return np.array([self._moment_1d(1)])
        return None

    def cov(self):
        if self.dim == 1:
            m1 = self._moment_1d(1)
            return np.array([[self._moment_1d(2) - m1 * m1]])
        return None

    def scale(self):
        return float(max(a[-1] - a[0] for a in self.axes)) / 4

    def breakpoints(self):
        return list(self.axes[0]) if self.dim == 1 else []

    def to_dict(self):
        grid = self.axes[0].tolist() if self.dim == 1 else [a.tolist() for a in self.axes]
        return {"family": self.family, "grid": grid, "values": self.values.tolist()}


class ThinnedDensity(JumpDensity):
    """base.pdf(z) * accept(z) with accept in [0, 1], sampled by thinning
    draws of the base law."""

    def __init__(self, base: JumpDensity, accept, lambda0: float | None = None,
                 family: str = "thinned", params: dict | None = None):
        self.base = base
        self.accept = accept
        self.dim = base.dim
        self.center = None
        self.family = family
        self._params = params or {}
        if lambda0 is None:
            lambda0 = integrate_rd(lambda z: self._pdf(z), self.base.mode(), self.base.scale(),
                                   rtol=1e-10, breakpoints=self.breakpoints())
        if not lambda0 > 0:
            raise InvalidDensityError("thinned density has zero mass")
        self._lambda0 = float(lambda0)

    @property
    def lambda0(self):
        return self._lambda0

    def _pdf(self, z):
        return self.base._pdf(z) * self.accept(z)

    def _draw(self, rng, size):
        out = np.empty((size, self.dim))
        filled = 0
        rate = self._lambda0 / self.base.lambda0
        while filled < size:
            k = int(min(max((size - filled) / max(rate, 1e-3) * 1.2, 64), 1 << 22))
            prop = self.base.sample(rng, k)
            keep = prop[rng.random(k) < self.accept(prop)]
            take = min(keep.shape[0], size - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out

    def mode(self):
        return self.base.mode()

    def scale(self):
        return self.base.scale()

    def breakpoints(self):
        return self.base.breakpoints() + self._params.get("breakpoints", [])

    def to_dict(self):
        return {"family": self.family, "base": self.base.to_dict(),
                **{k: v for k, v in self._params.items() if k != "breakpoints"}}


def clamp(base: JumpDensity, cap: float = 1.0) -> JumpDensity:
    """min(rho0, cap); returns ``base`` itself when it never exceeds cap."""
    if base.peak() <= cap:
        return base
    accept = lambda z: np.minimum(1.0, cap / np.maximum(base._pdf(z), 1e-300))
    out = ThinnedDensity(base, accept, family="clamped", params={"cap": cap})
    return out


def restrict_to_ball(base: JumpDensity, center, radius: float) -> ThinnedDensity:
    """rho0 * 1{|z - center| <= radius}."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if radius <= 0:
        raise InvalidDensityError("ball radius must be > 0")
    bps = [c[0] - radius, c[0] + radius] if base.dim == 1 else []
    mass = integrate_ball(lambda z: base._pdf(z), c, radius,
                          breakpoints=[p for p in base.breakpoints()
                                       if abs(p - c[0]) < radius] if base.dim == 1 else ())
    accept = lambda z: (np.linalg.norm(z - c, axis=-1) <= radius).astype(float)
    return ThinnedDensity(base, accept, lambda0=mass, family="ball_restricted",
                          params={"center": c.tolist(), "radius": radius, "breakpoints": bps})


def density_from_config(spec: dict) -> JumpDensity:
    """Build a density from its config mapping (``family`` plus parameters)."""
    spec = dict(spec)
    family = spec.pop("family", None)
    try:
        if family == "gaussian":
            return GaussianDensity(**spec)
        if family == "polynomial_decay":
            if "lambda0" in spec:
                return PolynomialDecayDensity.from_mass(**spec)
            return PolynomialDecayDensity(**spec)
        if family == "truncated_stable":
            return TruncatedStableDensity(**spec)
        if family == "tabulated":
            return TabulatedDensity(spec.pop("grid"), spec.pop("values"), **spec)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for density family {family!r}: {exc}") from None
    raise InvalidInputError(f"unknown density family {family!r}")


def uniform_interval(low: float, high: float, lambda0: float = 1.0) -> TabulatedDensity:
    """Uniform density on [low, high] as a two-node table."""
    h = lambda0 / (high - low)
    return TabulatedDensity(np.array([low, high]), np.array([h, h]))


__all__: Sequence[str] = [
    "JumpDensity", "GaussianDensity", "PolynomialDecayDensity", "TruncatedStableDensity",
    "TabulatedDensity", "ThinnedDensity", "clamp", "restrict_to_ball",
    "density_from_config", "uniform_interval",
]
