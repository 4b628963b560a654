"""Adaptive Gauss-Legendre quadrature on intervals, the real line, balls and
R^d for d <= 3.

Integrands are vectorized: ``f(x)`` receives an array of nodes and returns
one value (or one vector/matrix) per node.  In d >= 2 integration is done
in spherical coordinates about a centre: adaptive Gauss-Legendre in the
radius times a product rule on the sphere, the latter refined until two
angular resolutions agree.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import UnsupportedDimensionError

GL_ORDER = 16
MAX_LEVEL = 48
MAX_SHELLS = 200


@lru_cache(maxsize=None)
def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _gl_panels(f, lo: np.ndarray, hi: np.ndarray, order: int) -> np.ndarray:
    """Gauss-Legendre estimate on each panel [lo_k, hi_k]."""
    x, w = _gl_nodes(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float)
    vals = vals.reshape((lo.size, order) + vals.shape[1:])
    wshape = (1, order) + (1,) * (vals.ndim - 2)
    return half.reshape((-1,) + (1,) * (vals.ndim - 2)) * (vals * w.reshape(wshape)).sum(axis=1)


def _mag(v: np.ndarray) -> np.ndarray:
    """Per-panel magnitude of a (panels, ...) array."""
    if v.ndim == 1:
        return np.abs(v)
    return np.abs(v).reshape(v.shape[0], -1).max(axis=1)


def adaptive_gl(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                rtol: float = 1e-10, atol: float = 0.0, order: int = GL_ORDER,
                breakpoints: Sequence[float] = ()) -> np.ndarray | float:
    """Globally adaptive Gauss-Legendre on [a, b].

    Each panel is compared against its two halves; a panel is accepted once
    the discrepancy is within its length-proportional share of
    ``max(atol, rtol*|I|)``.
    """
    if a == b:
        probe = np.asarray(f(np.array([a])), dtype=float)
        return np.zeros(probe.shape[1:]) if probe.ndim > 1 else 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = np.array(sorted({a, b, *[p for p in breakpoints if a < p < b]}), dtype=float)
    lo, hi = edges[:-1], edges[1:]
    length = b - a
    total = None
    level = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        coarse = _gl_panels(f, lo, hi, order)
        fine = _gl_panels(f, np.concatenate([lo, mid]), np.concatenate([mid, hi]), order)
        fine = fine[: lo.size] + fine[lo.size:]
        if not (np.all(np.isfinite(coarse)) and np.all(np.isfinite(fine))):
            if np.any(np.isnan(fine)) or np.any(np.isnan(coarse)):
                return math.nan
            return sign * math.inf
        err = _mag(coarse - fine)
        acc_sum = fine.sum(axis=0) if total is None else total + fine.sum(axis=0)
        scale = max(atol, rtol * float(np.max(np.abs(acc_sum))))
        ok = err <= scale * (hi - lo) / length
        if level >= MAX_LEVEL:
            ok[:] = True
        part = fine[ok].sum(axis=0)
        total = part if total is None else total + part
        lo = np.concatenate([lo[~ok], mid[~ok]])
        hi = np.concatenate([mid[~ok], hi[~ok]])
        level += 1
    if np.ndim(total) == 0:
        return sign * float(total)
    return sign * total


def integrate_half_line(g: Callable[[np.ndarray], np.ndarray], start: float, scale: float,
                        rtol: float = 1e-10, breakpoints: Sequence[float] = (),
                        detect_divergence: bool = True) -> float:
    """∫_start^∞ g for a scalar, non-negative integrand.

    Integrates [start, start+scale] and then doubling shells.  Once the
    shell contributions decay geometrically, the remaining tail is
    extrapolated as a geometric series; shells that stop decaying signal a
    divergent integral and ``inf`` is returned.
    """
    edge = start + scale
    total = adaptive_gl(g, start, edge, rtol=rtol * 0.1,
                        breakpoints=[p for p in breakpoints if start < p < edge])
    width = scale
    shells: list[float] = []
    for _ in range(MAX_SHELLS):
        nxt = edge + width
        bps = [p for p in breakpoints if edge < p < nxt]
        s = float(adaptive_gl(g, edge, nxt, rtol=rtol * 0.1, atol=1e-300, breakpoints=bps))
        if not math.isfinite(s):
            return math.inf
        total += s
        shells.append(s)
        edge, width = nxt, width * 2.0
        if any(p > edge for p in breakpoints):
            continue
        if s <= rtol * 1e-3 * abs(total):
            break
        if len(shells) >= 3 and shells[-2] > 0 and shells[-3] > 0:
            r1 = shells[-1] / shells[-2]
            r0 = shells[-2] / shells[-3]
            if r1 < 1.0 and abs(r1 - r0) <= 0.02 * r0:
                tail = s * r1 / (1.0 - r1)
                if tail <= rtol * abs(total) * 10 or len(shells) > 40:
                    return total + tail
            if detect_divergence and len(shells) >= 8 and r1 >= 0.999 and r0 >= 0.999:
                return math.inf
    else:
        if detect_divergence:
            return math.inf
    return total


def integrate_real_line(f: Callable[[np.ndarray], np.ndarray], center: float = 0.0,
                        scale: float = 1.0, rtol: float = 1e-10,
                        breakpoints: Sequence[float] = ()) -> float:
    """∫_R f for a scalar, non-negative integrand concentrated near ``center``."""
    right = integrate_half_line(f, center, scale, rtol, breakpoints)
    mirrored = [2 * center - p for p in breakpoints]
    left = integrate_half_line(lambda x: f(2 * center - x), center, scale, rtol, mirrored)
    return right + left


@lru_cache(maxsize=None)
def sphere_rule(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions on S^{d-1} and weights summing to its surface area."""
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        th = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([np.cos(th), np.sin(th)]), np.full(n, 2 * np.pi / n)
    if d == 3:
        u, wu = _gl_nodes(n)
        m = 2 * n
        ph = 2 * np.pi * (np.arange(m) + 0.5) / m
        s = np.sqrt(1 - u ** 2)
        dirs = np.stack([np.outer(s, np.cos(ph)), np.outer(s, np.sin(ph)),
                         np.outer(u, np.ones(m))], axis=-1).reshape(-1, 3)
        w = np.outer(wu, np.full(m, 2 * np.pi / m)).ravel()
        return dirs, w
    raise UnsupportedDimensionError(f"spherical quadrature supports d <= 3, got {d}")


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} (2 for d = 1)."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def _radial(f, center: np.ndarray, d: int, n_ang: int):
    dirs, w = sphere_rule(d, n_ang)

    def g(r: np.ndarray) -> np.ndarray:
        pts = center[None, None, :] + r[:, None, None] * dirs[None, :, :]
        vals = np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(r.size, dirs.shape[0])
        return r ** (d - 1) * (vals @ w)

    return g


def _angular_refine(run: Callable[[int], float], rtol: float, n0: int = 32,
                    n_max: int = 512) -> float:
    n = n0
    prev = run(n)
    while n < n_max:
        n *= 2
        cur = run(n)
        if not math.isfinite(cur) or abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev


def integrate_ball(f: Callable[[np.ndarray], np.ndarray], center, radius: float,
                   rtol: float = 1e-10, breakpoints: Sequence[float] = ()) -> float:
    """∫ over {|z - center| <= radius} of f; ``f`` takes points of shape (N, d).

    ``breakpoints`` (1-D only) are coordinates where f is non-smooth.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    d = c.size
    if radius <= 0:
        return 0.0
    if d == 1:
        g = lambda x: f(x[:, None])
        return float(adaptive_gl(g, c[0] - radius, c[0] + radius, rtol=rtol,
                                 breakpoints=breakpoints))
    if d > 3:
        raise UnsupportedDimensionError(f"ball quadrature supports d <= 3, got {d}")
    return _angular_refine(
        lambda n: float(adaptive_gl(_radial(f, c, d, n), 0.0, radius, rtol=rtol)), rtol)


def integrate_rd(f: Callable[[np.ndarray], np.ndarray], center, scale: float = 1.0,
                 rtol: float = 1e-10, breakpoints: Sequence[float] = ()) -> float:
    """∫_{R^d} f for a non-negative integrand, d <= 3; ``inf`` on divergence."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    d = c.size
    if d == 1:
        return integrate_real_line(lambda x: f(x[:, None]), float(c[0]), scale, rtol,
                                   breakpoints)
    if d > 3:
        raise UnsupportedDimensionError(f"R^d quadrature supports d <= 3, got {d}")
    return _angular_refine(
        lambda n: integrate_half_line(_radial(f, c, d, n), 0.0, scale, rtol), rtol)
