"""Named, parameterized test functions f: R^n -> R.

Configs select functions by name, so results stay reproducible and no
expression evaluation is needed.  Every function takes points of shape
(N, n) and returns N values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class TestFunction:
    name: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sup: float
    lipschitz: float | None = None
    breakpoints: tuple[float, ...] = ()
    nonnegative: bool = True

    __test__ = False  # not a pytest class

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return np.asarray(self.fn(X), dtype=float)

    def power(self, p: float) -> "TestFunction":
        """x -> f(x)^p for non-negative f."""
        if not self.nonnegative:
            raise InvalidInputError(f"{self.name} can take negative values; f^p undefined")
        base = self
        return TestFunction(f"{self.name}^{p:g}", {**self.params, "power": p},
                            lambda X: base(X) ** p, self.sup ** p, None, self.breakpoints)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


def _vec(v, name: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be finite")
    return a


def constant(value: float = 1.0) -> TestFunction:
    return TestFunction("constant", {"value": value},
                        lambda X: np.full(X.shape[0], float(value)), abs(value), 0.0, (),
                        value >= 0)


def indicator_halfspace(normal=(1.0,), offset: float = 0.0) -> TestFunction:
    """1{<normal, x> >= offset}."""
    nv = _vec(normal, "normal")
    bps = (offset / nv[0],) if nv.size == 1 and nv[0] != 0 else ()
    return TestFunction("indicator_halfspace", {"normal": nv.tolist(), "offset": offset},
                        lambda X: (X @ nv >= offset).astype(float), 1.0, None, bps)


def indicator_ball(center=(0.0,), radius: float = 1.0) -> TestFunction:
    c = _vec(center, "center")
    bps = (c[0] - radius, c[0] + radius) if c.size == 1 else ()
    return TestFunction("indicator_ball", {"center": c.tolist(), "radius": radius},
                        lambda X: (np.linalg.norm(X - c, axis=1) <= radius).astype(float),
                        1.0, None, bps)


def indicator_interval(low: float = 0.0, high: float = 1.0) -> TestFunction:
    """1{low <= x_0 <= high}, on the first coordinate."""
    if not low < high:
        raise InvalidInputError("indicator_interval needs low < high")
    return TestFunction("indicator_interval", {"low": low, "high": high},
                        lambda X: ((X[:, 0] >= low) & (X[:, 0] <= high)).astype(float),
                        1.0, None, (low, high))


def sign(normal=(1.0,), offset: float = 0.0) -> TestFunction:
    """sign(<normal, x> - offset), values in {-1, 0, 1}."""
    nv = _vec(normal, "normal")
    bps = (offset / nv[0],) if nv.size == 1 and nv[0] != 0 else ()
    return TestFunction("sign", {"normal": nv.tolist(), "offset": offset},
                        lambda X: np.sign(X @ nv - offset), 1.0, None, bps, False)


def exp_bump(center=(0.0,), width: float = 1.0, height: float = 1.0) -> TestFunction:
    """height * exp(-|x - center|^2 / (2 width^2))."""
    c = _vec(center, "center")
    if not (width > 0 and height >= 0):
        raise InvalidInputError("exp_bump needs width > 0 and height >= 0")
    lip = height / (width * math.sqrt(math.e))
    return TestFunction("exp_bump", {"center": c.tolist(), "width": width, "height": height},
                        lambda X: height * np.exp(-((X - c) ** 2).sum(axis=1) / (2 * width ** 2)),
                        height, lip)


def lipschitz_ramp(normal=(1.0,), offset: float = 0.0, slope: float = 1.0) -> TestFunction:
    """clip(slope * (<normal, x> - offset), 0, 1)."""
    nv = _vec(normal, "normal")
    return TestFunction("lipschitz_ramp", {"normal": nv.tolist(), "offset": offset, "slope": slope},
                        lambda X: np.clip(slope * (X @ nv - offset), 0.0, 1.0), 1.0,
                        abs(slope) * float(np.linalg.norm(nv)))


def normalized_bump(center=(0.0,), width: float = 1.0, p: float = 2.0) -> TestFunction:
    """Gaussian bump scaled so that ∫ f^p dx = 1 over R^n, n = len(center)."""
    c = _vec(center, "center")
    n = c.size
    height = (2 * math.pi * width ** 2 / p) ** (-n / (2 * p))
    f = exp_bump(c, width, height)
    return TestFunction("normalized_bump", {"center": c.tolist(), "width": width, "p": p},
                        f.fn, height, f.lipschitz)


LIBRARY: dict[str, Callable[..., TestFunction]] = {
    "constant": constant,
    "indicator_halfspace": indicator_halfspace,
    "indicator_ball": indicator_ball,
    "indicator_interval": indicator_interval,
    "sign": sign,
    "exp_bump": exp_bump,
    "lipschitz_ramp": lipschitz_ramp,
    "normalized_bump": normalized_bump,
}


def from_config(spec: dict | str) -> TestFunction:
    """Build from ``{"name": ..., <params>}`` or a bare name."""
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in LIBRARY:
        raise InvalidInputError(f"unknown test function {name!r}; choose from {sorted(LIBRARY)}")
    try:
        return LIBRARY[name](**spec)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for {name}: {exc}") from None
