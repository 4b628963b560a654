"""Compound-Poisson paths, the Lévy noise split L = L^1 + L^0, and the
closed-form OU solution

    X_t^x = e^{At} x + ∫_0^t e^{A(t-s)} B dL_s.

Jump paths come in two shapes: :class:`JumpPath` (one realization) and
:class:`PathBatch` (many replicas in flat CSR layout, which is what the
vectorized estimators consume).  Both are drawn by the same routine, so a
one-replica batch consumes the random stream exactly like a single path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .densities import JumpDensity
from .errors import InvalidInputError
from .linmodel import OUModel, expm_apply, exp_integral, matrix_exp
from .mc import run_blocks
from .quadrature import adaptive_gl, integrate_ball

COV_RTOL = 1e-10
CHOLESKY_JITTER = 1e-14


@dataclass(frozen=True)
class JumpPath:
    """Jumps of a pure-jump path on [0, horizon]: sorted times, non-zero sizes."""

    horizon: float
    times: np.ndarray
    sizes: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float).ravel()
        s = np.asarray(self.sizes, dtype=float)
        if s.ndim == 1:
            s = s.reshape(t.size, -1) if t.size else s.reshape(0, max(1, s.size))
        if s.shape[0] != t.size:
            raise InvalidInputError("times and sizes must have equal length")
        if t.size and (np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > self.horizon):
            raise InvalidInputError("jump times must be strictly increasing in [0, horizon]")
        if t.size and np.any(~np.any(s != 0.0, axis=1)):
            raise InvalidInputError("jump sizes must be non-zero")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sizes", s)

    @classmethod
    def empty(cls, horizon: float, dim: int = 1) -> "JumpPath":
        return cls(horizon, np.zeros(0), np.zeros((0, dim)))

    @property
    def dim(self) -> int:
        return self.sizes.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def value(self, t: float) -> np.ndarray:
        """w_t = sum of the jumps at times <= t."""
        return self.sizes[self.times <= t].sum(axis=0)


def count_jumps(path: JumpPath, T: float) -> int:
    """#{t in [0, T] : w_t != w_{t-}}, endpoint included."""
    if T > path.horizon:
        raise InvalidInputError(f"T = {T} exceeds the path horizon {path.horizon}")
    return int(np.count_nonzero(path.times <= T))


@dataclass
class PathBatch:
    """R jump paths in CSR layout: replica r owns rows offsets[r]:offsets[r+1]."""

    horizon: float
    counts: np.ndarray
    times: np.ndarray
    sizes: np.ndarray
    offsets: np.ndarray = field(init=False)
    owner: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.counts)])
        self.owner = np.repeat(np.arange(self.counts.size), self.counts)

    @property
    def replicas(self) -> int:
        return self.counts.size

    @property
    def dim(self) -> int:
        return self.sizes.shape[1]

    def path(self, r: int) -> JumpPath:
        lo, hi = self.offsets[r], self.offsets[r + 1]
        return JumpPath(self.horizon, self.times[lo:hi], self.sizes[lo:hi])

    def segment_sum(self, values: np.ndarray) -> np.ndarray:
        """Per-replica sums of per-jump values (first axis indexed by jump)."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            return np.bincount(self.owner, values, self.replicas)
        flat = values.reshape(values.shape[0], int(np.prod(values.shape[1:])))
        cols = [np.bincount(self.owner, flat[:, j], self.replicas) for j in range(flat.shape[1])]
        return np.stack(cols, axis=1).reshape((self.replicas,) + values.shape[1:])

    def count_upto(self, T: float) -> np.ndarray:
        return np.bincount(self.owner[self.times <= T], minlength=self.replicas)

    def kth_time(self, k: int) -> np.ndarray:
        """Time of the k-th jump (1-based) per replica, +inf if there is none."""
        out = np.full(self.replicas, np.inf)
        has = self.counts >= k
        out[has] = self.times[self.offsets[:-1][has] + k - 1]
        return out

    def with_extra_jump(self, times: np.ndarray, sizes: np.ndarray,
                        return_index: bool = False):
        """Add one jump (times[r], sizes[r]) to every replica, keeping order.

        With ``return_index`` also returns the flat position of each added jump.
        """
        times = np.asarray(times, dtype=float)
        sizes = np.asarray(sizes, dtype=float).reshape(self.replicas, self.dim)
        owner = np.concatenate([self.owner, np.arange(self.replicas)])
        t = np.concatenate([self.times, times])
        s = np.concatenate([self.sizes, sizes])
        order = np.lexsort((t, owner))
        out = PathBatch(max(self.horizon, float(times.max(initial=0.0))),
                        self.counts + 1, t[order], s[order])
        if not return_index:
            return out
        inv = np.empty_like(order)
        inv[order] = np.arange(order.size)
        return out, inv[self.times.size:]

    def without_jumps(self, drop: np.ndarray) -> "PathBatch":
        keep = ~np.asarray(drop, dtype=bool)
        counts = np.bincount(self.owner[keep], minlength=self.replicas)
        return PathBatch(self.horizon, counts, self.times[keep], self.sizes[keep])

    def write_csv(self, path: str | Path, replica_offset: int = 0) -> None:
        """Columns: replica, jump_index, time, size_0 .. size_{d-1}."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replica", "jump_index", "time"] + [f"size_{j}" for j in range(self.dim)])
            for k in range(self.times.size):
                r = int(self.owner[k])
                w.writerow([r + replica_offset, k - int(self.offsets[r]), repr(float(self.times[k]))]
                           + [repr(float(v)) for v in self.sizes[k]])


def sample_jump_batch(density: JumpDensity, T: float, rng: np.random.Generator,
                      size: int) -> PathBatch:
    """``size`` independent compound-Poisson paths of intensity rho0 on [0, T].

    Counts are Poisson(lambda0 T); given the count k, the times are the
    order statistics of k uniforms, generated as normalized partial sums of
    k + 1 exponential spacings; sizes are i.i.d. rho0/lambda0.
    """
    if not T >= 0:
        raise InvalidInputError(f"horizon must be >= 0, got {T}")
    counts = rng.poisson(density.lambda0 * T, size).astype(np.int64)
    spac = rng.standard_exponential(int(counts.sum()) + size)
    seg = counts + 1
    ends = np.cumsum(seg)
    starts = ends - seg
    cs = np.cumsum(spac)
    base = np.where(starts > 0, cs[starts - 1], 0.0)
    totals = cs[ends - 1] - base
    idx = np.ones(spac.size, dtype=bool)
    idx[ends - 1] = False
    owner = np.repeat(np.arange(size), counts)
    times = T * (cs[idx] - base[owner]) / totals[owner]
    sizes = density.sample(rng, int(counts.sum()))
    return PathBatch(float(T), counts, times, sizes)


def sample_jump_path(density: JumpDensity, T: float, rng: np.random.Generator) -> JumpPath:
    return sample_jump_batch(density, T, rng, 1).path(0)


@dataclass(frozen=True)
class LevyNoise:
    """Lévy triplet in simulation form.

    ``drift`` is the effective drift of the simulated process: jumps are
    added uncompensated, so a generator drift b = ∫_{|z|<=1} z nu(dz)
    corresponds to ``drift = 0`` here.  ``gaussian_cov`` is the covariance
    per unit time of the Gaussian part.  ``jump0`` is the absolutely
    continuous part nu0 that the coupling and Harnack constructions act on;
    ``jump1`` is an optional independent finite remainder.  With
    ``small_jump_truncation = eps`` the remainder's jumps below eps are
    dropped and their mean is moved into the drift.
    """

    jump0: JumpDensity
    drift: np.ndarray | None = None
    gaussian_cov: np.ndarray | None = None
    jump1: JumpDensity | None = None
    small_jump_truncation: float | None = None

    def __post_init__(self) -> None:
        d = self.jump0.dim
        b = np.zeros(d) if self.drift is None else np.asarray(self.drift, float).reshape(-1)
        Q = np.zeros((d, d)) if self.gaussian_cov is None else np.atleast_2d(
            np.asarray(self.gaussian_cov, float))
        if b.size != d or Q.shape != (d, d):
            raise InvalidInputError(f"drift/covariance must match the jump dimension {d}")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise InvalidInputError("gaussian_cov must be symmetric")
        if Q.any() and np.linalg.eigvalsh(Q).min() < -1e-12:
            raise InvalidInputError("gaussian_cov must be positive semidefinite")
        if self.jump1 is not None and self.jump1.dim != d:
            raise InvalidInputError("jump1 dimension differs from jump0")
        if not self.jump0.lambda0 > 0:
            raise InvalidInputError("jump0 must have positive mass")
        object.__setattr__(self, "drift", b)
        object.__setattr__(self, "gaussian_cov", Q)

    @property
    def dim(self) -> int:
        return self.jump0.dim

    @property
    def total_jump_rate(self) -> float:
        return self.jump0.lambda0 + (self.jump1.lambda0 if self.jump1 is not None else 0.0)

    def effective_drift(self) -> np.ndarray:
        eps = self.small_jump_truncation
        if not eps or self.jump1 is None:
            return self.drift
        j1 = self.jump1
        moved = np.array([integrate_ball(lambda z, i=i: z[:, i] * j1._pdf(z), np.zeros(self.dim),
                                         eps, rtol=1e-10)
                          for i in range(self.dim)])
        return self.drift + moved

    def sample_paths(self, T: float, rng: np.random.Generator, size: int
                     ) -> tuple[PathBatch, PathBatch | None]:
        """Draw (L^0, L^1) jump batches; L^0 first, then L^1."""
        b0 = sample_jump_batch(self.jump0, T, rng, size)
        b1 = None
        if self.jump1 is not None:
            b1 = sample_jump_batch(self.jump1, T, rng, size)
            eps = self.small_jump_truncation
            if eps:
                b1 = b1.without_jumps(np.linalg.norm(b1.sizes, axis=1) < eps)
        return b0, b1

    def to_dict(self) -> dict:
        return {"jump0": self.jump0.to_dict(), "drift": self.drift.tolist(),
                "gaussian_cov": self.gaussian_cov.tolist(),
                "jump1": None if self.jump1 is None else self.jump1.to_dict(),
                "small_jump_truncation": self.small_jump_truncation}


def gaussian_covariance(model: OUModel, Q: np.ndarray, t: float, rtol: float = COV_RTOL) -> np.ndarray:
    """∫_0^t e^{Au} B Q B^T e^{A^T u} du by adaptive Gauss-Legendre."""
    BQB = model.B @ Q @ model.B.T
    if t <= 0 or not BQB.any():
        return np.zeros((model.n, model.n))

    def integrand(u):
        E = matrix_exp(model.A, u)
        return E @ BQB @ np.swapaxes(E, -1, -2)

    S = np.asarray(adaptive_gl(integrand, 0.0, t, rtol=rtol))
    return 0.5 * (S + S.T)


def _cholesky(S: np.ndarray) -> np.ndarray:
    jitter = CHOLESKY_JITTER * max(1.0, float(np.abs(np.diag(S)).max(initial=0.0)))
    return np.linalg.cholesky(S + jitter * np.eye(S.shape[0]))


class TerminalSampler:
    """Precomputes the deterministic pieces of X_t for fixed (model, noise, t)."""

    def __init__(self, model: OUModel, noise: LevyNoise, t: float):
        if noise.dim != model.d:
            raise InvalidInputError(f"noise dimension {noise.dim} != B columns {model.d}")
        if t < 0:
            raise InvalidInputError("t must be >= 0")
        self.model, self.noise, self.t = model, noise, float(t)
        self.eAt = matrix_exp(model.A, t)
        self.drift_term = exp_integral(model.A, t, model.B @ noise.effective_drift())
        S = gaussian_covariance(model, noise.gaussian_cov, t)
        self.chol = _cholesky(S) if S.any() else None

    def jump_part(self, batch: PathBatch | None, upto: float | None = None) -> np.ndarray:
        """Per replica: sum over jumps tau_i <= t of e^{A(t - tau_i)} B xi_i."""
        if batch is None:
            return 0.0
        t = self.t
        mask = batch.times <= (t if upto is None else upto)
        pushed = batch.sizes @ self.model.B.T
        contrib = expm_apply(self.model.A, t - batch.times, pushed)
        contrib[~mask] = 0.0
        return batch.segment_sum(contrib)

    def terminal(self, x, b0: PathBatch, b1: PathBatch | None, rng: np.random.Generator | None
                 ) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.model.n)
        X = (self.eAt @ x + self.drift_term)[None, :] + self.jump_part(b0)
        X = X + self.jump_part(b1)
        if self.chol is not None:
            X = X + rng.standard_normal((b0.replicas, self.model.n)) @ self.chol.T
        return X

    def draw(self, x, rng: np.random.Generator, size: int) -> tuple[np.ndarray, PathBatch]:
        """Fresh replicas of X_t^x; also returns the L^0 batch."""
        b0, b1 = self.noise.sample_paths(self.t, rng, size)
        return self.terminal(x, b0, b1, rng), b0


def _as_batch(path: JumpPath | None) -> PathBatch | None:
    if path is None:
        return None
    return PathBatch(path.horizon, np.array([len(path)]), path.times, path.sizes)


def ou_terminal_state(model: OUModel, noise: LevyNoise, path0: JumpPath, path1: JumpPath | None,
                      x, t: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """X_t^x for given L^0 / L^1 jump paths.

    Jumps after t are ignored; the Gaussian part (if any) is drawn from
    ``rng`` with the exact covariance of ∫_0^t e^{A(t-s)} B dW^Q_s.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.n or path0.dim != model.d or (path1 is not None and path1.dim != model.d):
        raise InvalidInputError("dimension mismatch between model, paths and x")
    if t > path0.horizon or (path1 is not None and t > path1.horizon):
        raise InvalidInputError("t exceeds a path horizon")
    sampler = TerminalSampler(model, noise, t)
    if sampler.chol is not None and rng is None:
        raise InvalidInputError("a random stream is required when the noise has a Gaussian part")
    return sampler.terminal(x, _as_batch(path0), _as_batch(path1), rng)[0]


def sample_X(model: OUModel, noise: LevyNoise, x, t: float, replicas: int, seed: int,
             workers: int = 1, stream: int = 0) -> np.ndarray:
    """``replicas`` i.i.d. draws of X_t^x, shape (replicas, n)."""
    sampler = TerminalSampler(model, noise, t)

    def block(rng, size):
        X, _ = sampler.draw(x, rng, size)
        return X

    return run_blocks(block, replicas, seed, workers, stream)


def poisson_pmf(k: np.ndarray, mean: float) -> np.ndarray:
    from scipy.stats import poisson

    return poisson.pmf(k, mean)


def erlang_tail(m: int, mean: float) -> float:
    """P(N >= m) for N ~ Poisson(mean), i.e. P(tau_m <= t) with mean = lambda0 t."""
    return 1.0 - sum(math.exp(-mean) * mean ** k / math.factorial(k) for k in range(m))
