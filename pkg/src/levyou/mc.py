"""Monte Carlo infrastructure: counter-based streams, blocked replica
evaluation and partition-invariant reduction.

Every estimator in the package submits a *block sampler*
``sampler(rng, size) -> ndarray`` that draws ``size`` i.i.d. replica values
from a :class:`numpy.random.Generator`.  Replicas are cut into fixed-size
blocks and block ``b`` always receives the Philox stream keyed by
``(seed, stream << 32 | b)``.  The block layout depends only on the replica
count, never on the worker count, so outputs are bit-identical under any
schedule.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, NonFiniteSampleError

BLOCK_SIZE = 4096
MAX_NONFINITE_FRACTION = 1e-3
_MASK64 = (1 << 64) - 1

BlockSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class RandomStream:
    """A counter-based substream.

    ``(seed, stream_index)`` is the Philox key; ``counter`` is the starting
    value of the Philox block counter.
    """

    seed: int
    stream_index: int
    counter: int = 0

    def generator(self) -> np.random.Generator:
        key = [self.seed & _MASK64, self.stream_index & _MASK64]
        bitgen = np.random.Philox(key=key, counter=[self.counter & _MASK64, 0, 0, 0])
        return np.random.Generator(bitgen)


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    stderr: float
    replicas: int
    seed: int
    nonfinite: int = 0

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        from scipy.stats import norm

        z = float(norm.ppf(0.5 + level / 2.0))
        return self.mean - z * self.stderr, self.mean + z * self.stderr

    def scaled(self, factor: float) -> "MeanEstimate":
        return MeanEstimate(self.mean * factor, self.stderr * abs(factor),
                            self.replicas, self.seed, self.nonfinite)

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr,
                "replicas": self.replicas, "seed": self.seed,
                "nonfinite": self.nonfinite}


def combined_stderr(*estimates: MeanEstimate) -> float:
    """Standard error of a sum/difference of independent estimates."""
    return math.sqrt(sum(e.stderr ** 2 for e in estimates))


def block_stream(seed: int, stream: int, block: int) -> RandomStream:
    if not 0 <= stream < 2 ** 31:
        raise InvalidInputError(f"stream tag {stream} out of range")
    return RandomStream(seed, (stream << 32) | block)


def block_layout(replicas: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """``(block_index, start, size)`` triples covering ``replicas``."""
    if replicas < 1:
        raise InvalidInputError("replicas must be >= 1")
    out = []
    for b, start in enumerate(range(0, replicas, block_size)):
        out.append((b, start, min(block_size, replicas - start)))
    return out


def run_blocks(sampler: BlockSampler, replicas: int, seed: int, workers: int = 1,
               stream: int = 0, block_size: int = BLOCK_SIZE) -> np.ndarray:
    """Evaluate ``sampler`` over all replicas; rows are in replica order."""
    layout = block_layout(replicas, block_size)

    def one(item):
        b, _, size = item
        rng = block_stream(seed, stream, b).generator()
        vals = np.asarray(sampler(rng, size), dtype=float)
        if vals.shape[0] != size:
            raise InvalidInputError(
                f"sampler returned {vals.shape[0]} rows for a block of {size}")
        return vals

    if workers <= 1 or len(layout) == 1:
        parts = [one(item) for item in layout]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, layout))
    return np.concatenate(parts, axis=0)


def estimate(values: np.ndarray, seed: int = 0) -> MeanEstimate:
    """Mean and standard error of a 1-D sample with exact-rounded sums."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InvalidInputError("no samples to reduce")
    finite = np.isfinite(v)
    bad = int(v.size - finite.sum())
    if bad > MAX_NONFINITE_FRACTION * v.size:
        raise NonFiniteSampleError(
            f"{bad} of {v.size} samples are non-finite (limit "
            f"{MAX_NONFINITE_FRACTION:.1%}); first bad index "
            f"{int(np.flatnonzero(~finite)[0])}")
    if bad:
        v = v[finite]
    n = v.size
    mean = math.fsum(v) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = math.inf
    return MeanEstimate(mean, stderr, n, seed, bad)


def mc_reduce(sampler: BlockSampler, replicas: int, seed: int, workers: int = 1,
              stream: int = 0) -> MeanEstimate:
    """Single-output reduction of a block sampler."""
    return estimate(run_blocks(sampler, replicas, seed, workers, stream), seed)


def mc_reduce_columns(sampler: BlockSampler, replicas: int, seed: int,
                      workers: int = 1, stream: int = 0) -> tuple[list[MeanEstimate], np.ndarray]:
    """Reduce each column of a multi-output sampler; also return the raw rows
    so callers can form paired differences."""
    rows = run_blocks(sampler, replicas, seed, workers, stream)
    if rows.ndim == 1:
        rows = rows[:, None]
    return [estimate(rows[:, j], seed) for j in range(rows.shape[1])], rows



@dataclass(frozen=True)
class Comparison:
    """Two estimates computed on common random numbers, plus their paired
    difference ``lhs - rhs`` (whose stderr is the one to test against)."""

    lhs: MeanEstimate
    rhs: MeanEstimate
    diff: MeanEstimate

    @property
    def z_score(self) -> float:
        if self.diff.stderr == 0.0:
            return 0.0 if self.diff.mean == 0.0 else math.copysign(math.inf, self.diff.mean)
        return self.diff.mean / self.diff.stderr

    def agrees(self, k: float = 3.0) -> bool:
        return abs(self.diff.mean) <= k * self.diff.stderr + 1e-12 * (1 + abs(self.lhs.mean))

    def lhs_at_least(self, k: float = 3.0) -> bool:
        return self.diff.mean >= -k * self.diff.stderr - 1e-12 * (1 + abs(self.lhs.mean))

    def lhs_at_most(self, k: float = 3.0) -> bool:
        return self.diff.mean <= k * self.diff.stderr + 1e-12 * (1 + abs(self.lhs.mean))

    def as_dict(self) -> dict:
        return {"lhs_mean": self.lhs.mean, "lhs_stderr": self.lhs.stderr,
                "rhs_mean": self.rhs.mean, "rhs_stderr": self.rhs.stderr,
                "diff_mean": self.diff.mean, "diff_stderr": self.diff.stderr,
                "z_score": self.z_score, "replicas": self.lhs.replicas, "seed": self.lhs.seed}


def paired(rows: np.ndarray, seed: int) -> Comparison:
    """Comparison from an (R, 2) array of per-replica (lhs, rhs) values."""
    rows = np.asarray(rows, dtype=float)
    return Comparison(estimate(rows[:, 0], seed), estimate(rows[:, 1], seed),
                      estimate(rows[:, 0] - rows[:, 1], seed))
