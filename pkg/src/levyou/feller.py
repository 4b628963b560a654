"""Controllability rank conditions, sampled lower bounds for t_m, the
conditional semigroup P_t^m f(x) = E[f(X_t^x) 1{τ_m <= t ∧ (τ_1 + t_m)}],
and an empirical smoothing modulus for it.

Rank of (e^{s_1A}B, …, e^{s_mA}B) for a tuple s_1 < … < s_m is tested
after two exact transformations that keep the column span:

1. factor out e^{s_1A} (invertible), leaving shifts δ_k = s_k − s_1;
2. replace the blocks e^{δ_kA}B by the divided differences of δ ↦ e^{δA}
   at (δ_1, …, δ_k), read off the first block row of the exponential of
   the block-bidiagonal matrix with diagonal δ_kA and superdiagonal A.

For clustered tuples the divided differences tend to A^{k−1}B/(k−1)!, so
the rank decision is as well conditioned as the Kalman matrix itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, PreconditionError
from .levy_sim import LevyNoise, TerminalSampler
from .linmodel import OUModel, expm_batch, matrix_exp
from .mc import MeanEstimate, estimate, run_blocks
from .testfunctions import TestFunction

KALMAN_RTOL = 1e-12
TUPLE_RTOL = 1e-10
CLUSTER_SPACING = 1e-6
BISECTION_STEPS = 40
REFINE_STARTS = 3


@dataclass(frozen=True)
class RankReport:
    m: int
    n: int
    rank_H: int
    satisfied: bool
    tm_lower: float | None = None
    tuples_tested: int = 0
    t_max_searched: float | None = None
    failure_example: tuple | None = None
    note: str = ""

    @property
    def tm_is_search_limit(self) -> bool:
        """True when no failure occurred up to the searched horizon."""
        return self.tm_lower is not None and self.tm_lower == self.t_max_searched

    def effective_tm(self) -> float:
        """t_m for the P^m event: +inf when the search found no failure."""
        if self.tm_lower is None:
            raise InvalidInputError("report has no t_m search")
        return math.inf if self.tm_is_search_limit else self.tm_lower

    def as_dict(self) -> dict:
        out = {"m": self.m, "n": self.n, "rank_H": self.rank_H, "satisfied": self.satisfied}
        if self.tm_lower is not None:
            out.update({"tm_lower": self.tm_lower, "tm_kind": "statistical lower bound",
                        "tuples_tested": self.tuples_tested,
                        "t_max_searched": self.t_max_searched,
                        "failure_example": self.failure_example, "note": self.note})
        return out


def kalman_matrix(model: OUModel, m: int) -> np.ndarray:
    """(B, AB, …, A^{m−1}B), n × md."""
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    blocks = [model.B]
    for _ in range(m - 1):
        blocks.append(model.A @ blocks[-1])
    return np.hstack(blocks)


def numerical_rank(M: np.ndarray, rtol: float = KALMAN_RTOL) -> int:
    if not M.size:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.count_nonzero(sv > M.shape[0] * sv[0] * rtol))


def rank_condition(model: OUModel, m: int) -> RankReport:
    """Numerical rank of the Kalman matrix with m blocks."""
    r = numerical_rank(kalman_matrix(model, m))
    return RankReport(m, model.n, r, r == model.n)


def divided_difference_blocks(model: OUModel, tuples: np.ndarray) -> np.ndarray:
    """For tuples (K, m), sorted ascending, return (K, n, m·d) matrices whose
    column span equals that of (e^{s_1A}B, …, e^{s_mA}B) up to e^{s_1A}."""
    tuples = np.asarray(tuples, dtype=float)
    K, m = tuples.shape
    n = model.n
    delta = tuples - tuples[:, :1]
    Z = np.zeros((K, m * n, m * n))
    for k in range(m):
        Z[:, k * n:(k + 1) * n, k * n:(k + 1) * n] = delta[:, k, None, None] * model.A
        if k + 1 < m:
            Z[:, k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = model.A
    top = expm_batch(Z)[:, :n, :]
    return np.concatenate([top[:, :, k * n:(k + 1) * n] @ model.B for k in range(m)], axis=2)


def rank_margin(model: OUModel, tuples: np.ndarray) -> np.ndarray:
    """σ_n / σ_1 of the column-normalized divided-difference matrix, per tuple
    (0 when fewer than n columns or all columns vanish)."""
    M = divided_difference_blocks(model, tuples)
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    M = np.where(norms > 0, M / np.where(norms > 0, norms, 1.0), 0.0)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.shape[1] < model.n:
        return np.zeros(M.shape[0])
    top = sv[:, 0]
    return np.where(top > 0, sv[:, model.n - 1] / np.where(top > 0, top, 1.0), 0.0)


def tuples_full_rank(model: OUModel, tuples: np.ndarray, rtol: float = TUPLE_RTOL) -> np.ndarray:
    """Boolean per tuple: does (e^{s_iA}B)_i span R^n?"""
    return rank_margin(model, tuples) > rtol


def _refine(model: OUModel, start: np.ndarray, t: float) -> tuple[float, np.ndarray]:
    """Locally minimize the rank margin over ordered tuples in [0, t]."""
    from scipy.optimize import minimize

    def margin(u):
        return float(rank_margin(model, np.sort(np.clip(u, 0.0, t))[None, :])[0])

    res = minimize(margin, start, method="Nelder-Mead",
                   options={"xatol": 1e-13 * max(t, 1.0), "fatol": 1e-16, "maxiter": 400 * start.size})
    return float(res.fun), np.sort(np.clip(res.x, 0.0, t))


def _candidate_tuples(rng: np.random.Generator, t: float, m: int, samples: int) -> np.ndarray:
    """Random ordered tuples in [0, t], clustered tuples and endpoint tuples."""
    uniform = np.sort(rng.uniform(0.0, t, (samples, m)), axis=1)
    span = CLUSTER_SPACING * (m - 1)
    starts = rng.uniform(0.0, max(t - span, 0.0), max(samples // 4, 1))
    clustered = starts[:, None] + CLUSTER_SPACING * np.arange(m)[None, :]
    ends = [np.linspace(0.0, t, m)]
    if m > 1:
        ends.append(np.concatenate([[0.0], t - CLUSTER_SPACING * np.arange(m - 2, -1, -1)]))
        ends.append(np.concatenate([CLUSTER_SPACING * np.arange(m - 1), [t]]))
    out = np.vstack([uniform, clustered, np.array(ends)])
    ok = np.all(np.diff(out, axis=1) > 0, axis=1) if m > 1 else np.ones(out.shape[0], bool)
    return np.clip(out[ok], 0.0, t)


def estimate_tm(model: OUModel, m: int, t_max: float, tuple_samples: int = 10_000,
                seed: int = 0) -> RankReport:
    """Largest t (by bisection, up to t_max) at which no sampled ordered
    m-tuple in [0, t] loses rank.  A statistical lower bound for t_m.

    Each candidate horizon draws uniform, clustered and endpoint tuples;
    the few with the smallest rank margin are then pushed toward a
    degeneracy by Nelder–Mead, which catches isolated rank drops that
    random sampling alone would miss.
    """
    if m < 1 or not t_max > 0:
        raise InvalidInputError("need m >= 1 and t_max > 0")
    if tuple_samples < 1000:
        raise InvalidInputError("tuple_samples must be >= 1000")
    base = rank_condition(model, m)
    if not base.satisfied:
        return RankReport(m, model.n, base.rank_H, False, 0.0, 0, t_max,
                          note="rank condition fails; t_m = 0")
    tested = 0
    bad_example = None

    def passes(t: float, k: int) -> bool:
        nonlocal tested, bad_example
        rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 0x7E11 + k]))
        tup = _candidate_tuples(rng, t, m, tuple_samples)
        tested += tup.shape[0]
        marg = rank_margin(model, tup)
        if np.any(marg <= TUPLE_RTOL):
            bad_example = tuple(float(v) for v in tup[np.argmin(marg)])
            return False
        if m > 1:
            for i in np.argsort(marg)[:REFINE_STARTS]:
                val, where = _refine(model, tup[i], t)
                tested += 1
                if val <= TUPLE_RTOL:
                    bad_example = tuple(float(v) for v in where)
                    return False
        return True

    if passes(t_max, 0):
        return RankReport(m, model.n, base.rank_H, True, float(t_max), tested, float(t_max),
                          note="no failure up to the searched horizon; treated as t_m = inf")
    lo, hi = 0.0, float(t_max)
    for k in range(1, BISECTION_STEPS + 1):
        mid = 0.5 * (lo + hi)
        if passes(mid, k):
            lo = mid
        else:
            hi = mid
    return RankReport(m, model.n, base.rank_H, True, lo, tested, float(t_max), bad_example,
                      note=f"first failure bracketed in ({lo:.6g}, {hi:.6g}]")


# ---- conditional semigroup P^m ---------------------------------------------

def _event(b0, t: float, m: int, tm: float) -> np.ndarray:
    tau_m = b0.kth_time(m)
    limit = np.minimum(t, b0.kth_time(1) + tm) if math.isfinite(tm) else t
    return tau_m <= limit


def pm_estimate(f: TestFunction, model: OUModel, noise: LevyNoise, x, t: float, m: int,
                tm: float, replicas: int, seed: int = 0, workers: int = 1,
                stream: int = 0) -> MeanEstimate:
    """E[f(X_t^x) 1{τ_m <= t ∧ (τ_1 + t_m)}]; ``tm = inf`` gives {τ_m <= t}."""
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    if t < 0:
        raise InvalidInputError("t must be >= 0")
    sampler = TerminalSampler(model, noise, t)

    def block(rng, size):
        X, b0 = sampler.draw(x, rng, size)
        return f(X) * _event(b0, t, m, tm)

    return estimate(run_blocks(block, replicas, seed, workers, stream), seed)


@dataclass(frozen=True)
class ModulusRow:
    h: float
    increment: float
    stderr: float
    signed: float

    def as_dict(self) -> dict:
        return {"h": self.h, "increment": self.increment, "stderr": self.stderr,
                "signed": self.signed}


def smoothing_modulus(f: TestFunction, model: OUModel, noise: LevyNoise, x, t: float, m: int,
                      tm: float, radii, replicas: int, seed: int = 0, workers: int = 1,
                      direction=None, stream: int = 0) -> list[ModulusRow]:
    """|P_t^m f(x) − P_t^m f(x + h e)| for each h, on common random numbers.

    X_t^{x+he} = X_t^x + h e^{At} e pathwise, so one simulation serves all
    radii, and h = 0 gives exactly zero.
    """
    report = rank_condition(model, m)
    if not report.satisfied:
        raise PreconditionError("rank condition Rank(B, AB, ..., A^{m-1}B) = n",
                                f"rank is {report.rank_H} < {model.n}")
    e = np.zeros(model.n) if direction is None else np.asarray(direction, float).reshape(model.n)
    if direction is None:
        e[0] = 1.0
    e = e / np.linalg.norm(e)
    radii = np.asarray(list(radii), dtype=float)
    moved = radii[:, None] * (matrix_exp(model.A, t) @ e)[None, :]
    sampler = TerminalSampler(model, noise, t)

    def block(rng, size):
        X, b0 = sampler.draw(x, rng, size)
        ind = _event(b0, t, m, tm)
        base = f(X)
        cols = [ind * (base - f(X + moved[k])) for k in range(radii.size)]
        return np.column_stack(cols) if cols else np.zeros((size, 0))

    rows = run_blocks(block, replicas, seed, workers, stream)
    out = []
    for k, h in enumerate(radii):
        est = estimate(rows[:, k], seed)
        out.append(ModulusRow(float(h), abs(est.mean), est.stderr, est.mean))
    return out
