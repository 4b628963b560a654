"""Linear-algebra substrate for dX = AX dt + B dL.

Matrix exponentials use scaling and squaring around a fixed diagonal Padé
approximant of degree 8.  After scaling the 1-norm to at most 1, the
truncation error of the [8/8] approximant is below 3e-19, so the result is
accurate to roughly 1e-13 relative for well-conditioned inputs (the
squaring phase dominates the error budget).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, RankDeficientError

PADE_DEGREE = 8
_THETA = 1.0
DISSIPATIVE_TOL = 1e-10
EXHAUSTIVE_SPLIT_LIMIT = 200


def _pade_coefficients(q: int) -> np.ndarray:
    f = math.factorial
    return np.array([f(2 * q - k) * f(q) / (f(2 * q) * f(k) * f(q - k))
                     for k in range(q + 1)])


_PADE_C = _pade_coefficients(PADE_DEGREE)


def _as_matrix(A, name: str = "A") -> np.ndarray:
    M = np.array(A, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def expm_batch(X: np.ndarray) -> np.ndarray:
    """exp of a stack of square matrices, shape (..., n, n).

    One squaring count is shared by the whole stack (chosen from the largest
    norm); over-scaling the small members costs only a few ulps.
    """
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("matrix exponential of non-finite input")
    n = X.shape[-1]
    if X.size == 0:
        return X.copy()
    norm1 = np.abs(X).sum(axis=-2).max()
    squarings = 0 if norm1 <= _THETA else int(math.ceil(math.log2(norm1 / _THETA)))
    Xs = X / (2.0 ** squarings)
    eye = np.broadcast_to(np.eye(n), X.shape)
    power = eye
    num = _PADE_C[0] * eye
    den = _PADE_C[0] * eye
    for k in range(1, PADE_DEGREE + 1):
        power = power @ Xs
        num = num + _PADE_C[k] * power
        den = den + ((-1) ** k * _PADE_C[k]) * power
    R = np.linalg.solve(den, num)
    for _ in range(squarings):
        R = R @ R
    return R


def matrix_exp(A, s=1.0) -> np.ndarray:
    """e^{sA}.  ``s`` may be an array of times, giving a stack of results."""
    M = _as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"A must be square, got {M.shape}")
    s_arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s_arr)):
        raise InvalidInputError("time must be finite")
    if s_arr.ndim == 0:
        return expm_batch(float(s_arr) * M)
    return expm_batch(s_arr.reshape(-1, 1, 1) * M).reshape(s_arr.shape + M.shape)


def expm_apply(A: np.ndarray, times: np.ndarray, vectors: np.ndarray,
               chunk: int = 1 << 15) -> np.ndarray:
    """Row-wise e^{A t_k} v_k for times (K,) and vectors (K, n)."""
    A = np.asarray(A, dtype=float)
    V = np.asarray(vectors, dtype=float)
    t = np.asarray(times, dtype=float).ravel()
    if not np.any(A):
        return V.copy()
    out = np.empty_like(V)
    for lo in range(0, t.size, chunk):
        hi = min(lo + chunk, t.size)
        E = expm_batch(t[lo:hi, None, None] * A)
        out[lo:hi] = np.einsum("kij,kj->ki", E, V[lo:hi])
    return out


def exp_integral(A, t: float, v) -> np.ndarray:
    """∫_0^t e^{Au} du · v, from the exponential of an augmented matrix."""
    A = _as_matrix(A)
    n = A.shape[0]
    v = np.asarray(v, dtype=float).reshape(n)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A
    aug[:n, n] = v
    return expm_batch(t * aug)[:n, n]


def check_dissipative(A, tol: float = DISSIPATIVE_TOL) -> bool:
    """True iff <Ax, x> <= tol |x|^2 for all x."""
    if tol < 0:
        raise InvalidInputError("tol must be >= 0")
    M = _as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"A must be square, got {M.shape}")
    sym = 0.5 * (M + M.T)
    return bool(np.linalg.eigvalsh(sym).max() <= tol)


def operator_norm(A) -> float:
    """Spectral norm (largest singular value)."""
    M = _as_matrix(A)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


@dataclass(frozen=True)
class ColumnSplit:
    """B with its columns permuted into (B1 | B2), B1 invertible n x n."""

    permutation: tuple[int, ...]
    B1: np.ndarray
    B2: np.ndarray
    B1_inv: np.ndarray
    b1_inv_norm: float
    method: str = "exhaustive"
    candidates: int = 1

    @property
    def n(self) -> int:
        return self.B1.shape[0]

    @property
    def d(self) -> int:
        return len(self.permutation)

    def recombine(self) -> np.ndarray:
        """Undo the permutation: returns the original B."""
        permuted = np.hstack([self.B1, self.B2])
        B = np.empty_like(permuted)
        B[:, list(self.permutation)] = permuted
        return B

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Lift v in R^n (rows) to R^d so that B @ embed(v) == B1 @ v."""
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape[:-1] + (self.d,))
        out[..., list(self.permutation[: self.n])] = v
        return out

    def metadata(self) -> dict:
        return {"permutation": list(self.permutation), "b1_inv_norm": self.b1_inv_norm,
                "method": self.method, "candidates": self.candidates}


def column_split(B) -> ColumnSplit:
    """Choose n columns of B forming an invertible B1 with minimal ||B1^{-1}||.

    All C(d, n) subsets are scanned when there are at most 200 of them;
    otherwise the subset comes from QR with column pivoting.
    """
    B = _as_matrix(B, "B")
    n, d = B.shape
    if d < n or np.linalg.matrix_rank(B) < n:
        raise RankDeficientError(f"Rank(B) < n = {n}")
    if math.comb(d, n) <= EXHAUSTIVE_SPLIT_LIMIT:
        best = None
        count = 0
        for cols in itertools.combinations(range(d), n):
            count += 1
            smin = np.linalg.svd(B[:, cols], compute_uv=False)[-1]
            if smin <= 1e-14 * max(1.0, np.abs(B).max()):
                continue
            norm = 1.0 / smin
            if best is None or norm < best[0] * (1 - 1e-12):
                best = (norm, cols)
        if best is None:
            raise RankDeficientError("no invertible n-column subset found")
        chosen, method = best[1], "exhaustive"
    else:
        from scipy.linalg import qr

        _, _, piv = qr(B, pivoting=True, mode="economic")
        chosen, method, count = tuple(sorted(piv[:n])), "qr-greedy", 1
    rest = tuple(j for j in range(d) if j not in chosen)
    perm = tuple(chosen) + rest
    B1 = B[:, list(chosen)]
    B1_inv = np.linalg.inv(B1)
    return ColumnSplit(perm, B1, B[:, list(rest)].reshape(n, len(rest)), B1_inv,
                       operator_norm(B1_inv), method, count)


@dataclass(frozen=True)
class OUModel:
    """The pair (A, B) of dX = AX dt + B dL, with A n x n and B n x d."""

    A: np.ndarray
    B: np.ndarray
    _split: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise InvalidInputError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise InvalidInputError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    @property
    def a_norm(self) -> float:
        return operator_norm(self.A)

    def split(self) -> ColumnSplit:
        """Cached :func:`column_split` of B."""
        if not self._split:
            self._split.append(column_split(self.B))
        return self._split[0]

    def is_dissipative(self, tol: float = DISSIPATIVE_TOL) -> bool:
        return check_dissipative(self.A, tol)

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist()}
