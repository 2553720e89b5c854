"""
app/core/hankel.py
==================
Hankel matrices built from scalar (SISO) time series, persistency of
excitation, and the minimum-norm solve of the Willems linear system

    [H_L(u); H_L(y)] · alpha = [u_bar; y_bar]

All types are immutable after construction (arrays are flagged read-only),
so instances can be shared freely between worker threads.

Numeric rank convention
-----------------------
A singular value counts towards the rank when it is at least
``rank_tol · sigma_max``.  The default ``rank_tol`` is
``max(rows, cols) · eps``; ``RANK_TOL`` in the environment overrides it.
"""

import logging
import operator
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from app.config import RANK_TOL
from app.errors import DepthError, DimensionError, NumericError, SingularIndexError

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Signal:
    """A finite, non-empty real time series starting at ``start_index``."""

    values: np.ndarray
    start_index: int = 0

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size == 0:
            raise DimensionError("signal must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise NumericError("signal contains non-finite samples")
        object.__setattr__(self, "values", _frozen(arr))
        object.__setattr__(self, "start_index", int(self.start_index))

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, key):
        return self.values[key]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


SignalLike = Union[Signal, ArrayLike]


def as_signal(z: SignalLike) -> Signal:
    return z if isinstance(z, Signal) else Signal(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class HankelMatrix:
    """Depth-L Hankel matrix: ``entries[i, j] = z[i + j]``."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"Hankel entries must be a non-empty 2-D array, got {arr.shape}")
        # constant skew-diagonals
        if not np.array_equal(arr[1:, :-1], arr[:-1, 1:]):
            raise DimensionError("entries are not constant along skew-diagonals")
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def depth(self) -> int:
        return self.entries.shape[0]

    @property
    def width(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def to_signal(self) -> Signal:
        """Recover the generating series from the first column and last row."""
        return Signal(np.concatenate([self.entries[:, 0], self.entries[-1, 1:]]))


@dataclass(frozen=True)
class HankelModel:
    """
    Data-driven model of depth ``L`` built from ``N + 1`` samples.

    ``Hu``/``Hy`` use samples 0..N-1, the shifted blocks use samples 1..N.
    """

    L: int
    N: int
    Hu: HankelMatrix
    Hy: HankelMatrix
    Hu_shift: HankelMatrix
    Hy_shift: HankelMatrix

    def __post_init__(self) -> None:
        shapes = {m.shape for m in (self.Hu, self.Hy, self.Hu_shift, self.Hy_shift)}
        if len(shapes) != 1:
            raise DimensionError(f"Hankel blocks disagree in shape: {sorted(shapes)}")
        if self.Hu.depth != self.L:
            raise DimensionError(f"blocks have depth {self.Hu.depth}, model declares L={self.L}")

    @property
    def width(self) -> int:
        return self.Hu.width

    @property
    def stacked(self) -> np.ndarray:
        """``[Hu; Hy]`` with 2L rows."""
        return np.vstack([self.Hu.entries, self.Hy.entries])

    @property
    def stacked_shift(self) -> np.ndarray:
        return np.vstack([self.Hu_shift.entries, self.Hy_shift.entries])


@dataclass(frozen=True)
class MinNormSolution:
    alpha: np.ndarray
    residual_norm: float
    effective_rank: int


class ExcitationReport(NamedTuple):
    exciting: bool
    rank: int


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _as_depth(L) -> int:
    try:
        return operator.index(L)
    except TypeError:
        raise DepthError(f"depth L must be an integer, got {L!r}") from None


def build_hankel(z: SignalLike, L: int) -> HankelMatrix:
    """
    Depth-L Hankel matrix of ``z``; shape ``L × (len(z) − L + 1)``.

    >>> build_hankel([1, 2, 3, 4, 5], 2).entries
    array([[1., 2., 3., 4.],
           [2., 3., 4., 5.]])
    """
    values = as_signal(z).values
    L = _as_depth(L)
    if not 1 <= L <= values.size:
        raise DepthError(f"depth L={L} out of range for signal length {values.size}")
    return HankelMatrix(scipy.linalg.hankel(values[:L], values[L - 1 :]))


def shift_hankel(z: SignalLike, L: int) -> HankelMatrix:
    """Hankel matrix of the series advanced by one sample (drops ``z[0]``)."""
    values = as_signal(z).values
    L = _as_depth(L)
    if values.size < L + 1:
        raise DepthError(
            f"shifted Hankel of depth L={L} needs at least {L + 1} samples, got {values.size}"
        )
    return build_hankel(values[1:], L)


def build_model(u: SignalLike, y: SignalLike, L: int) -> HankelModel:
    """
    Build the four Hankel blocks from one dataset of ``N + 1`` samples.

    Persistency of excitation is the caller's responsibility
    (see :func:`is_persistently_exciting`).
    """
    u_vals = as_signal(u).values
    y_vals = as_signal(y).values
    if u_vals.size != y_vals.size:
        raise DimensionError(
            f"input and output lengths differ: len(u)={u_vals.size}, len(y)={y_vals.size}"
        )
    L = _as_depth(L)
    if L < 1 or u_vals.size < L + 1:
        raise DepthError(
            f"depth L={L} needs at least {L + 1} samples per channel, got {u_vals.size}"
        )
    return HankelModel(
        L=L,
        N=u_vals.size - 1,
        Hu=build_hankel(u_vals[:-1], L),
        Hy=build_hankel(y_vals[:-1], L),
        Hu_shift=shift_hankel(u_vals, L),
        Hy_shift=shift_hankel(y_vals, L),
    )


# ---------------------------------------------------------------------------
# Rank and pseudoinverse
# ---------------------------------------------------------------------------


def _as_matrix(M: ArrayLike) -> np.ndarray:
    arr = np.asarray(getattr(M, "entries", M), dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("matrix contains non-finite entries")
    return arr


def resolve_rank_tol(shape: tuple[int, ...], rank_tol: Optional[float] = None) -> float:
    """Explicit value, then ``RANK_TOL`` from config, then ``max(shape) · eps``."""
    if rank_tol is not None:
        return float(rank_tol)
    if RANK_TOL is not None:
        return RANK_TOL
    return max(shape) * np.finfo(float).eps


def _kept(s: np.ndarray, tol: float) -> np.ndarray:
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(s.shape, dtype=bool)
    return (s >= tol * s[0]) & (s > 0.0)


def numeric_rank(M: ArrayLike, rank_tol: Optional[float] = None) -> int:
    arr = _as_matrix(M)
    s = np.linalg.svd(arr, compute_uv=False)
    return int(np.count_nonzero(_kept(s, resolve_rank_tol(arr.shape, rank_tol))))


def is_persistently_exciting(
    z: SignalLike, L: int, rank_tol: Optional[float] = None
) -> ExcitationReport:
    """True iff the depth-L Hankel matrix of ``z`` has numeric rank L."""
    H = build_hankel(z, L)
    rank = numeric_rank(H.entries, rank_tol)
    return ExcitationReport(rank == H.depth, rank)


class MinNormSolver:
    """
    Truncated-SVD pseudoinverse of a fixed matrix.

    The factorisation is computed once; every :meth:`solve` call then
    evaluates ``alpha = V · diag(1/s) · Uᵀ · b`` from scratch.
    """

    def __init__(self, M: ArrayLike, rank_tol: Optional[float] = None):
        self._M = _as_matrix(M)
        U, s, Vt = np.linalg.svd(self._M, full_matrices=False)
        keep = _kept(s, resolve_rank_tol(self._M.shape, rank_tol))
        self._U = U[:, keep]
        self._s = s[keep]
        self._Vt = Vt[keep]
        self.singular_values = _frozen(s)

    @property
    def rank(self) -> int:
        return self._s.size

    @property
    def shape(self) -> tuple[int, int]:
        return self._M.shape

    @property
    def row_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the row space kept by the truncation."""
        return self._Vt.T

    def pinv(self) -> np.ndarray:
        return (self._Vt.T / self._s) @ self._U.T

    def apply(self, B: ArrayLike) -> np.ndarray:
        """Pseudoinverse applied to a vector or to each column of a matrix."""
        B = np.asarray(B, dtype=float)
        if B.shape[0] != self._M.shape[0]:
            raise DimensionError(
                f"right-hand side has {B.shape[0]} rows, matrix has {self._M.shape[0]}"
            )
        if not np.all(np.isfinite(B)):
            raise NumericError("right-hand side contains non-finite entries")
        coeffs = self._U.T @ B
        coeffs = coeffs / (self._s if B.ndim == 1 else self._s[:, None])
        return self._Vt.T @ coeffs

    def coordinates(self, b: ArrayLike) -> tuple[np.ndarray, float]:
        """
        Solution in row-space coordinates (``alpha = row_basis · z``) and the
        least-squares residual norm.
        """
        b = np.asarray(b, dtype=float).ravel()
        if b.size != self._M.shape[0]:
            raise DimensionError(f"right-hand side has {b.size} rows, matrix has {self._M.shape[0]}")
        coeffs = self._U.T @ b
        residual = float(np.linalg.norm(self._U @ coeffs - b))
        return coeffs / self._s, residual

    def solve(self, b: ArrayLike) -> MinNormSolution:
        b = np.asarray(b, dtype=float).ravel()
        alpha = self.apply(b)
        residual = float(np.linalg.norm(self._M @ alpha - b))
        return MinNormSolution(_frozen(alpha), residual, self.rank)


def min_norm_solve(
    M: ArrayLike, b: ArrayLike, rank_tol: Optional[float] = None
) -> MinNormSolution:
    """Minimum-norm least-squares solution of ``M · alpha ≈ b``."""
    return MinNormSolver(M, rank_tol).solve(b)


def pinv_norm(M: ArrayLike, k: int, rank_tol: Optional[float] = None) -> float:
    """
    ``1 / sigma_k(M)`` (k is 1-based); ``inf`` when sigma_k falls below the
    rank cut-off.  With ``k = L + n`` this is the norm of the pseudoinverse
    restricted to the behaviour.
    """
    arr = _as_matrix(M)
    s = np.linalg.svd(arr, compute_uv=False)
    k = operator.index(k)
    if not 1 <= k <= s.size:
        raise SingularIndexError(f"singular index k={k} out of range 1..{s.size}")
    if not _kept(s, resolve_rank_tol(arr.shape, rank_tol))[k - 1]:
        return float("inf")
    return float(1.0 / s[k - 1])
