"""
app/utils/preprocess.py
=======================
Data-conditioning strategies applied before the Hankel model is built.

    noisy  — raw measured data, untouched
    smooth — trailing moving average of window L on both channels
    ssa    — singular spectrum analysis: embed, truncate the SVD, hankelize

All functions are pure and deterministic.  Smoothed signals are time
re-aligned: output index t holds the mean over the window ending at input
index t, so input/output pairs stay synchronous and the series loses its
first L − 1 samples.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import pandas as pd

from app.config import SSA_MAX_WINDOW
from app.core.hankel import Signal, SignalLike, as_signal, build_hankel
from app.errors import ParameterError, WindowError

logger = logging.getLogger(__name__)


class StrategyTag(str, enum.Enum):
    NOISY = "noisy"
    SMOOTH = "smooth"
    SSA = "ssa"


@dataclass(frozen=True)
class PreprocessStrategy:
    """Strategy tag plus its integer parameter (window for smooth, rank for SSA)."""

    tag: StrategyTag
    window_or_rank: int = 1

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "tag", StrategyTag(self.tag))
        except ValueError:
            raise ParameterError(
                f"unknown strategy {self.tag!r}; expected one of "
                f"{[t.value for t in StrategyTag]}"
            ) from None
        if self.window_or_rank < 1:
            raise ParameterError(f"strategy parameter={self.window_or_rank} must be >= 1")


StrategyLike = Union[PreprocessStrategy, StrategyTag, str]


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------


def moving_average(z: SignalLike, L: int) -> Signal:
    """Trailing mean over ``L`` samples, first full window onward."""
    sig = as_signal(z)
    if not 1 <= L <= len(sig):
        raise WindowError(f"moving-average window L={L} exceeds signal length {len(sig)}")
    if L == 1:
        return sig
    avg = pd.Series(sig.values).rolling(window=L, min_periods=L).mean().to_numpy()
    return Signal(avg[L - 1 :], sig.start_index + L - 1)


def smooth(u: SignalLike, y: SignalLike, L: int) -> tuple[Signal, Signal]:
    """Moving average of both channels; each output has ``len − L + 1`` samples."""
    return moving_average(u, L), moving_average(y, L)


# ---------------------------------------------------------------------------
# Singular spectrum analysis
# ---------------------------------------------------------------------------


def hankelize(matrix: np.ndarray) -> np.ndarray:
    """Average every skew-diagonal of an ``L × K`` array into a series of ``L + K − 1``."""
    rows, cols = matrix.shape
    total = np.zeros(rows + cols - 1)
    counts = np.zeros(rows + cols - 1)
    for i in range(rows):
        total[i : i + cols] += matrix[i]
        counts[i : i + cols] += 1.0
    return total / counts


def ssa_denoise(z: SignalLike, L: int, r: int) -> Signal:
    """
    Embed ``z`` at depth ``L``, keep the top ``r`` singular triplets and
    hankelize back to a series of the original length.  Ranks beyond the
    numeric rank of the embedding simply keep everything.
    """
    sig = as_signal(z)
    if not 1 <= L <= len(sig):
        raise WindowError(f"SSA window L={L} out of range for signal length {len(sig)}")
    if not 1 <= r <= L:
        raise ParameterError(f"SSA rank r={r} must satisfy 1 <= r <= L={L}")
    H = build_hankel(sig, L).entries
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    keep = min(r, s.size)
    truncated = (U[:, :keep] * s[:keep]) @ Vt[:keep]
    return Signal(hankelize(truncated), sig.start_index)


def default_ssa_window(length: int, L: int) -> int:
    """Embedding window: half the series, capped at ``SSA_MAX_WINDOW``, never below L."""
    return min(length, max(L, min(length // 2, SSA_MAX_WINDOW)))


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------


def as_strategy(strategy: StrategyLike, L: int) -> PreprocessStrategy:
    if isinstance(strategy, PreprocessStrategy):
        return strategy
    return PreprocessStrategy(StrategyTag(strategy) if isinstance(strategy, str) else strategy, L)


def apply_strategy(
    u: SignalLike,
    y: SignalLike,
    strategy: StrategyLike,
    L: int,
    *,
    ssa_window: Optional[int] = None,
    ssa_rank: Optional[int] = None,
    ssa_both: bool = False,
) -> tuple[Signal, Signal]:
    """
    Condition one dataset for a depth-L model.

    SSA keeps the top ``min(L, rank)`` triplets of an embedding of width
    ``ssa_window`` (default :func:`default_ssa_window`); ``ssa_rank``
    overrides the truncation rank.  Only the output is denoised unless
    ``ssa_both`` is set.
    """
    strat = as_strategy(strategy, L)
    u_sig, y_sig = as_signal(u), as_signal(y)

    if strat.tag is StrategyTag.NOISY:
        return u_sig, y_sig
    if strat.tag is StrategyTag.SMOOTH:
        return smooth(u_sig, y_sig, L)

    window = ssa_window if ssa_window is not None else default_ssa_window(len(y_sig), L)
    rank = min(ssa_rank if ssa_rank is not None else L, window)
    logger.debug("SSA preprocessing: window=%d rank=%d both=%s", window, rank, ssa_both)
    y_out = ssa_denoise(y_sig, window, rank)
    u_out = ssa_denoise(u_sig, window, rank) if ssa_both else u_sig
    return u_out, y_out
