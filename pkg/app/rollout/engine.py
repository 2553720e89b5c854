"""
app/rollout/engine.py
=====================
Data-driven rollout of a Hankel model and the self-consistency protocol.

Rollout loop (one step per simulation input ``u_hat``)::

    solve   [Hu; Hy] alpha = [u_bar; y_bar]      (minimum norm)
    predict y_next = last row of Hy_shift · alpha
    slide   u_bar <- [u_bar[1:], u_hat],  y_bar <- [y_bar[1:], y_next]

Self-consistency: a fresh dataset per rollout, an optional preprocessing
strategy, a rollout from the origin window driven by the dataset's own
probe input, and the RMSE against the noise-free output of that dataset.

Usage::

    row = self_consistency_rmse(second_order_plant(), L=20, N=250,
                                noise=NoiseSpec(0.1, seed=7), rollouts=10)
    row.mean_rmse, row.std_rmse
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike

from app.config import N_JOBS, PE_MAX_REDRAWS
from app.core.hankel import (
    HankelModel,
    MinNormSolver,
    Signal,
    build_model,
    is_persistently_exciting,
)
from app.errors import DimensionError, NumericError, ParameterError, PersistencyError
from app.plant.lti import LtiSystem, NoiseSpec, gaussian_signal, simulate
from app.utils.preprocess import StrategyLike, apply_strategy, as_strategy
from app.utils.rng import STREAM_INPUT, STREAM_NOISE, derive_seed

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RolloutState:
    """The last L inputs and outputs; the rollout's initial trajectory."""

    u_window: np.ndarray
    y_window: np.ndarray

    def __post_init__(self) -> None:
        u = np.array(self.u_window, dtype=float).ravel()
        y = np.array(self.y_window, dtype=float).ravel()
        if u.size != y.size or u.size == 0:
            raise DimensionError(
                f"windows must share a non-zero length: {u.size} inputs, {y.size} outputs"
            )
        for name, arr in (("u_window", u), ("y_window", y)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def origin(cls, L: int) -> "RolloutState":
        return cls(np.zeros(L), np.zeros(L))

    @property
    def L(self) -> int:
        return self.u_window.size

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.u_window, self.y_window])


@dataclass(frozen=True)
class RolloutResult:
    """``y_pred`` is None only for an empty horizon."""

    y_pred: Optional[Signal]
    alpha_norms: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return 0 if self.y_pred is None else len(self.y_pred)


@dataclass(frozen=True)
class DepthSweepRow:
    L: int
    N: int
    strategy: str
    mean_rmse: float
    std_rmse: float
    rollouts: int
    rmses: tuple[float, ...] = field(default=(), repr=False)


class ErrorSplit(NamedTuple):
    total: float
    clean_term: float
    noise_term: float


@dataclass(frozen=True)
class SelfConsistencyRun:
    """One dataset, its model and the rollout evaluated against the clean output."""

    u: Signal
    y_clean: Signal
    y_noisy: Signal
    result: RolloutResult
    rmse: float
    redraws: int


# ---------------------------------------------------------------------------
# Rollout
# ---------------------------------------------------------------------------


def rmse(prediction: ArrayLike, target: ArrayLike) -> float:
    prediction = np.asarray(prediction, dtype=float)
    target = np.asarray(target, dtype=float)
    if prediction.shape != target.shape:
        raise DimensionError(f"RMSE operands differ in shape: {prediction.shape} vs {target.shape}")
    return float(np.sqrt(np.mean((prediction - target) ** 2)))


def rollout(
    model: HankelModel,
    init: RolloutState,
    u_sim: ArrayLike,
    rank_tol: Optional[float] = None,
    solver: Optional[MinNormSolver] = None,
) -> RolloutResult:
    """
    Advance the model one step per entry of ``u_sim``.

    ``y_pred[k]`` is the output predicted for window position L + k; it
    does not depend on ``u_sim[k]``, which is queued as the newest input
    for the following step.
    """
    u_hat = np.asarray(getattr(u_sim, "values", u_sim), dtype=float).ravel()
    if init.L != model.L:
        raise DimensionError(f"initial window has length {init.L}, model depth is L={model.L}")
    if u_hat.size == 0:
        empty = np.empty(0)
        return RolloutResult(None, empty, empty.copy())

    solver = solver or MinNormSolver(model.stacked, rank_tol)
    # prediction row expressed in the solver's row-space coordinates
    predictor = model.Hy_shift.entries[-1] @ solver.row_basis
    u_bar = init.u_window.copy()
    y_bar = init.y_window.copy()

    y_pred = np.empty(u_hat.size)
    alpha_norms = np.empty(u_hat.size)
    residuals = np.empty(u_hat.size)
    for k, u_next in enumerate(u_hat):
        z, residual = solver.coordinates(np.concatenate([u_bar, y_bar]))
        y_next = float(predictor @ z)
        y_pred[k] = y_next
        alpha_norms[k] = np.linalg.norm(z)
        residuals[k] = residual
        u_bar = np.append(u_bar[1:], u_next)
        y_bar = np.append(y_bar[1:], y_next)

    if not np.all(np.isfinite(y_pred)):
        raise NumericError("rollout produced non-finite predictions")
    logger.debug(
        "Rollout L=%d horizon=%d rank=%d mean|alpha|=%.4g",
        model.L,
        u_hat.size,
        solver.rank,
        float(alpha_norms.mean()),
    )
    return RolloutResult(Signal(y_pred, start_index=model.L), alpha_norms, residuals)


def prediction_error_split(
    model: HankelModel,
    alpha: ArrayLike,
    clean_row: ArrayLike,
    noise_row: ArrayLike,
    target: float,
) -> ErrorSplit:
    """
    Split one prediction error into its clean-data and noise contributions::

        |(y_hat_row + w_row)·alpha − target| <= |y_hat_row·alpha − target| + |w_row·alpha|
    """
    alpha = np.asarray(alpha, dtype=float).ravel()
    clean_row = np.asarray(clean_row, dtype=float).ravel()
    noise_row = np.asarray(noise_row, dtype=float).ravel()
    if not alpha.size == clean_row.size == noise_row.size == model.width:
        raise DimensionError(
            f"alpha ({alpha.size}), rows ({clean_row.size}, {noise_row.size}) "
            f"and model width ({model.width}) disagree"
        )
    clean_pred = float(clean_row @ alpha)
    noise_pred = float(noise_row @ alpha)
    total = abs(clean_pred + noise_pred - target)
    clean_term = abs(clean_pred - target)
    noise_term = abs(noise_pred)
    slack = 8 * np.finfo(float).eps * max(1.0, clean_term + noise_term)
    if total > clean_term + noise_term + slack:
        raise NumericError("triangle inequality violated in prediction error split")
    return ErrorSplit(total, clean_term, noise_term)


# ---------------------------------------------------------------------------
# Self-consistency protocol
# ---------------------------------------------------------------------------


def draw_exciting_input(N: int, order: int, seed: int) -> tuple[Signal, int]:
    """
    Probe of ``N + 1`` samples, persistently exciting of ``order``.

    Returns the signal and the number of redraws it took.
    """
    for attempt in range(PE_MAX_REDRAWS + 1):
        attempt_seed = seed if attempt == 0 else derive_seed(seed, attempt)
        u = gaussian_signal(N + 1, attempt_seed)
        check = is_persistently_exciting(u, order)
        if check.exciting:
            return u, attempt
        logger.warning(
            "Probe seed=%d not persistently exciting of order %d (rank %d), redrawing",
            attempt_seed,
            order,
            check.rank,
        )
    raise PersistencyError(
        f"no persistently exciting probe of order {order} after {PE_MAX_REDRAWS} redraws"
    )


def self_consistency_run(
    plant: LtiSystem,
    L: int,
    N: int,
    noise: NoiseSpec,
    input_seed: int,
    preprocessing: StrategyLike = "noisy",
    *,
    rank_tol: Optional[float] = None,
    ssa_rank: Optional[int] = None,
    ssa_window: Optional[int] = None,
    ssa_both: bool = False,
) -> SelfConsistencyRun:
    """One dataset → (preprocessed) model → rollout against the clean output."""
    u, redraws = draw_exciting_input(N, L + 1 + plant.n, input_seed)
    y_clean, y_noisy = simulate(plant, u, noise=noise)
    u_model, y_model = apply_strategy(
        u,
        y_noisy,
        preprocessing,
        L,
        ssa_window=ssa_window,
        ssa_rank=ssa_rank,
        ssa_both=ssa_both,
    )
    model = build_model(u_model, y_model, L)
    result = rollout(model, RolloutState.origin(L), u, rank_tol)
    return SelfConsistencyRun(
        u=u,
        y_clean=y_clean,
        y_noisy=y_noisy,
        result=result,
        rmse=rmse(result.y_pred, y_clean.values),
        redraws=redraws,
    )


def rollout_seeds(master_seed: int, k: int, resample_input: bool) -> tuple[int, int]:
    """(input seed, noise seed) of rollout ``k``; a fixed input reuses stream 0."""
    input_seed = derive_seed(master_seed, STREAM_INPUT, k if resample_input else 0)
    return input_seed, derive_seed(master_seed, STREAM_NOISE, k)


def self_consistency_rmse(
    plant: LtiSystem,
    L: int,
    N: int,
    noise: NoiseSpec,
    preprocessing: StrategyLike = "noisy",
    rollouts: int = 10,
    *,
    resample_input: bool = True,
    rank_tol: Optional[float] = None,
    ssa_rank: Optional[int] = None,
    ssa_window: Optional[int] = None,
    ssa_both: bool = False,
    n_jobs: int = N_JOBS,
) -> DepthSweepRow:
    """
    Mean and standard deviation of the self-consistency RMSE over
    ``rollouts`` independent datasets.  ``noise.seed`` is the master seed;
    results are identical for any ``n_jobs``.
    """
    if rollouts < 1:
        raise ParameterError(f"rollouts={rollouts} must be >= 1")
    if not N > 2 * L + plant.n:
        raise ParameterError(
            f"N={N} too short for depth L={L} and order n={plant.n}: need N > 2L + n"
        )
    strategy = as_strategy(preprocessing, L)

    def _one(k: int) -> SelfConsistencyRun:
        input_seed, noise_seed = rollout_seeds(noise.seed, k, resample_input)
        return self_consistency_run(
            plant,
            L,
            N,
            NoiseSpec(noise.variance, noise_seed),
            input_seed,
            strategy,
            rank_tol=rank_tol,
            ssa_rank=ssa_rank,
            ssa_window=ssa_window,
            ssa_both=ssa_both,
        )

    runs = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_one)(k) for k in range(rollouts))
    rmses = np.array([run.rmse for run in runs])
    redraws = sum(run.redraws for run in runs)
    logger.info(
        "Self-consistency L=%d N=%d strategy=%s var=%g: RMSE %.4g ± %.4g (%d rollouts, %d redraws)",
        L,
        N,
        strategy.tag.value,
        noise.variance,
        rmses.mean(),
        rmses.std(),
        rollouts,
        redraws,
    )
    return DepthSweepRow(
        L=L,
        N=N,
        strategy=strategy.tag.value,
        mean_rmse=float(rmses.mean()),
        std_rmse=float(rmses.std()),
        rollouts=rollouts,
        rmses=tuple(float(r) for r in rmses),
    )


def depth_sweep(
    plant: LtiSystem,
    L_grid: Sequence[int],
    N_grid: Sequence[int],
    strategies: Sequence[StrategyLike],
    noise: NoiseSpec,
    rollouts: int = 10,
    **kwargs,
) -> list[DepthSweepRow]:
    """Self-consistency RMSE over every (N, strategy, L) cell, in grid order."""
    rows = []
    for N in N_grid:
        for strategy in strategies:
            for L in L_grid:
                rows.append(
                    self_consistency_rmse(plant, L, N, noise, strategy, rollouts, **kwargs)
                )
    return rows
