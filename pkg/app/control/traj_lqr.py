"""
app/control/traj_lqr.py
=======================
LQR in trajectory space.

The minimum-norm coefficient vector ``alpha`` of the Willems system is used
as the state.  Sliding the window by one sample gives

    M alpha' = S alpha + e u_hat,     M = [Hu; Hy]
    S = [Hu_shift[0:L-1]; 0; Hy_shift],  e = unit vector at row L-1

so ``alpha' = A_alpha alpha + B_alpha u_hat`` with ``A_alpha = M⁺S`` and
``B_alpha = M⁺e``; the current output is ``y = C_alpha alpha`` with
``C_alpha`` the last row of ``Hy``.

Integral action uses the velocity form ``x = [alpha_k − alpha_{k−1}; r − y_k]``
and ``u_k = u_{k−1} − K x_k``.  Every reachable alpha lies in the row space
of M, so the Riccati equation is solved in those coordinates and the gain
is lifted back.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from app.config import (
    DARE_MAX_ITER,
    DARE_TOL,
    INSTABILITY_THRESHOLD,
    LQR_HORIZON,
    LQR_Q_DELTA,
    LQR_Q_ERROR,
    LQR_R,
    LQR_SAMPLES,
)
from app.control.riccati import dlqr_gain
from app.core.hankel import HankelModel, MinNormSolver, build_model
from app.errors import DimensionError, ExpressivityError, ParameterError
from app.plant.lti import LtiSystem, NoiseSpec, simulate, spectral_radius
from app.rollout.engine import draw_exciting_input
from app.utils.rng import (
    STREAM_INPUT,
    STREAM_INPUT_NOISE,
    STREAM_LOOP_NOISE,
    STREAM_NOISE,
    derive_seed,
    make_rng,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Trajectory-space model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrajSpaceModel:
    L: int
    n: int
    M: np.ndarray
    S: np.ndarray
    e: np.ndarray
    A_alpha: np.ndarray
    B_alpha: np.ndarray
    C_alpha: np.ndarray
    solver: MinNormSolver = field(repr=False)

    @property
    def width(self) -> int:
        return self.M.shape[1]

    @property
    def rank(self) -> int:
        return self.solver.rank

    @property
    def basis(self) -> np.ndarray:
        return self.solver.row_basis

    def project(self, u_window: ArrayLike, y_window: ArrayLike) -> np.ndarray:
        """Minimum-norm alpha reproducing the given windows."""
        return self.solver.apply(np.concatenate([np.ravel(u_window), np.ravel(y_window)]))

    def step(self, alpha: np.ndarray, u_hat: float) -> np.ndarray:
        return self.A_alpha @ alpha + self.B_alpha * u_hat

    def output(self, alpha: np.ndarray) -> float:
        return float(self.C_alpha @ alpha)


def build_traj_model(model: HankelModel, n: int, rank_tol: Optional[float] = None) -> TrajSpaceModel:
    """
    Assemble ``A_alpha``, ``B_alpha``, ``C_alpha`` from a Hankel model.

    Raises :class:`ExpressivityError` when ``rank([Hu; Hy]) < L + n``.
    """
    L, W = model.L, model.width
    M = model.stacked
    solver = MinNormSolver(M, rank_tol)
    if solver.rank < L + n:
        raise ExpressivityError(
            f"rank([Hu; Hy]) = {solver.rank} is below L + n = {L + n} "
            f"(deficiency {L + n - solver.rank})"
        )
    S = np.vstack([model.Hu_shift.entries[: L - 1], np.zeros((1, W)), model.Hy_shift.entries])
    e = np.zeros(2 * L)
    e[L - 1] = 1.0
    traj = TrajSpaceModel(
        L=L,
        n=n,
        M=M,
        S=S,
        e=e,
        A_alpha=solver.apply(S),
        B_alpha=solver.apply(e),
        C_alpha=model.Hy.entries[-1].copy(),
        solver=solver,
    )
    logger.debug("Trajectory model L=%d width=%d rank=%d", L, W, solver.rank)
    return traj


# ---------------------------------------------------------------------------
# Servo design
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LqrDesign:
    """
    ``Q``, ``P``, ``A_aug``, ``B_aug`` and ``K_solved`` live in the
    coordinates the Riccati equation was solved in; ``K`` acts on the full
    ``[delta_alpha; e]`` vector.
    """

    Q: np.ndarray
    R: float
    P: np.ndarray
    K: np.ndarray
    K_solved: np.ndarray
    A_aug: np.ndarray
    B_aug: np.ndarray
    basis: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def closed_loop_radius(self) -> float:
        return spectral_radius(self.A_aug - np.outer(self.B_aug, self.K_solved))


def augment(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Velocity-form augmentation ``[A, 0; −CA, 1]``, ``[B; −CB]``."""
    d = A.shape[0]
    A_aug = np.block([[A, np.zeros((d, 1))], [-(C @ A)[None, :], np.ones((1, 1))]])
    B_aug = np.concatenate([B, [-(C @ B)]])
    return A_aug, B_aug


def design_servo(
    traj: TrajSpaceModel,
    Q: Optional[ArrayLike] = None,
    R: Optional[float] = None,
    *,
    q_delta: float = LQR_Q_DELTA,
    q_error: float = LQR_Q_ERROR,
    project_rowspace: bool = True,
    tol: float = DARE_TOL,
    max_iter: int = DARE_MAX_ITER,
) -> LqrDesign:
    """
    Integral-action LQR gain for a trajectory-space model.

    Without an explicit ``Q`` (sized for ``[delta_alpha; e]``) the weight is
    ``diag(q_delta · I, q_error)``; ``R`` defaults to ``LQR_R``.
    """
    R = LQR_R if R is None else float(R)
    if R <= 0.0:
        raise ParameterError(f"R={R} must be > 0")
    W = traj.width
    V = traj.basis if project_rowspace else np.eye(W)
    d = V.shape[1]

    A_aug, B_aug = augment(V.T @ traj.A_alpha @ V, V.T @ traj.B_alpha, traj.C_alpha @ V)
    if Q is None:
        Q_s = np.diag(np.concatenate([np.full(d, float(q_delta)), [float(q_error)]]))
    else:
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (W + 1, W + 1):
            raise DimensionError(f"Q must be {W + 1}x{W + 1}, got {Q.shape}")
        T = scipy.linalg.block_diag(V, np.ones((1, 1)))
        Q_s = T.T @ Q @ T

    K_s, P = dlqr_gain(A_aug, B_aug, Q_s, R, tol=tol, max_iter=max_iter)
    K_s = K_s.ravel()
    K = np.concatenate([K_s[:d] @ V.T, K_s[d:]])
    design = LqrDesign(
        Q=Q_s,
        R=R,
        P=P,
        K=K,
        K_solved=K_s,
        A_aug=A_aug,
        B_aug=B_aug,
        basis=V if project_rowspace else None,
    )
    logger.info(
        "Servo design L=%d: Riccati size=%d closed-loop radius=%.4f",
        traj.L,
        d + 1,
        design.closed_loop_radius,
    )
    return design


# ---------------------------------------------------------------------------
# Controller
# ---------------------------------------------------------------------------


class ServoController:
    """
    Per-sample velocity-form controller.

    ``on_sample`` takes the input applied at time k, the measured output at
    time k and the reference, and returns the input for time k + 1.
    """

    def __init__(self, traj: TrajSpaceModel, design: LqrDesign, reproject: bool = True):
        if design.K.size != traj.width + 1:
            raise DimensionError(
                f"gain has {design.K.size} entries, model needs {traj.width + 1}"
            )
        self.traj = traj
        self.design = design
        self.reproject = reproject
        self.reset()

    def reset(self) -> None:
        L = self.traj.L
        self._u = np.zeros(L)
        self._y = np.zeros(L)
        self._alpha = np.zeros(self.traj.width)
        self.u_next = 0.0

    def on_sample(self, u_applied: float, y_measured: float, reference: float) -> float:
        self._u = np.append(self._u[1:], u_applied)
        self._y = np.append(self._y[1:], y_measured)
        if self.reproject:
            alpha = self.traj.project(self._u, self._y)
        else:
            alpha = self.traj.step(self._alpha, u_applied)
        x = np.append(alpha - self._alpha, reference - y_measured)
        self._alpha = alpha
        self.u_next = u_applied - float(self.design.K @ x)
        return self.u_next


# ---------------------------------------------------------------------------
# Closed-loop evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClosedLoopResult:
    y: np.ndarray
    u: np.ndarray
    reference: np.ndarray
    baseline_y: np.ndarray
    deviation: np.ndarray
    unstable: bool
    diverged_at: Optional[int] = None

    @property
    def deviation_rms(self) -> float:
        finite = self.deviation[np.isfinite(self.deviation)]
        return float(np.sqrt(np.mean(finite**2))) if finite.size else float("nan")

    @property
    def tracking_error(self) -> np.ndarray:
        return self.reference - self.y


def _loop_noise(noise: Optional[NoiseSpec], horizon: int) -> np.ndarray:
    if noise is None or noise.variance == 0.0:
        return np.zeros(horizon)
    return np.sqrt(noise.variance) * make_rng(noise.seed).standard_normal(horizon)


def run_loop(
    plant: LtiSystem,
    controller: ServoController,
    reference: np.ndarray,
    omega: np.ndarray,
    threshold: float = INSTABILITY_THRESHOLD,
) -> tuple[np.ndarray, np.ndarray, Optional[int]]:
    """Simulate the plant under ``controller``; samples after a divergence stay NaN."""
    A, b, c, d = plant.A, plant.B[:, 0], plant.C[0], plant.D[0, 0]
    horizon = reference.size
    ys = np.full(horizon, np.nan)
    us = np.full(horizon, np.nan)
    controller.reset()
    x = np.zeros(plant.n)
    u_k = 0.0
    for k in range(horizon):
        y_k = float(c @ x + d * u_k)
        if not np.isfinite(y_k) or abs(y_k) > threshold:
            logger.warning("Closed loop diverged at step %d (|y| = %.3g)", k, abs(y_k))
            return ys, us, k
        ys[k] = y_k
        us[k] = u_k
        u_next = controller.on_sample(u_k, y_k + omega[k], reference[k])
        x = A @ x + b * u_k
        u_k = u_next
    return ys, us, None


def closed_loop_eval(
    true_plant: LtiSystem,
    design: LqrDesign,
    traj: TrajSpaceModel,
    reference: ArrayLike,
    noise: Optional[NoiseSpec] = None,
    *,
    baseline: Optional[tuple[TrajSpaceModel, LqrDesign]] = None,
    reproject: bool = True,
    threshold: float = INSTABILITY_THRESHOLD,
) -> ClosedLoopResult:
    """
    Run the data-driven loop on the true plant and compare it with the
    ``baseline`` (trajectory model, design) pair under the same measurement
    noise.  Without a baseline the loop is compared with itself.
    """
    r = np.asarray(getattr(reference, "values", reference), dtype=float).ravel()
    if r.size == 0:
        raise ParameterError("reference must be non-empty")
    if not true_plant.is_discrete:
        raise ParameterError("closed-loop evaluation needs a discrete-time plant")
    omega = _loop_noise(noise, r.size)

    y, u, diverged_at = run_loop(true_plant, ServoController(traj, design, reproject), r, omega, threshold)
    if baseline is None:
        baseline_y = y
    else:
        base_traj, base_design = baseline
        baseline_y, _, _ = run_loop(
            true_plant, ServoController(base_traj, base_design, reproject), r, omega, threshold
        )
    return ClosedLoopResult(
        y=y,
        u=u,
        reference=r,
        baseline_y=baseline_y,
        deviation=y - baseline_y,
        unstable=diverged_at is not None,
        diverged_at=diverged_at,
    )


# ---------------------------------------------------------------------------
# End-to-end servo experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ServoExperiment:
    """``data_u`` and ``data_y`` are the recorded (noisy) identification data."""

    L: int
    seed: int
    data_u: np.ndarray
    data_y: np.ndarray
    result: ClosedLoopResult
    design: LqrDesign
    baseline_design: LqrDesign


def lqr_experiment(
    plant: LtiSystem,
    L: int,
    seed: int,
    *,
    samples: int = LQR_SAMPLES,
    data_noise_var: float = 1.0,
    data_input_noise_var: float = 1.0,
    loop_noise_var: float = 0.0,
    reference: Optional[ArrayLike] = None,
    horizon: int = LQR_HORIZON,
    reproject: bool = True,
    project_rowspace: bool = True,
    q_delta: float = LQR_Q_DELTA,
    q_error: float = LQR_Q_ERROR,
    r: float = LQR_R,
    rank_tol: Optional[float] = None,
) -> ServoExperiment:
    """
    Collect ``samples`` input/output pairs with a standard-normal probe,
    design one servo from the noisy records and one from the clean records
    of the same experiment, and run both on the true plant.

    The plant is always driven by the clean probing input;
    ``data_input_noise_var`` and ``data_noise_var`` corrupt only the recorded
    input and output that the noisy design is identified from.
    The default reference is a unit step of ``horizon`` samples.
    """
    u, _ = draw_exciting_input(samples - 1, L + 1 + plant.n, derive_seed(seed, STREAM_INPUT))
    y_clean, y_noisy = simulate(plant, u, noise=NoiseSpec(data_noise_var, derive_seed(seed, STREAM_NOISE)))
    input_noise = NoiseSpec(data_input_noise_var, derive_seed(seed, STREAM_INPUT_NOISE))
    u_meas = u.values + _loop_noise(input_noise, len(u))

    weights = dict(q_delta=q_delta, q_error=q_error, project_rowspace=project_rowspace)
    traj = build_traj_model(build_model(u_meas, y_noisy, L), plant.n, rank_tol)
    design = design_servo(traj, R=r, **weights)
    base_traj = build_traj_model(build_model(u, y_clean, L), plant.n, rank_tol)
    base_design = design_servo(base_traj, R=r, **weights)

    ref = np.ones(horizon) if reference is None else reference
    loop_noise = NoiseSpec(loop_noise_var, derive_seed(seed, STREAM_LOOP_NOISE))
    result = closed_loop_eval(
        plant,
        design,
        traj,
        ref,
        loop_noise,
        baseline=(base_traj, base_design),
        reproject=reproject,
    )
    if result.unstable:
        logger.warning("LQR loop L=%d seed=%d unstable at step %s", L, seed, result.diverged_at)
    logger.info("LQR experiment L=%d seed=%d: deviation RMS=%.4g", L, seed, result.deviation_rms)
    return ServoExperiment(
        L=L,
        seed=seed,
        data_u=u_meas,
        data_y=y_noisy.values,
        result=result,
        design=design,
        baseline_design=base_design,
    )
