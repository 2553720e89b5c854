"""
app/plant/lti.py
================
Ground-truth SISO plants: transfer-function realization, zero-order-hold
discretization, exact simulation with additive measurement noise, and the
seeded Gaussian probing signal.

Shipped plants
--------------
* ``second_order_plant()`` — 1/(s² + 0.5 s + 1) sampled at 0.1 s (ZOH).
* ``benchmark_plant()``    — P(z) = 0.1159 (z³ + 0.5 z) /
  (z⁴ − 2.2 z³ + 2.42 z² − 1.87 z + 0.7225), unit sampling period.

All experiments start at the origin and use D = 0.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.signal

from app.config import SAMPLING_TIME
from app.core.hankel import Signal, SignalLike, as_signal
from app.errors import DimensionError, NumericError, ParameterError, RealizationError
from app.utils.rng import make_rng

logger = logging.getLogger(__name__)

BENCHMARK_NUM: tuple[float, ...] = (0.1159, 0.0, 0.1159 * 0.5, 0.0)
BENCHMARK_DEN: tuple[float, ...] = (1.0, -2.2, 2.42, -1.87, 0.7225)
SECOND_ORDER_NUM: tuple[float, ...] = (1.0,)
SECOND_ORDER_DEN: tuple[float, ...] = (1.0, 0.5, 1.0)


@dataclass(frozen=True)
class LtiSystem:
    """State-space realization; ``dt == 0`` marks continuous time."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    dt: float = 0.0

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.array(self.A, dtype=float))
        n = A.shape[0]
        B = np.array(self.B, dtype=float).reshape(n, 1) if np.size(self.B) == n else None
        C = np.array(self.C, dtype=float).reshape(1, n) if np.size(self.C) == n else None
        D = np.array(self.D, dtype=float).reshape(1, 1) if np.size(self.D) == 1 else None
        if n < 1 or A.shape != (n, n) or B is None or C is None or D is None:
            raise DimensionError(
                f"inconsistent realization: A{np.shape(self.A)}, B{np.shape(self.B)}, "
                f"C{np.shape(self.C)}, D{np.shape(self.D)}"
            )
        for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(mat)):
                raise NumericError(f"matrix {name} has non-finite entries")
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)
        if self.dt < 0:
            raise ParameterError(f"sampling period dt={self.dt} must be >= 0")
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.dt > 0


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian measurement noise."""

    variance: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.variance) or self.variance < 0:
            raise ParameterError(f"noise variance={self.variance} must be finite and >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"noise seed={self.seed} must be an unsigned 64-bit integer")


# ---------------------------------------------------------------------------
# Realization and discretization
# ---------------------------------------------------------------------------


def tf_to_ss(
    numerator: Sequence[float], denominator: Sequence[float], dt: float = 0.0
) -> LtiSystem:
    """
    Controllable canonical realization of ``num(x) / den(x)``.

    Coefficients are in descending powers; ``den`` must be proper with a
    non-zero leading coefficient.
    """
    den = np.asarray(denominator, dtype=float)
    num = np.trim_zeros(np.asarray(numerator, dtype=float), "f")
    if den.size == 0 or den[0] == 0.0:
        raise RealizationError("denominator leading coefficient must be non-zero")
    if den.size < 2:
        raise RealizationError("denominator degree must be >= 1 (state dimension n >= 1)")
    if num.size == 0:
        num = np.zeros(1)
    if num.size > den.size:
        raise RealizationError(
            f"improper transfer function: numerator degree {num.size - 1} "
            f"> denominator degree {den.size - 1}"
        )
    A, B, C, D = scipy.signal.tf2ss(num, den)
    return LtiSystem(A, B, C, D, dt=dt)


def c2d_zoh(sys: LtiSystem, Ts: float) -> LtiSystem:
    """
    Zero-order-hold discretization through the augmented matrix exponential

        expm([[A, B], [0, 0]] · Ts) = [[A_d, B_d], [0, I]]
    """
    if sys.is_discrete:
        raise ParameterError(f"system is already discrete (dt={sys.dt})")
    if not Ts > 0:
        raise ParameterError(f"sampling time Ts={Ts} must be positive")
    n = sys.n
    M = np.block([[sys.A, sys.B], [np.zeros((1, n)), np.zeros((1, 1))]])
    phi = scipy.linalg.expm(M * Ts)
    return LtiSystem(phi[:n, :n], phi[:n, n:], sys.C, sys.D, dt=Ts)


def second_order_plant(Ts: float = SAMPLING_TIME) -> LtiSystem:
    return c2d_zoh(tf_to_ss(SECOND_ORDER_NUM, SECOND_ORDER_DEN), Ts)


def benchmark_plant() -> LtiSystem:
    return tf_to_ss(BENCHMARK_NUM, BENCHMARK_DEN, dt=1.0)


def plant_from_coefficients(
    numerator: Sequence[float], denominator: Sequence[float], Ts: float
) -> LtiSystem:
    """Continuous coefficients discretized at ``Ts`` > 0; ``Ts == 0`` means
    the coefficients are already discrete (unit period)."""
    if Ts < 0:
        raise ParameterError(f"sampling time Ts={Ts} must be >= 0")
    if Ts > 0:
        return c2d_zoh(tf_to_ss(numerator, denominator), Ts)
    return tf_to_ss(numerator, denominator, dt=1.0)


# ---------------------------------------------------------------------------
# Analysis helpers
# ---------------------------------------------------------------------------


def spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def dc_gain(sys: LtiSystem) -> float:
    """G(1) for discrete systems, G(0) for continuous ones."""
    n = sys.n
    if sys.is_discrete:
        gain = sys.C @ np.linalg.solve(np.eye(n) - sys.A, sys.B) + sys.D
    else:
        gain = -sys.C @ np.linalg.solve(sys.A, sys.B) + sys.D
    return float(gain[0, 0])


def impulse_response(sys: LtiSystem, lags: int) -> np.ndarray:
    """Markov parameters D, CB, CAB, … (``lags`` values)."""
    out = np.empty(lags)
    if lags == 0:
        return out
    out[0] = sys.D[0, 0]
    x = sys.B[:, 0].copy()
    for k in range(1, lags):
        out[k] = sys.C[0] @ x
        x = sys.A @ x
    return out


# ---------------------------------------------------------------------------
# Simulation and signals
# ---------------------------------------------------------------------------


def gaussian_signal(length: int, seed: int) -> Signal:
    """IID standard-normal probing signal; identical seeds give identical signals."""
    if length < 1:
        raise ParameterError(f"signal length={length} must be >= 1")
    return Signal(make_rng(seed).standard_normal(int(length)))


def simulate(
    sys: LtiSystem,
    u: SignalLike,
    x0: Optional[np.ndarray] = None,
    noise: Optional[NoiseSpec] = None,
) -> tuple[Signal, Signal]:
    """
    Exact recursion ``x_{t+1} = A x_t + B u_t``, ``y_t = C x_t + D u_t``.

    Returns ``(y_clean, y_noisy)`` where ``y_noisy = y_clean + omega`` with
    ``omega ~ N(0, noise.variance)`` drawn from ``noise.seed``.
    """
    if not sys.is_discrete:
        raise ParameterError("simulate needs a discrete-time system (dt > 0)")
    u_sig = as_signal(u)
    x = np.zeros(sys.n) if x0 is None else np.array(x0, dtype=float).ravel()
    if x.size != sys.n:
        raise DimensionError(f"initial state has length {x.size}, system order is {sys.n}")

    A, b, c, d = sys.A, sys.B[:, 0], sys.C[0], sys.D[0, 0]
    y = np.empty(len(u_sig))
    for t, ut in enumerate(u_sig.values):
        y[t] = c @ x + d * ut
        x = A @ x + b * ut
    if not np.all(np.isfinite(y)):
        raise NumericError("simulation diverged to non-finite outputs")

    y_clean = Signal(y, u_sig.start_index)
    if noise is None or noise.variance == 0.0:
        return y_clean, y_clean
    omega = np.sqrt(noise.variance) * make_rng(noise.seed).standard_normal(y.size)
    return y_clean, Signal(y + omega, u_sig.start_index)
