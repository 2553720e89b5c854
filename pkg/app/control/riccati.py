"""
app/control/riccati.py
======================
Discrete algebraic Riccati equation by fixed-point iteration and the
matching LQR gain.

    P = AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA + Q
    K = (R + BᵀPB)⁻¹ BᵀPA            (u = −K x)
"""

import logging
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from app.config import DARE_MAX_ITER, DARE_TOL
from app.errors import DareDivergenceError, DimensionError, ParameterError

logger = logging.getLogger(__name__)

Weight = Union[float, ArrayLike]


def _square(M: Weight, size: int, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(M, dtype=float))
    if arr.shape != (size, size):
        raise DimensionError(f"{name} must be {size}x{size}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def _check_weights(Q: np.ndarray, R: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(Q))))
    if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-10 * scale):
        raise ParameterError("Q must be symmetric")
    if np.linalg.eigvalsh(Q)[0] < -1e-10 * scale:
        raise ParameterError("Q must be positive semidefinite")
    if not np.allclose(R, R.T) or np.linalg.eigvalsh(R)[0] <= 0.0:
        raise ParameterError("R must be symmetric positive definite")


def _validate(A: ArrayLike, B: ArrayLike, Q: Weight, R: Weight):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError(f"A must be square, got {A.shape}")
    B = np.asarray(B, dtype=float).reshape(n, -1)
    Q = _square(Q, n, "Q")
    R = _square(R, B.shape[1], "R")
    _check_weights(Q, R)
    return A, B, Q, R


def solve_dare(
    A: ArrayLike,
    B: ArrayLike,
    Q: Weight,
    R: Weight,
    tol: float = DARE_TOL,
    max_iter: int = DARE_MAX_ITER,
) -> np.ndarray:
    """
    Iterate the Riccati map from ``P0 = Q`` until
    ``||P_{k+1} − P_k||_2 <= tol`` (absolute, in the spectral norm).

    Raises :class:`DareDivergenceError` with the last residual when the
    iteration blows up or runs out of iterations.
    """
    A, B, Q, R = _validate(A, B, Q, R)
    P = Q.copy()
    residual = float("inf")
    for it in range(1, max_iter + 1):
        PA = P @ A
        PB = P @ B
        gain = np.linalg.solve(R + B.T @ PB, PB.T @ A)
        P_next = A.T @ PA - (A.T @ PB) @ gain + Q
        P_next = 0.5 * (P_next + P_next.T)
        residual = float(np.linalg.norm(P_next - P, 2))
        if not np.isfinite(residual):
            raise DareDivergenceError(
                f"Riccati iteration became non-finite after {it} iterations", residual, it
            )
        if residual <= tol:
            logger.debug("DARE converged: size=%d iterations=%d residual=%.3g", A.shape[0], it, residual)
            return P_next
        P = P_next
    raise DareDivergenceError(
        f"Riccati iteration did not converge in max_iter={max_iter} (residual {residual:.3g})",
        residual,
        max_iter,
    )


def dlqr_gain(
    A: ArrayLike,
    B: ArrayLike,
    Q: Weight,
    R: Weight,
    P: Optional[np.ndarray] = None,
    **dare_kwargs,
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(K, P)``; solves the DARE first unless ``P`` is given."""
    A, B, Q, R = _validate(A, B, Q, R)
    if P is None:
        P = solve_dare(A, B, Q, R, **dare_kwargs)
    K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    return K, P


def riccati_residual(A: ArrayLike, B: ArrayLike, Q: Weight, R: Weight, P: np.ndarray) -> float:
    """Spectral norm of ``P − f(P)``."""
    A, B, Q, R = _validate(A, B, Q, R)
    PB = P @ B
    f = A.T @ P @ A - (A.T @ PB) @ np.linalg.solve(R + B.T @ PB, PB.T @ A) + Q
    return float(np.linalg.norm(P - f, 2))