"""
app/concentration/gram.py
=========================
Gram decomposition of a noisy data matrix and the selection-matrix view of
Hankel row inner products.

With ``H = [Hu; Hy_clean + Hw]`` and ``H_hat = [Hu; Hy_clean]``::

    H Hᵀ = H_hat H_hatᵀ + (noise Gram) + (u-noise cross) + (y-noise cross)

Row ``i`` of a depth-L Hankel matrix of ``z`` is ``z · U_i`` where ``U_i``
embeds an ``N_hat × N_hat`` identity below ``i`` zero rows, so
``<z_i, z_j> = z · M_ij · zᵀ`` with ``M_ij = U_i U_jᵀ``.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from app.config import GRAM_IDENTITY_TOL
from app.core.hankel import build_hankel
from app.errors import DepthError, DimensionError, NumericError, ParameterError, RowIndexError
from app.utils.rng import make_rng

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Gram decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GramDecomposition:
    clean: np.ndarray
    noise: np.ndarray
    cross_u: np.ndarray
    cross_y: np.ndarray
    total: np.ndarray
    identity_residual: float
    lambda_total: float
    lambda_clean: float
    min_eig_cross_u: float
    min_eig_cross_y: float


def _block(M: ArrayLike, name: str) -> np.ndarray:
    arr = np.asarray(getattr(M, "entries", M), dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return arr


def _kth_largest(G: np.ndarray, k: int) -> float:
    return float(np.linalg.eigvalsh(G)[::-1][k - 1])


def gram_decomposition(Hu: ArrayLike, Hy_clean: ArrayLike, Hw: ArrayLike, n: int) -> GramDecomposition:
    """
    Split ``H Hᵀ`` into its clean, noise and cross blocks.

    ``lambda_*`` is the (L + n)-th largest eigenvalue; the cross blocks are
    indefinite, so only their smallest eigenvalue is reported.
    """
    Hu = _block(Hu, "Hu")
    Hy_clean = _block(Hy_clean, "Hy_clean")
    Hw = _block(Hw, "Hw")
    if not Hu.shape == Hy_clean.shape == Hw.shape:
        raise DimensionError(
            f"block shapes differ: Hu {Hu.shape}, Hy_clean {Hy_clean.shape}, Hw {Hw.shape}"
        )
    L = Hu.shape[0]
    if not 1 <= L + n <= 2 * L:
        raise ParameterError(f"L + n = {L + n} must lie in 1..{2 * L}")

    zeros = np.zeros((L, L))
    H_hat = np.vstack([Hu, Hy_clean])
    H = np.vstack([Hu, Hy_clean + Hw])
    clean = H_hat @ H_hat.T
    noise = np.block([[zeros, zeros], [zeros, Hw @ Hw.T]])
    uw = Hu @ Hw.T
    cross_u = np.block([[zeros, uw], [uw.T, zeros]])
    yw = Hy_clean @ Hw.T
    cross_y = np.block([[zeros, zeros], [zeros, yw + yw.T]])
    total = H @ H.T

    residual = float(np.max(np.abs(clean + noise + cross_u + cross_y - total)))
    scale = max(1.0, float(np.max(np.abs(total))))
    if residual > GRAM_IDENTITY_TOL * scale:
        raise NumericError(f"Gram identity residual {residual:.3g} exceeds {GRAM_IDENTITY_TOL:g}·{scale:.3g}")

    k = L + n
    return GramDecomposition(
        clean=clean,
        noise=noise,
        cross_u=cross_u,
        cross_y=cross_y,
        total=total,
        identity_residual=residual,
        lambda_total=_kth_largest(total, k),
        lambda_clean=_kth_largest(clean, k),
        min_eig_cross_u=float(np.linalg.eigvalsh(cross_u)[0]),
        min_eig_cross_y=float(np.linalg.eigvalsh(cross_y)[0]),
    )


# ---------------------------------------------------------------------------
# Selection matrices
# ---------------------------------------------------------------------------


class SelectionCheck(NamedTuple):
    i: int
    j: int
    trace: float
    expected_trace: int
    max_form_error: float


class FormMoments(NamedTuple):
    mean: float
    std: float
    expected_mean: float
    draws: int


def _check_rows(L: int, N: int, *rows: int) -> int:
    if L < 1:
        raise DepthError(f"L={L} must be >= 1")
    if N < L:
        raise DepthError(f"N={N} must be >= L={L}")
    for idx in rows:
        if not 0 <= idx <= L - 1:
            raise RowIndexError(f"row index {idx} out of range 0..{L - 1}")
    return N - L + 1


def selection_matrix(L: int, N: int, i: int) -> np.ndarray:
    """``(N + 1) × N_hat`` matrix with ``i`` zero rows above an identity block."""
    N_hat = _check_rows(L, N, i)
    U = np.zeros((N + 1, N_hat))
    U[i : i + N_hat] = np.eye(N_hat)
    return U


def selection_matrix_check(
    L: int, N: int, i: int, j: int, seed: int = 0, draws: int = 5
) -> SelectionCheck:
    """
    Build ``M_ij`` explicitly, compare ``z M_ij zᵀ`` with the Hankel row
    inner product for ``draws`` random ``z`` and check the trace.
    """
    N_hat = _check_rows(L, N, i, j)
    M = selection_matrix(L, N, i) @ selection_matrix(L, N, j).T
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(draws):
        z = rng.standard_normal(N + 1)
        rows = build_hankel(z[:N], L).entries
        direct = float(rows[i] @ rows[j])
        form = float(z @ M @ z)
        err = abs(direct - form)
        if err > 1e-9 * max(1.0, abs(direct)):
            raise NumericError(f"<z_{i}, z_{j}> = {direct!r} but z M zᵀ = {form!r}")
        worst = max(worst, err)

    trace = float(np.trace(M))
    expected = N_hat if i == j else 0
    if trace != expected:
        raise NumericError(f"trace(M_{i}{j}) = {trace} but expected {expected}")
    return SelectionCheck(i, j, trace, expected, worst)


def quadratic_form_moments(
    L: int, N: int, i: int, j: int, draws: int = 10_000, seed: int = 0
) -> FormMoments:
    """Monte Carlo mean / std of ``z M_ij zᵀ`` for standard-normal ``z``."""
    N_hat = _check_rows(L, N, i, j)
    if draws < 1:
        raise ParameterError(f"draws={draws} must be >= 1")
    z = make_rng(seed).standard_normal((draws, N + 1))
    forms = np.einsum("dk,dk->d", z[:, i : i + N_hat], z[:, j : j + N_hat])
    logger.debug("Quadratic form M_%d%d over %d draws: mean=%.4g", i, j, draws, forms.mean())
    return FormMoments(
        mean=float(forms.mean()),
        std=float(forms.std()),
        expected_mean=float(N_hat if i == j else 0),
        draws=draws,
    )
