"""
app/concentration/gershgorin.py
===============================
Gershgorin certificates for the smallest singular value of a random
Hankel matrix.

For ``H`` of depth L with rows ``z_i`` (each ``N_hat = N - L + 1`` long)
the Gram matrix is ``G = [<z_i, z_j>]``.  When every row ratio

    r_i = sum_{j != i} |<z_i, z_j>| / <z_i, z_i>

is below one, every eigenvalue ``1/sigma^2`` of ``G^-1`` lies in the union
of the intervals ``[c_i - rho_i, c_i + rho_i]`` with

    c_i = 1 / <z_i, z_i>,    rho_i = r_i / (<z_i, z_i> (1 - r_i)).

The events

    |<z_i, z_i> - N_hat| <= beta · N_hat        (all i)
    |<z_i, z_j>|         <= theta               (all i != j)
    theta = gamma (1 - beta) N_hat / (L - 1)

make G diagonally dominant and bound ``1/sigma^2`` by

    eps_N = (1 / (N_hat (1 - beta))) · (1 + gamma / (1 - gamma)).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from app.core.hankel import HankelMatrix, build_hankel
from app.errors import DepthError, ParameterError
from app.plant.lti import gaussian_signal

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Constants and closed-form bounds
# ---------------------------------------------------------------------------


def default_constants(L: int) -> tuple[float, float]:
    """``beta = gamma = 1 / (L + 1)``."""
    value = 1.0 / (L + 1)
    return value, value


def resolve_constants(
    L: int, beta: Optional[float] = None, gamma: Optional[float] = None
) -> tuple[float, float]:
    default_beta, default_gamma = default_constants(L)
    beta = default_beta if beta is None else float(beta)
    gamma = default_gamma if gamma is None else float(gamma)
    for name, value in (("beta", beta), ("gamma", gamma)):
        if not 0.0 < value < 1.0:
            raise ParameterError(f"{name}={value} must lie strictly between 0 and 1")
    return beta, gamma


def epsilon_n(N_hat: int, beta: float, gamma: float) -> float:
    if N_hat < 1:
        raise ParameterError(f"N_hat={N_hat} must be >= 1")
    return (1.0 / (N_hat * (1.0 - beta))) * (1.0 + gamma / (1.0 - gamma))


def theta_bound(N_hat: int, L: int, beta: float, gamma: float) -> Optional[float]:
    """Off-diagonal threshold; undefined (``None``) for a single row."""
    if L < 2:
        return None
    return gamma * (1.0 - beta) * N_hat / (L - 1)


def scale_bound(L: int, N_hat: int) -> float:
    """Large-N approximation ``(L + 1) / (L · sqrt(N_hat))`` of ``sqrt(eps_N)``."""
    return (L + 1) / (L * math.sqrt(N_hat))


# ---------------------------------------------------------------------------
# Certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GershgorinCertificate:
    L: int
    N: int
    N_hat: int
    beta: float
    gamma: float
    theta: Optional[float]
    centers: np.ndarray
    radii: np.ndarray
    row_ratios: np.ndarray
    diag_event: bool
    offdiag_event: bool
    epsilon_N: float

    @property
    def dominance(self) -> bool:
        return self.diag_event and self.offdiag_event

    @property
    def lower(self) -> np.ndarray:
        return self.centers - self.radii

    @property
    def upper(self) -> np.ndarray:
        return self.centers + self.radii

    def contains(self, values: ArrayLike, rtol: float = 1e-9) -> bool:
        """True iff every value lies in at least one disk (intervals on the real line)."""
        values = np.atleast_1d(np.asarray(values, dtype=float))
        slack = rtol * np.maximum(np.abs(self.centers), self.radii)
        slack = np.where(np.isfinite(slack), slack, 0.0)
        inside = (values[:, None] >= self.lower - slack) & (values[:, None] <= self.upper + slack)
        return bool(np.all(inside.any(axis=1)))


def row_gram(H: HankelMatrix) -> np.ndarray:
    """``[<z_i, z_j>]`` computed from the rows of H."""
    E = H.entries
    return E @ E.T


def gram_events(G: np.ndarray, N_hat: int, beta: float, theta: Optional[float]) -> tuple[bool, bool]:
    """(diagonal event, off-diagonal event) for one Gram matrix."""
    d = np.diag(G)
    diag_ok = bool(np.all(np.abs(d - N_hat) <= beta * N_hat))
    if theta is None:
        return diag_ok, True
    off = G[~np.eye(G.shape[0], dtype=bool)]
    return diag_ok, bool(np.all(np.abs(off) <= theta))


def gershgorin_certificate(
    H: HankelMatrix, beta: Optional[float] = None, gamma: Optional[float] = None
) -> GershgorinCertificate:
    """
    Disks for the eigenvalues of ``(H Hᵀ)^-1`` and the ``eps_N`` bound.

    A depth-1 matrix degenerates to a single disk with zero radius and no
    off-diagonal threshold.  Radii are ``+inf`` for rows whose ratio
    reaches one.
    """
    L, N_hat = H.shape
    beta, gamma = resolve_constants(L, beta, gamma)
    G = row_gram(H)
    d = np.diag(G).copy()
    if np.any(d <= 0.0):
        raise ParameterError("Hankel matrix has an all-zero row; centers are undefined")

    off_sums = np.abs(G).sum(axis=1) - np.abs(d)
    r = off_sums / d if L > 1 else np.zeros(1)
    rho = np.full(L, np.inf)
    ok = r < 1.0
    rho[ok] = r[ok] / (d[ok] * (1.0 - r[ok]))

    theta = theta_bound(N_hat, L, beta, gamma)
    diag_ok, off_ok = gram_events(G, N_hat, beta, theta)
    cert = GershgorinCertificate(
        L=L,
        N=N_hat + L - 1,
        N_hat=N_hat,
        beta=beta,
        gamma=gamma,
        theta=theta,
        centers=1.0 / d,
        radii=rho,
        row_ratios=r,
        diag_event=diag_ok,
        offdiag_event=off_ok,
        epsilon_N=epsilon_n(N_hat, beta, gamma),
    )
    logger.debug(
        "Gershgorin L=%d N_hat=%d max r=%.3g dominance=%s eps_N=%.4g",
        L,
        N_hat,
        float(r.max()),
        cert.dominance,
        cert.epsilon_N,
    )
    return cert


def inverse_gram_eigenvalues(H: HankelMatrix) -> np.ndarray:
    """Eigenvalues ``1/sigma_i^2`` of ``(H Hᵀ)^-1``, ascending."""
    s = np.linalg.svd(H.entries, compute_uv=False)
    with np.errstate(divide="ignore"):
        return np.sort(1.0 / s**2)


def random_hankel(L: int, N: int, seed: int) -> HankelMatrix:
    """Depth-L Hankel matrix of N IID standard-normal samples."""
    if N < L:
        raise DepthError(f"N={N} must be >= L={L} for a random Hankel instance")
    return build_hankel(gaussian_signal(N, seed), L)
