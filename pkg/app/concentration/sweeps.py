"""
app/concentration/sweeps.py
===========================
Monte Carlo experiments over random Hankel matrices:

    hw_event_frequencies   — how often the diagonal-dominance events hold
    concentration_samples  — per-trial 1/sigma_min records
    singular_value_sweep   — 1/sigma_min statistics vs. N with both bounds
    lambda_growth_sweep    — growth of lambda_{L+n}(H Hᵀ) with N for a plant

Trials fan out over threads; every trial draws from its own derived seed so
tables are identical for any ``n_jobs``.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.concentration.gershgorin import (
    epsilon_n,
    gram_events,
    random_hankel,
    resolve_constants,
    row_gram,
    scale_bound,
    theta_bound,
)
from app.concentration.gram import gram_decomposition
from app.config import N_JOBS
from app.core.hankel import build_hankel
from app.errors import DepthError, ParameterError
from app.plant.lti import LtiSystem, NoiseSpec, gaussian_signal, simulate
from app.utils.rng import STREAM_INPUT, STREAM_NOISE, STREAM_TRIAL, derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConcentrationSample:
    seed: int
    sigma_min: float
    inv_sigma_sq: float
    bound_holds: bool
    diag_event: bool
    offdiag_event: bool


class EventFrequencies(NamedTuple):
    diag: float
    offdiag: float
    joint: float
    trials: int


def _check_trials(trials: int) -> None:
    if trials < 1:
        raise ParameterError(f"trials={trials} must be >= 1")


def trial_seed(seed: int, N: int, t: int) -> int:
    return derive_seed(seed, STREAM_TRIAL, N, t)


# ---------------------------------------------------------------------------
# Event frequencies
# ---------------------------------------------------------------------------


def hw_event_frequencies(
    L: int,
    N: int,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
    trials: int = 200,
    seed: int = 0,
    n_jobs: int = N_JOBS,
) -> EventFrequencies:
    """Fraction of trials in which the diagonal, off-diagonal and joint events hold."""
    _check_trials(trials)
    if L < 2:
        raise DepthError(f"L={L} must be >= 2 for the off-diagonal event")
    if N < L:
        raise DepthError(f"N={N} must be >= L={L}")
    beta, gamma = resolve_constants(L, beta, gamma)
    N_hat = N - L + 1
    theta = theta_bound(N_hat, L, beta, gamma)

    def _one(t: int) -> tuple[bool, bool]:
        G = row_gram(random_hankel(L, N, trial_seed(seed, N, t)))
        return gram_events(G, N_hat, beta, theta)

    events = np.array(
        Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_one)(t) for t in range(trials)),
        dtype=bool,
    ).reshape(trials, 2)
    freq = EventFrequencies(
        diag=float(events[:, 0].mean()),
        offdiag=float(events[:, 1].mean()),
        joint=float(np.all(events, axis=1).mean()),
        trials=trials,
    )
    logger.info(
        "Event frequencies L=%d N=%d beta=%.4g gamma=%.4g: diag=%.3f offdiag=%.3f joint=%.3f",
        L,
        N,
        beta,
        gamma,
        freq.diag,
        freq.offdiag,
        freq.joint,
    )
    return freq


# ---------------------------------------------------------------------------
# Smallest singular value
# ---------------------------------------------------------------------------


def concentration_samples(
    L: int,
    N: int,
    trials: int,
    seed: int = 0,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
    n_jobs: int = N_JOBS,
) -> list[ConcentrationSample]:
    _check_trials(trials)
    beta, gamma = resolve_constants(L, beta, gamma)
    N_hat = N - L + 1
    eps = epsilon_n(max(N_hat, 1), beta, gamma)
    theta = theta_bound(N_hat, L, beta, gamma)

    def _one(t: int) -> ConcentrationSample:
        s_seed = trial_seed(seed, N, t)
        H = random_hankel(L, N, s_seed)
        s = np.linalg.svd(H.entries, compute_uv=False)
        sigma_min = float(s[-1]) if N_hat >= L else 0.0
        inv_sq = 1.0 / sigma_min**2 if sigma_min > 0.0 else float("inf")
        diag_ok, off_ok = gram_events(row_gram(H), N_hat, beta, theta)
        return ConcentrationSample(
            seed=s_seed,
            sigma_min=sigma_min,
            inv_sigma_sq=inv_sq,
            bound_holds=inv_sq <= eps,
            diag_event=diag_ok,
            offdiag_event=off_ok,
        )

    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_one)(t) for t in range(trials))


def singular_value_sweep(
    L: int,
    N_grid: Sequence[int],
    trials: int = 50,
    seed: int = 0,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
    n_jobs: int = N_JOBS,
) -> pd.DataFrame:
    """
    One row per N: median and quartiles of ``1/sigma_min`` next to
    ``eps_N``, ``sqrt(eps_N)`` and ``(L + 1) / (L sqrt(N_hat))``, plus the
    fraction of trials with ``1/sigma_min^2 <= eps_N``.
    """
    beta, gamma = resolve_constants(L, beta, gamma)
    rows = []
    for N in sorted(int(n) for n in N_grid):
        if N < L:
            raise DepthError(f"grid value N={N} must be >= L={L}")
        samples = concentration_samples(L, N, trials, seed, beta, gamma, n_jobs)
        inv_sigma = np.array([1.0 / s.sigma_min if s.sigma_min > 0 else np.inf for s in samples])
        q25, median, q75 = np.quantile(inv_sigma, [0.25, 0.5, 0.75])
        N_hat = N - L + 1
        eps = epsilon_n(N_hat, beta, gamma)
        rows.append(
            {
                "N": N,
                "N_hat": N_hat,
                "median_inv_sigma": float(median),
                "q25_inv_sigma": float(q25),
                "q75_inv_sigma": float(q75),
                "iqr_inv_sigma": float(q75 - q25),
                "epsilon_N": eps,
                "sqrt_epsilon_N": float(np.sqrt(eps)),
                "scale_bound": scale_bound(L, N_hat),
                "bound_frequency": float(np.mean([s.bound_holds for s in samples])),
            }
        )
        logger.info("Singular-value sweep L=%d N=%d: median 1/sigma_min=%.4g", L, N, median)
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Eigenvalue growth for plant data
# ---------------------------------------------------------------------------


def lambda_growth_sweep(
    plant: LtiSystem,
    L: int,
    N_grid: Sequence[int],
    noise_var: float,
    trials: int = 20,
    seed: int = 0,
    n_jobs: int = N_JOBS,
) -> pd.DataFrame:
    """Median ``lambda_{L+n}`` of the noisy and clean Gram matrices vs. N."""
    _check_trials(trials)
    n = plant.n

    def _one(N: int, t: int):
        u = gaussian_signal(N, derive_seed(seed, STREAM_INPUT, N, t))
        y_clean, y_noisy = simulate(plant, u, noise=NoiseSpec(noise_var, derive_seed(seed, STREAM_NOISE, N, t)))
        Hw = build_hankel(y_noisy.values - y_clean.values, L)
        return gram_decomposition(build_hankel(u, L), build_hankel(y_clean, L), Hw, n)

    rows = []
    for N in sorted(int(v) for v in N_grid):
        if N < L:
            raise DepthError(f"grid value N={N} must be >= L={L}")
        parts = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_one)(N, t) for t in range(trials))
        rows.append(
            {
                "N": N,
                "median_lambda_total": float(np.median([p.lambda_total for p in parts])),
                "median_lambda_clean": float(np.median([p.lambda_clean for p in parts])),
                "median_min_eig_cross_u": float(np.median([p.min_eig_cross_u for p in parts])),
                "median_min_eig_cross_y": float(np.median([p.min_eig_cross_y for p in parts])),
            }
        )
    return pd.DataFrame(rows)
