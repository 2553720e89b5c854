"""
app/experiments/runners.py
==========================
One runner per CLI subcommand.  Each takes a resolved
:class:`ExperimentConfig`, writes its CSV panels under ``cfg.out`` and
returns the written paths.

Frozen schemas (README lists them with units):

    rollout_N<N>.csv        step,seed,L,y_pred,y_clean
    depth_sweep_var<v>.csv  L,N,strategy,mean_rmse,std_rmse
    singvals_L<L>.csv       N,N_hat,median_inv_sigma,q25_inv_sigma,q75_inv_sigma,
                            iqr_inv_sigma,epsilon_N,sqrt_epsilon_N,scale_bound,bound_frequency
    hw_events.csv           L,N,N_hat,beta,gamma,theta,epsilon_N,diag_freq,offdiag_freq,joint_freq,trials
    lqr_data.csv            step,seed,L,u,y
    lqr_deviation.csv       step,seed,L,deviation
    lqr_tracking.csv        step,seed,L,reference,y,u,baseline_y
    lqr_summary.csv         seed,L,deviation_rms,unstable,closed_loop_radius
"""

import logging
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.concentration.gershgorin import epsilon_n, resolve_constants, theta_bound
from app.concentration.sweeps import hw_event_frequencies, singular_value_sweep
from app.config import N_JOBS
from app.control.traj_lqr import lqr_experiment
from app.experiments.config import ExperimentConfig
from app.plant.lti import NoiseSpec
from app.rollout.engine import depth_sweep, rollout_seeds, self_consistency_run
from app.utils.artifacts import write_csv
from app.utils.rng import STREAM_TRIAL, derive_seed

logger = logging.getLogger(__name__)

ROLLOUT_COLUMNS = ("step", "seed", "L", "y_pred", "y_clean")
DEPTH_SWEEP_COLUMNS = ("L", "N", "strategy", "mean_rmse", "std_rmse")
SINGVAL_COLUMNS = (
    "N",
    "N_hat",
    "median_inv_sigma",
    "q25_inv_sigma",
    "q75_inv_sigma",
    "iqr_inv_sigma",
    "epsilon_N",
    "sqrt_epsilon_N",
    "scale_bound",
    "bound_frequency",
)
HW_EVENT_COLUMNS = (
    "L",
    "N",
    "N_hat",
    "beta",
    "gamma",
    "theta",
    "epsilon_N",
    "diag_freq",
    "offdiag_freq",
    "joint_freq",
    "trials",
)
LQR_DATA_COLUMNS = ("step", "seed", "L", "u", "y")
LQR_DEVIATION_COLUMNS = ("step", "seed", "L", "deviation")
LQR_TRACKING_COLUMNS = ("step", "seed", "L", "reference", "y", "u", "baseline_y")
LQR_SUMMARY_COLUMNS = ("seed", "L", "deviation_rms", "unstable", "closed_loop_radius")


# ---------------------------------------------------------------------------
# rollout
# ---------------------------------------------------------------------------


def cmd_rollout(cfg: ExperimentConfig) -> list[Path]:
    """Rollouts from the origin for every L; noise redrawn per trial, input fixed unless resampled."""
    plant = cfg.plant()
    strategy = cfg.strategy[0]
    paths = []
    for N in cfg.N_grid:
        frames = []
        for L in cfg.L:

            def _one(k: int, L: int = L) -> pd.DataFrame:
                input_seed, noise_seed = rollout_seeds(cfg.seed, k, cfg.resample_input)
                run = self_consistency_run(
                    plant,
                    L,
                    N,
                    NoiseSpec(cfg.variance, noise_seed),
                    input_seed,
                    strategy,
                    ssa_both=cfg.ssa_both,
                )
                return pd.DataFrame(
                    {
                        "step": np.arange(len(run.result)),
                        "seed": np.uint64(noise_seed),
                        "L": L,
                        "y_pred": run.result.y_pred.values,
                        "y_clean": run.y_clean.values,
                    }
                )

            frames.extend(
                Parallel(n_jobs=N_JOBS, prefer="threads")(delayed(_one)(k) for k in range(cfg.trials))
            )
        df = pd.concat(frames, ignore_index=True)
        paths.append(
            write_csv(df, cfg.out / f"rollout_N{N}.csv", ROLLOUT_COLUMNS, sort_by=("L", "seed", "step"))
        )
    return paths


# ---------------------------------------------------------------------------
# depth-sweep
# ---------------------------------------------------------------------------


def cmd_depth_sweep(cfg: ExperimentConfig) -> list[Path]:
    plant = cfg.plant()
    paths = []
    for variance, N_grid in cfg.depth_sweep_panels():
        logger.info("Depth sweep panel: var=%g N=%s L=%s", variance, N_grid, cfg.L)
        rows = depth_sweep(
            plant,
            cfg.L,
            N_grid,
            cfg.strategy,
            NoiseSpec(variance, cfg.seed),
            cfg.trials,
            resample_input=cfg.resample_input,
            ssa_both=cfg.ssa_both,
        )
        df = pd.DataFrame(
            {
                "L": [r.L for r in rows],
                "N": [r.N for r in rows],
                "strategy": [r.strategy for r in rows],
                "mean_rmse": [r.mean_rmse for r in rows],
                "std_rmse": [r.std_rmse for r in rows],
            }
        )
        paths.append(
            write_csv(
                df,
                cfg.out / f"depth_sweep_var{variance:g}.csv",
                DEPTH_SWEEP_COLUMNS,
                sort_by=("N", "strategy", "L"),
            )
        )
    return paths


# ---------------------------------------------------------------------------
# Concentration
# ---------------------------------------------------------------------------


def cmd_singvals(cfg: ExperimentConfig) -> list[Path]:
    paths = []
    for L in cfg.L:
        table = singular_value_sweep(L, cfg.N_grid, cfg.trials, cfg.seed, cfg.beta, cfg.gamma)
        paths.append(write_csv(table, cfg.out / f"singvals_L{L}.csv", SINGVAL_COLUMNS, sort_by=("N",)))
    return paths


def cmd_hw_events(cfg: ExperimentConfig) -> list[Path]:
    records = []
    for L in cfg.L:
        beta, gamma = resolve_constants(L, cfg.beta, cfg.gamma)
        for N in cfg.N_grid:
            freq = hw_event_frequencies(L, N, beta, gamma, cfg.trials, cfg.seed)
            N_hat = N - L + 1
            records.append(
                {
                    "L": L,
                    "N": N,
                    "N_hat": N_hat,
                    "beta": beta,
                    "gamma": gamma,
                    "theta": theta_bound(N_hat, L, beta, gamma),
                    "epsilon_N": epsilon_n(N_hat, beta, gamma),
                    "diag_freq": freq.diag,
                    "offdiag_freq": freq.offdiag,
                    "joint_freq": freq.joint,
                    "trials": freq.trials,
                }
            )
    df = pd.DataFrame.from_records(records, columns=list(HW_EVENT_COLUMNS))
    return [write_csv(df, cfg.out / "hw_events.csv", HW_EVENT_COLUMNS, sort_by=("L", "N"))]


# ---------------------------------------------------------------------------
# lqr
# ---------------------------------------------------------------------------


def cmd_lqr(cfg: ExperimentConfig) -> list[Path]:
    """Servo loops on the true plant for every L; one file per panel plus a summary."""
    plant = cfg.plant()
    samples = cfg.N_grid[0]
    reference = np.ones(cfg.horizon)
    if cfg.trials == 1:
        seeds = [cfg.seed]
    else:
        seeds = [derive_seed(cfg.seed, STREAM_TRIAL, t) for t in range(cfg.trials)]

    jobs = [(L, seed) for L in cfg.L for seed in seeds]
    experiments = Parallel(n_jobs=N_JOBS, prefer="threads")(
        delayed(lqr_experiment)(
            plant,
            L,
            seed,
            samples=samples,
            data_noise_var=cfg.variance,
            data_input_noise_var=cfg.input_noise_var,
            loop_noise_var=cfg.loop_noise_var,
            reference=reference,
        )
        for L, seed in jobs
    )

    data, deviation, tracking, summary = [], [], [], []
    for exp in experiments:
        res = exp.result
        seed = np.uint64(exp.seed)
        data.append(
            pd.DataFrame(
                {
                    "step": np.arange(exp.data_u.size),
                    "seed": seed,
                    "L": exp.L,
                    "u": exp.data_u,
                    "y": exp.data_y,
                }
            )
        )
        steps = np.arange(res.y.size)
        deviation.append(
            pd.DataFrame({"step": steps, "seed": seed, "L": exp.L, "deviation": res.deviation})
        )
        tracking.append(
            pd.DataFrame(
                {
                    "step": steps,
                    "seed": seed,
                    "L": exp.L,
                    "reference": res.reference,
                    "y": res.y,
                    "u": res.u,
                    "baseline_y": res.baseline_y,
                }
            )
        )
        summary.append(
            {
                "seed": seed,
                "L": exp.L,
                "deviation_rms": res.deviation_rms,
                "unstable": res.unstable,
                "closed_loop_radius": exp.design.closed_loop_radius,
            }
        )

    panels = (
        (data, "lqr_data.csv", LQR_DATA_COLUMNS),
        (deviation, "lqr_deviation.csv", LQR_DEVIATION_COLUMNS),
        (tracking, "lqr_tracking.csv", LQR_TRACKING_COLUMNS),
    )
    paths = [
        write_csv(pd.concat(frames, ignore_index=True), cfg.out / name, columns, ("L", "seed", "step"))
        for frames, name, columns in panels
    ]
    paths.append(
        write_csv(pd.DataFrame(summary), cfg.out / "lqr_summary.csv", LQR_SUMMARY_COLUMNS, ("L", "seed"))
    )
    return paths


COMMANDS: dict[str, Callable[[ExperimentConfig], list[Path]]] = {
    "rollout": cmd_rollout,
    "depth-sweep": cmd_depth_sweep,
    "singvals": cmd_singvals,
    "hw-events": cmd_hw_events,
    "lqr": cmd_lqr,
}
