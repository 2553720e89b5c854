"""
app/main.py
===========
Command-line entry point.

Subcommands
-----------
    rollout      — rollouts from the origin, fixed input, redrawn noise
    depth-sweep  — self-consistency RMSE over depth, length and preprocessing
    singvals     — 1/sigma_min of random Hankel matrices vs. N, with bounds
    hw-events    — frequencies of the diagonal-dominance events
    lqr          — trajectory-space servo loops on the benchmark plant

Every run writes its CSV panels and the resolved ``config.txt`` into
``--out``.  Exit codes: 0 success, 2 configuration error, 3 numeric
failure, 4 expressivity / persistency-of-excitation failure.

Run::

    python -m app.main depth-sweep --L 2,5,10,20 --trials 10 --out results/
"""

import argparse
import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional, Sequence

# --- Ensure project root is on sys.path so ``app.*`` imports work ---
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(_PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(_PROJECT_ROOT))

from app.config import LOG_FILE, LOG_LEVEL, PROJECT_ROOT
from app.errors import HankelLabError
from app.experiments.config import EXPERIMENTS, dump_config, parse_bool, resolve_config
from app.experiments.runners import COMMANDS
from app.utils.artifacts import snapshot_path

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------


def _setup_logging() -> None:
    if logging.getLogger().handlers:
        return
    log_path = Path(LOG_FILE)
    if not log_path.is_absolute():
        log_path = PROJECT_ROOT / log_path
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handlers = [
        logging.StreamHandler(sys.stdout),
        logging.handlers.RotatingFileHandler(log_path, maxBytes=5_000_000, backupCount=3, delay=True),
    ]
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
    )


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _int_list(raw: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in raw.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _bool(raw: str) -> bool:
    try:
        return parse_bool(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _u64(raw: str) -> int:
    value = int(raw)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {raw}")
    return value


_HELP = {
    "rollout": "rollouts from the origin, fixed input, redrawn noise",
    "depth-sweep": "self-consistency RMSE over depth, length and preprocessing",
    "singvals": "1/sigma_min of random Hankel matrices vs. N",
    "hw-events": "frequencies of the diagonal-dominance events",
    "lqr": "trajectory-space servo loops on the benchmark plant",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deep_hankel_lab",
        description="Deep Hankel matrix experiments: rollouts, concentration and trajectory-space LQR",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--seed", type=_u64, help="master seed (u64)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--trials", type=int, help="rollouts / Monte Carlo trials / LQR repetitions")
        p.add_argument("--L", type=_int_list, help="depth list, e.g. 2,5,10,20")
        p.add_argument("--N", type=_int_list, help="data length list")
        p.add_argument("--noise-var", type=float, dest="noise_var", help="output noise variance")
        p.add_argument(
            "--input-noise-var",
            type=float,
            dest="input_noise_var",
            help="variance of the noise on the recorded input (lqr identification data)",
        )
        p.add_argument(
            "--strategy",
            choices=["noisy", "smooth", "ssa"],
            help="preprocessing strategy (default: experiment-specific)",
        )
        p.add_argument("--resample-input", type=_bool, dest="resample_input", metavar="BOOL")
        p.add_argument("--ssa-both", type=_bool, dest="ssa_both", metavar="BOOL")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    values = {
        "seed": args.seed,
        "out": args.out,
        "trials": args.trials,
        "L": args.L,
        "N": args.N,
        "noise_var": args.noise_var,
        "input_noise_var": args.input_noise_var,
        "strategy": (args.strategy,) if args.strategy else None,
        "resample_input": args.resample_input,
        "ssa_both": args.ssa_both,
    }
    return {k: v for k, v in values.items() if v is not None}


# ---------------------------------------------------------------------------
# Main entry
# ---------------------------------------------------------------------------


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    try:
        cfg = resolve_config(args.command, args.config, _overrides(args))
        logger.info("Starting %s → %s (seed=%d)", cfg.experiment, cfg.out, cfg.seed)
        paths = COMMANDS[cfg.experiment](cfg)
        snapshot = dump_config(cfg, snapshot_path(cfg.out))
        logger.info("Finished %s: %d file(s) + %s", cfg.experiment, len(paths), snapshot.name)
    except HankelLabError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
