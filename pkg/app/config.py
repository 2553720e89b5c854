"""
app/config.py
=============
Numerical and I/O tunables, read from the environment (and a project-root
``.env``) with typed defaults.  Experiment grids live in
:mod:`app.experiments.config`.
"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load .env from project root
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
load_dotenv(_PROJECT_ROOT / ".env")


def _optional_float(name: str) -> Optional[float]:
    raw = os.getenv(name, "").strip()
    return float(raw) if raw else None


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------
OUTPUT_DIR: Path = _PROJECT_ROOT / os.getenv("OUTPUT_DIR", "results")
# 17 significant digits round-trip every float64
CSV_FLOAT_FORMAT: str = os.getenv("CSV_FLOAT_FORMAT", "%.17g")

# ---------------------------------------------------------------------------
# Randomness / parallelism
# ---------------------------------------------------------------------------
DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "0"))
N_JOBS: int = int(os.getenv("N_JOBS", "1"))

# ---------------------------------------------------------------------------
# Numerics
# ---------------------------------------------------------------------------
# Relative singular-value cut-off; None → max(rows, cols) · machine epsilon
RANK_TOL: Optional[float] = _optional_float("RANK_TOL")
DARE_TOL: float = float(os.getenv("DARE_TOL", "1e-10"))
DARE_MAX_ITER: int = int(os.getenv("DARE_MAX_ITER", "100000"))
GRAM_IDENTITY_TOL: float = float(os.getenv("GRAM_IDENTITY_TOL", "1e-10"))

# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------
SAMPLING_TIME: float = float(os.getenv("SAMPLING_TIME", "0.1"))
PE_MAX_REDRAWS: int = int(os.getenv("PE_MAX_REDRAWS", "10"))
SSA_MAX_WINDOW: int = int(os.getenv("SSA_MAX_WINDOW", "100"))
LQR_SAMPLES: int = int(os.getenv("LQR_SAMPLES", "400"))
LQR_HORIZON: int = int(os.getenv("LQR_HORIZON", "400"))
# |y| above this marks a closed loop as diverged
INSTABILITY_THRESHOLD: float = float(os.getenv("INSTABILITY_THRESHOLD", "1e6"))

# Servo weights: Q = diag(q_delta · I, q_error), R = r
LQR_Q_DELTA: float = float(os.getenv("LQR_Q_DELTA", "0.0"))
LQR_Q_ERROR: float = float(os.getenv("LQR_Q_ERROR", "1.0"))
LQR_R: float = float(os.getenv("LQR_R", "1.0"))

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE: str = os.getenv("LOG_FILE", "logs/deep_hankel.log")

# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------
PROJECT_ROOT: Path = _PROJECT_ROOT
