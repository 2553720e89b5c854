"""
scripts/reproduce_figures.py
============================
Run every experiment with its defaults and write the CSV panels under
``results/<experiment>/``.

Usage::

    python scripts/reproduce_figures.py [--seed 0] [--out results] [--quick]

``--quick`` cuts trials and grids so the whole set finishes in about a
minute; the default settings take considerably longer (the variance-1.0
depth sweep dominates).
"""

import argparse
import sys
from pathlib import Path

# Ensure project root is importable
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(_PROJECT_ROOT))

from app.experiments.config import EXPERIMENTS
from app.main import main as run_cli

QUICK_FLAGS = {
    "rollout": ["--trials", "5"],
    "depth-sweep": ["--trials", "3", "--N", "200", "--noise-var", "0.1", "--L", "2,5,10,20"],
    "singvals": ["--trials", "10", "--N", "100,1000,10000", "--L", "2,8"],
    "hw-events": ["--trials", "50"],
    "lqr": ["--L", "5,10"],
}

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Reproduce all experiment panels")
    parser.add_argument("--seed", default="0")
    parser.add_argument("--out", type=Path, default=_PROJECT_ROOT / "results")
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    failures = []
    for name in EXPERIMENTS:
        argv = [name, "--seed", args.seed, "--out", str(args.out / name)]
        if args.quick:
            argv += QUICK_FLAGS[name]
        print(f"==> {' '.join(argv)}")
        code = run_cli(argv)
        if code != 0:
            failures.append((name, code))

    if failures:
        for name, code in failures:
            print(f"{name} failed with exit code {code}")
        sys.exit(1)
    print(f"Done.  CSVs saved under {args.out}/")
