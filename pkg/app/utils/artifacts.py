"""
app/utils/artifacts.py
======================
Result files: CSV tables with a frozen numeric format and the resolved
configuration snapshot written next to them.
"""

import logging
from pathlib import Path
from typing import Sequence

import pandas as pd

from app.config import CSV_FLOAT_FORMAT

logger = logging.getLogger(__name__)

SNAPSHOT_NAME = "config.txt"


def write_csv(
    df: pd.DataFrame,
    path: Path,
    columns: Sequence[str],
    sort_by: Sequence[str] = (),
) -> Path:
    """
    Write ``df[columns]`` sorted by ``sort_by`` (stable) with 17 significant
    digits, ``.`` decimals and ``\\n`` line endings.
    """
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise KeyError(f"result table lacks columns {missing}")
    table = df.loc[:, list(columns)]
    if sort_by:
        table = table.sort_values(list(sort_by), kind="mergesort")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(
        path,
        index=False,
        float_format=CSV_FLOAT_FORMAT,
        lineterminator="\n",
        na_rep="nan",
    )
    logger.info("Wrote %d rows → %s", len(table), path)
    return path


def snapshot_path(out_dir: Path) -> Path:
    return Path(out_dir) / SNAPSHOT_NAME
