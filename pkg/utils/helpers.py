"""
Helper utility functions for the laboratory.
Includes version lookup, UTC timestamps, curve round sampling and CLI parsing.
"""

import logging
import subprocess
from datetime import datetime
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytz

logger = logging.getLogger(__name__)

PACKAGE_VERSION = "0.1.0"


@lru_cache(maxsize=1)
def get_version() -> str:
    """git-describe style version of the working tree, or the package version outside git."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent.parent,
            capture_output=True, text=True, timeout=5, check=True,
        )
        return out.stdout.strip() or PACKAGE_VERSION
    except (OSError, subprocess.SubprocessError):
        logger.debug("git describe unavailable, using package version")
        return PACKAGE_VERSION


def utc_now_iso() -> str:
    """Current time as an ISO-8601 UTC string."""
    return datetime.now(pytz.UTC).isoformat(timespec="seconds")


def sample_rounds(start: int, stop: int, points: int) -> np.ndarray:
    """
    Evenly spaced 1-based rounds in [start, stop], always including both ends.

    Args:
        start: First round
        stop: Last round
        points: Maximum number of rounds returned

    Returns:
        Strictly increasing int64 array
    """
    if stop < start:
        raise ValueError(f"empty round range [{start}, {stop}]")
    if points < 2 or stop - start + 1 <= points:
        return np.arange(start, stop + 1, dtype=np.int64)
    return np.unique(np.linspace(start, stop, points).round().astype(np.int64))


def parse_float_list(text: str) -> list:
    """'1,1.6, 2' -> [1.0, 1.6, 2.0]"""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from e
    if not values:
        raise ValueError("expected at least one number")
    return values


def format_pm(mean: float, spread: float) -> str:
    """Table cell in the 'mean ± spread' style."""
    return f"{mean:.1f} ± {spread:.1f}"


def parse_name_list(text: str) -> list:
    """'a, c' -> ['a', 'c']"""
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise ValueError("expected at least one name")
    return names


# ── Shared CLI options ────────────────────────────────────────────────────────

def add_run_options(parser):
    """--jobs / --out, accepted by every command that runs replications."""
    parser.add_argument("--jobs", type=int, default=None, help="parallel worker processes")
    parser.add_argument("--out", default=None, help="output directory")


def apply_run_options(data: dict, args) -> dict:
    """Copy of a config dict with --jobs / --out applied."""
    data = dict(data)
    if getattr(args, "jobs", None) is not None:
        data["parallel_jobs"] = args.jobs
    if getattr(args, "out", None) is not None:
        data["output_dir"] = args.out
    return data
