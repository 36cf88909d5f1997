"""
Utility Functions Module
Logging setup, result persistence and run statistics shared by the harness.
"""

import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import stats

from . import config


def setup_logging(log_file: Optional[str] = None, level: str = "INFO"):
    """
    Setup logging configuration.

    Args:
        log_file: Path to log file (optional)
        level: Logging level
    """
    logger.remove()
    logger.add(sys.stderr, level=level, format=config.LOG_FORMAT)

    if log_file:
        ensure_dir(os.path.dirname(log_file) or ".")
        logger.add(log_file, level=level, format=config.LOG_FORMAT, rotation="10 MB")


def ensure_dir(directory: str):
    """
    Ensure directory exists, create if it doesn't.

    Args:
        directory: Directory path
    """
    Path(directory).mkdir(parents=True, exist_ok=True)


def save_results(results: dict, output_path: str):
    """
    Save results dictionary to JSON file.

    Args:
        results: Results dictionary
        output_path: Path to save results
    """
    ensure_dir(os.path.dirname(output_path) or ".")

    with open(output_path, "w") as f:
        json.dump(results, f, indent=4, sort_keys=True, default=_json_default)

    logger.info(f"Results saved to {output_path}")


def load_results(input_path: str) -> dict:
    """
    Load results from JSON file.

    Args:
        input_path: Path to results file

    Returns:
        Results dictionary
    """
    with open(input_path, "r") as f:
        results = json.load(f)

    logger.info(f"Results loaded from {input_path}")
    return results


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def config_hash(snapshot: dict) -> str:
    """Stable short hash of a configuration snapshot."""
    payload = json.dumps(snapshot, sort_keys=True, default=_json_default)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def print_section_header(title: str, width: int = 80):
    """
    Print a formatted section header.

    Args:
        title: Section title
        width: Width of the header
    """
    print("\n" + "=" * width)
    print(title.center(width))
    print("=" * width + "\n")


def format_time(seconds: float) -> str:
    """
    Format time in seconds to readable string.

    Args:
        seconds: Time in seconds

    Returns:
        Formatted time string
    """
    if seconds < 60:
        return f"{seconds:.2f} seconds"
    elif seconds < 3600:
        minutes = seconds / 60
        return f"{minutes:.2f} minutes"
    else:
        hours = seconds / 3600
        return f"{hours:.2f} hours"


def wilson_interval(successes: int, trials: int,
                    confidence: float = config.CONFIDENCE_LEVEL) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Args:
        successes: Number of successes
        trials: Number of trials
        confidence: Two-sided confidence level

    Returns:
        (lower, upper) bounds, (0, 1) when there are no trials
    """
    if trials < 0 or successes < 0 or successes > trials:
        raise ValueError(f"Invalid binomial counts: {successes}/{trials}")
    if trials == 0:
        return 0.0, 1.0

    z = stats.norm.ppf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z ** 2 / trials
    center = (phat + z ** 2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z ** 2 / (4 * trials ** 2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> Dict[str, float]:
    """
    Least-squares fit of log(y) = slope * log(x) + intercept.

    Returns:
        Dictionary with slope, prefactor and r_squared
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    total = np.sum((ly - ly.mean()) ** 2)
    r_squared = 1.0 - float(np.sum(resid ** 2) / total) if total > 0 else 1.0
    return {"slope": float(slope), "prefactor": float(np.exp(intercept)),
            "r_squared": r_squared}


def fit_constant(values: Sequence[float], scale: Sequence[float]) -> Dict[str, float]:
    """
    Fit values ~ C * scale per point.

    Returns:
        Per-point constants plus their mean and max/min spread
    """
    ratios = np.asarray(values, dtype=float) / np.asarray(scale, dtype=float)
    return {
        "constants": ratios.tolist(),
        "mean": float(ratios.mean()),
        "spread": float(ratios.max() / ratios.min()) if ratios.min() > 0 else float("inf"),
    }
