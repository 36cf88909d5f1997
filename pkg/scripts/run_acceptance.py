"""Run every subcommand at acceptance scale and check the summaries."""
import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from loguru import logger

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.config import RESULTS_DIR, settings  # noqa: E402
from src.harness import build_config, run  # noqa: E402
from src.utils import format_time, print_section_header, setup_logging  # noqa: E402


def _sigma(rate: Dict[str, Any]) -> float:
    p, n = rate["rate"] or 0.0, rate["trials"]
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else float("inf")


def _distill_ok(s: Dict[str, Any]) -> bool:
    # overlap_bound clamps to 0 when the rounds are too few
    if s["overlap_bound"] <= 0 or s["min_final_overlap"] is None:
        return False
    if s["min_final_overlap"] < s["overlap_bound"]:
        return False
    if s["survival_bound"] is None or s["bernoulli_abort"] is None:
        return False
    abort = s["bernoulli_abort"]
    return abort["rate"] <= s["survival_bound"] + 3 * _sigma(abort)


def _phase_ok(s: Dict[str, Any]) -> bool:
    rate = s["phase_overlap"]
    return rate["rate"] >= s["phase_overlap_floor"] - 3 * _sigma(rate)


def _qma_ok(s: Dict[str, Any]) -> bool:
    if s["non_abort"]["rate"] < 1 / 1024:
        return False
    return s["max_witness_energy"] <= s["energy_bound"] + 1e-9


def _amplify_ok(s: Dict[str, Any]) -> bool:
    failure = 1 - s["success"]["rate"]
    return failure <= s["failure_target"] + 3 * _sigma(s["success"]) and s["all_verified"]


@dataclass
class Check:
    name: str
    subcommand: str
    params: Dict[str, Any]
    passed: Callable[[Dict[str, Any]], bool]


CHECKS: List[Check] = [
    Check("adaptive-24-bit", "synth-adaptive", {"n": 6, "prob_bits": 24, "phase_bits": 24, "trials": 100},
          lambda s: s["max_infidelity"] <= 1e-8 and s["query_count"] == 14),
    Check("adaptive-exact", "synth-adaptive", {"n": 6, "exact": True, "trials": 100},
          lambda s: s["max_infidelity"] <= 1e-12),
    Check("distill", "distill", {"n": 7, "m": 64, "a": 0.9, "rounds": 3, "noise": "orthogonal",
                                 "survival_m": 12 * 6 ** 3, "survival_n": 12, "trials": 500}, _distill_ok),
    Check("phase-overlap-n3", "ensembles-check", {"n": 3, "gamma": 0.125, "trials": 10000}, _phase_ok),
    Check("phase-overlap-n6", "ensembles-check", {"n": 6, "gamma": 0.0625, "trials": 10000}, _phase_ok),
    Check("one-query", "synth-one", {"n": 4, "n_expanded": 8, "m": 96, "trials": 200},
          lambda s: s["conditions"]["rate"] >= 0.99
          and (s["improvement"]["rate"] or 0.0) >= 0.95),
    Check("two-query", "synth-two", {"n": 4, "n_expanded": 12, "phase_bits": 32, "trials": 200},
          lambda s: s["all_ancillas_clean"] and (s["infidelity_over_distance_sq"] or 0.0) < 10),
    Check("sorted-distance-slope", "wasserstein-check", {"log_dims": [8, 10, 12, 14], "trials": 200},
          lambda s: abs(s["sorted_distance_fit"]["slope"] + 0.25) <= 0.10),
    Check("rayleigh-w2", "wasserstein-check", {"log_dims": [8, 10, 12], "trials": 200},
          lambda s: s["w2sq_constant"]["spread"] <= 2.0),
    Check("qma-1-qubit", "qma", {"n": 1, "k": 1, "a": 0.1, "b": 0.2, "trials": 5000}, _qma_ok),
    Check("qma-4-qubit", "qma", {"n": 4, "k": 2, "a": 0.1, "b": 0.2, "trials": 5000}, _qma_ok),
    Check("extract-search", "extract", {"m": 12, "mode": "search", "trials": 10000},
          lambda s: s["success"]["rate"] > 0 and s["all_verified"]),
    Check("extract-amplify", "extract", {"m": 12, "mode": "amplify", "t": 5, "trials": 500}, _amplify_ok),
]


def run_checks(out: Path, workers: Optional[int], only: Optional[List[str]]) -> bool:
    """
    Run the selected checks and log a PASS/FAIL line for each.

    Returns:
        True when every selected check passed
    """
    selected = [c for c in CHECKS if not only or c.name in only]
    failures = []
    for check in selected:
        print_section_header(check.name)
        params = dict(check.params, out=out / check.name, workers=workers, progress=True)
        record = run(build_config(check.subcommand, **params))
        passed = bool(check.passed(record.summary))
        logger.info(f"{'PASS' if passed else 'FAIL'} {check.name} ({format_time(record.wall_clock)})")
        if not passed:
            failures.append(check.name)

    if failures:
        logger.error(f"{len(failures)} of {len(selected)} checks failed: {', '.join(failures)}")
    else:
        logger.info(f"All {len(selected)} checks passed")
    return not failures


def main() -> int:
    parser = argparse.ArgumentParser(description="qsynth acceptance batch")
    parser.add_argument("--out", type=Path, default=RESULTS_DIR / "acceptance")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--only", nargs="+", choices=[c.name for c in CHECKS])
    args = parser.parse_args()

    setup_logging(settings.LOG_FILE, settings.LOG_LEVEL)
    return 0 if run_checks(args.out, args.workers, args.only) else 1


if __name__ == "__main__":
    sys.exit(main())
