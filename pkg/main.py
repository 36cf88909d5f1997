"""
Command-line entry point
Runs one seeded experiment batch per subcommand and writes per-trial CSV plus
a JSON summary.

Examples:
    python main.py synth-two --n 4 --trials 200 --seed 7 --out results/
    python main.py extract --m 12 --mode amplify --t 10
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

from src.config import settings
from src.harness import build_config, run
from src.parsers import ParseError
from src.qcore import CapExceededError
from src.utils import setup_logging


def _rounds(value: str):
    return value if value == "auto" else int(value)


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, help="Root seed (default from config)")
    parser.add_argument("--trials", type=int, help="Number of independent trials")
    parser.add_argument("--out", type=Path, help="Directory for the CSV and JSON reports")
    parser.add_argument("--workers", type=int, help="Worker processes (default QSYNTH_WORKERS)")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsynth",
        description="Oracle-driven state synthesis and search-to-decision experiments",
    )
    parser.add_argument("--log-level", default=None, help="Override QSYNTH_LOG_LEVEL")
    parser.add_argument("--log-file", default=None, help="Also log to this file")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth-adaptive", help="Adaptive (Grover-Rudolph) synthesis")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--prob-bits", type=int)
    p.add_argument("--phase-bits", type=int)
    p.add_argument("--exact", action="store_true", default=None)

    p = sub.add_parser("synth-one", help="One-query synthesis with distillation")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--n-expanded", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--rounds", type=_rounds)
    p.add_argument("--mode", choices=["sampled", "exact_conditional"])

    p = sub.add_parser("synth-two", help="Two-query synthesis")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--n-expanded", type=int)
    p.add_argument("--phase-bits", type=int)

    p = sub.add_parser("distill", help="Swap test distillation on noisy copies")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--rounds", type=_rounds)
    p.add_argument("--mode", choices=["sampled", "exact_conditional"])
    p.add_argument("--keep", choices=["first", "random"])
    p.add_argument("--carry-unpaired", action="store_true", default=None)
    p.add_argument("--noise", choices=["auto", "orthogonal", "depolarized"])
    p.add_argument("--noise-overlap", type=float)
    p.add_argument("--survival-m", type=int, help="Registers of the Bernoulli survival simulation")
    p.add_argument("--survival-n", type=int, help="n of the survival bound (>= 12)")
    p.add_argument("--survival-p", type=float, help="Per-test success probability of the simulation")

    for name, help_text in (("qma", "Gated one-query QMA witness search"),
                            ("qma-exp", "Gate-free QMA witness search")):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--hamiltonian", type=Path, help="Hamiltonian file; random instance if omitted")
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        if name == "qma":
            p.add_argument("--m-bits", type=int)
        else:
            p.add_argument("--gamma", type=float)

    p = sub.add_parser("extract", help="Search-to-decision witness extraction")
    _common(p)
    p.add_argument("--cnf", type=Path, help="DIMACS file; planted 3-SAT if omitted")
    p.add_argument("--m", type=int)
    p.add_argument("--ratio", type=float)
    p.add_argument("--mode", choices=["search", "amplify", "lex"])
    p.add_argument("--t", type=int)
    p.add_argument("--repetition-constant", type=float)
    p.add_argument("--no-isolate", dest="isolate", action="store_false", default=None)

    p = sub.add_parser("ensembles-check", help="2-design moment and phase-overlap checks")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--family", choices=["clifford", "haar"])
    p.add_argument("--theta", type=float)
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("wasserstein-check", help="Rayleigh and sorted-distance scaling checks")
    _common(p)
    p.add_argument("--log-dims", type=int, nargs="+")

    return parser


def _params(args: argparse.Namespace) -> Dict[str, Any]:
    skip = {"subcommand", "log_level", "log_file"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, validate and run; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_file or settings.LOG_FILE, args.log_level or settings.LOG_LEVEL)

    try:
        cfg = build_config(args.subcommand, **_params(args))
    except ValidationError as e:
        print(f"Invalid {args.subcommand} configuration:\n{e}", file=sys.stderr)
        return 2

    try:
        run(cfg)
    except (ParseError, CapExceededError, FileNotFoundError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.opt(exception=e).error(f"Error in {args.subcommand}: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
