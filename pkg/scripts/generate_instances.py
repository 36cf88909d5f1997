"""Sample instance generator for the qma and extract subcommands."""
import argparse
import sys
from pathlib import Path

from loguru import logger

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.classical_search import count_solutions, random_planted_3sat  # noqa: E402
from src.config import DATA_DIR  # noqa: E402
from src.ensembles import RngStream  # noqa: E402
from src.parsers import write_dimacs, write_hamiltonian  # noqa: E402
from src.qma_search import random_local_hamiltonian, yes_instance  # noqa: E402


def generate_hamiltonian(n: int, k: int, a: float, b: float, seed: int, out_dir: Path) -> Path:
    """
    Write a random k-local YES instance with spectrum in [0, 1].

    Returns:
        Path of the written file
    """
    H = yes_instance(random_local_hamiltonian(n, k, RngStream(seed)), a, b)
    path = out_dir / f"yes_n{n}_k{k}_seed{seed}.ham"
    write_hamiltonian(H, path)
    logger.info(f"Hamiltonian with {len(H.terms)} terms, ground energy {H.ground_energy:.3g} -> {path}")
    return path


def generate_cnf(m: int, ratio: float, seed: int, out_dir: Path) -> Path:
    formula, planted = random_planted_3sat(m, ratio, RngStream(seed))
    path = out_dir / f"planted_m{m}_seed{seed}.cnf"
    write_dimacs(formula, path)
    logger.info(f"3-CNF with {len(formula.clauses)} clauses, "
                f"{count_solutions(formula)} solutions (planted {planted:0{m}b}) -> {path}")
    return path


def main():
    parser = argparse.ArgumentParser(description="Generate sample instances")
    parser.add_argument("--out", type=Path, default=DATA_DIR)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=3, help="Hamiltonian qubits")
    parser.add_argument("--k", type=int, default=2, help="Hamiltonian locality")
    parser.add_argument("--m", type=int, default=12, help="CNF variables")
    parser.add_argument("--ratio", type=float, default=4.0, help="Clauses per variable")
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    generate_hamiltonian(args.n, args.k, 0.1, 0.3, args.seed, args.out)
    generate_cnf(args.m, args.ratio, args.seed, args.out)


if __name__ == "__main__":
    main()
