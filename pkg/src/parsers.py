"""
Input Parsers Module
Strict readers and writers for the Hamiltonian text format and DIMACS CNF.

Hamiltonian format:
    n k a b
    q1,...,qj : e11 e12 ... (row-major 2^j x 2^j block, complex as re+imj)
Blank lines and lines starting with '#' are ignored.
"""

from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from loguru import logger

from .classical_search import CnfFormula
from .qcore import QsynthError
from .qma_search import LocalHamiltonian


class ParseError(QsynthError, ValueError):
    """Malformed input; carries the 1-based line number."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message, detail=line_number)


def _parse_complex(token: str, line_number: int) -> complex:
    try:
        return complex(token)
    except ValueError:
        raise ParseError(f"invalid complex number {token!r}", line_number)


def parse_hamiltonian(text: str) -> LocalHamiltonian:
    """Parse the Hamiltonian text format."""
    header = None
    terms = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        if header is None:
            parts = line.split()
            if len(parts) != 4:
                raise ParseError("header must be 'n k a b'", line_number)
            try:
                header = (int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
            except ValueError:
                raise ParseError(f"invalid header {line!r}", line_number)
            if header[0] < 1 or header[1] < 1:
                raise ParseError("n and k must be positive", line_number)
            continue

        if ":" not in line:
            raise ParseError("term must be 'qubits : entries'", line_number)
        qubit_part, entry_part = line.split(":", 1)
        try:
            qubits = tuple(int(q) for q in qubit_part.split(","))
        except ValueError:
            raise ParseError(f"invalid qubit list {qubit_part.strip()!r}", line_number)
        n, k = header[0], header[1]
        if len(qubits) > k:
            raise ParseError(f"term acts on {len(qubits)} qubits, locality is {k}", line_number)
        if len(set(qubits)) != len(qubits) or min(qubits) < 0 or max(qubits) >= n:
            raise ParseError(f"qubits {qubits} must be distinct and in [0, {n})", line_number)

        entries = [_parse_complex(tok, line_number) for tok in entry_part.split()]
        size = 1 << len(qubits)
        if len(entries) != size * size:
            raise ParseError(
                f"expected {size * size} entries for {len(qubits)} qubits, got {len(entries)}",
                line_number,
            )
        block = np.array(entries, dtype=complex).reshape(size, size)
        if not np.allclose(block, block.conj().T, atol=1e-12):
            raise ParseError("term block is not Hermitian", line_number)
        terms.append((qubits, block))

    if header is None:
        raise ParseError("missing header line")
    n, k, a, b = header
    if not b > a:
        raise ParseError(f"thresholds need b > a, got a = {a}, b = {b}")
    return LocalHamiltonian(n, tuple(terms), a, b, locality=k)


def read_hamiltonian(path: Union[str, Path]) -> LocalHamiltonian:
    H = parse_hamiltonian(Path(path).read_text())
    logger.info(f"Loaded {len(H.terms)}-term Hamiltonian on {H.n_qubits} qubits from {path}")
    return H


def _format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def format_hamiltonian(H: LocalHamiltonian) -> str:
    lines = [f"{H.n_qubits} {H.locality} {H.a!r} {H.b!r}"]
    for qubits, block in H.terms:
        entries = " ".join(_format_complex(z) for z in block.reshape(-1))
        lines.append(f"{','.join(str(q) for q in qubits)} : {entries}")
    return "\n".join(lines) + "\n"


def write_hamiltonian(H: LocalHamiltonian, path: Union[str, Path]):
    Path(path).write_text(format_hamiltonian(H))


def parse_dimacs(text: str) -> CnfFormula:
    """
    Parse DIMACS CNF: optional 'c' comments, a 'p cnf V C' header, then
    clauses terminated by 0 (a clause may span lines).
    """
    num_vars = None
    num_clauses = None
    clauses: List[tuple] = []
    current: List[int] = []

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise ParseError("duplicate problem line", line_number)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"invalid problem line {line!r}", line_number)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"invalid problem line {line!r}", line_number)
            if num_vars < 1 or num_clauses < 0:
                raise ParseError("variable count must be positive", line_number)
            continue
        if num_vars is None:
            raise ParseError("clause before the 'p cnf' header", line_number)

        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise ParseError(f"invalid literal {token!r}", line_number)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > num_vars:
                raise ParseError(f"literal {lit} exceeds {num_vars} variables", line_number)
            else:
                current.append(lit)

    if num_vars is None:
        raise ParseError("missing 'p cnf' header")
    if current:
        raise ParseError("last clause is not terminated by 0")
    if len(clauses) != num_clauses:
        raise ParseError(f"header declares {num_clauses} clauses, found {len(clauses)}")
    return CnfFormula(num_vars, tuple(clauses))


def read_dimacs(path: Union[str, Path]) -> CnfFormula:
    formula = parse_dimacs(Path(path).read_text())
    logger.info(f"Loaded CNF with {formula.num_vars} variables, "
                f"{len(formula.clauses)} clauses from {path}")
    return formula


def format_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {len(formula.clauses)}"]
    lines += [" ".join(str(l) for l in clause + (0,)) for clause in formula.clauses]
    return "\n".join(lines) + "\n"


def write_dimacs(formula: CnfFormula, path: Union[str, Path]):
    Path(path).write_text(format_dimacs(formula))
