"""
Classical Search Module
One-query search-to-decision for CNF verifiers: isolate a witness with a
random GF(2) hash, read it out with Bernstein-Vazirani, verify, amplify.

Assignment encoding: variable i of m is bit (m - i) of an integer, so x_1 is
the most significant bit and integer order is lexicographic order.
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from . import config
from .ensembles import RngLike, RngStream, as_generator
from .phase_states import PhaseOracle
from .qcore import Abort, CapExceededError, InvalidStateError, QsynthError, hadamard_transform

CHUNK = 1 << 20

Predicate = Callable[[np.ndarray], np.ndarray]


class NoWitness(QsynthError):
    """The formula has no satisfying assignment."""


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.astype(np.int64)
    for shift in (32, 16, 8, 4, 2, 1):
        v = v ^ (v >> shift)
    return v & 1


def to_bits(x: int, m: int) -> str:
    """Assignment integer as the string x_1 x_2 ... x_m."""
    return format(int(x), f"0{m}b")


def from_bits(bits: str) -> int:
    return int(bits, 2) if bits else 0


@dataclass(frozen=True)
class CnfFormula:
    """
    CNF over variables 1..num_vars, clauses as signed literals.
    An empty clause marks the formula unsatisfiable.
    """

    num_vars: int
    clauses: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise InvalidStateError(f"num_vars must be >= 1, got {self.num_vars}")
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for clause in clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise InvalidStateError(
                        f"Literal {lit} out of range for {self.num_vars} variables"
                    )
        object.__setattr__(self, "clauses", clauses)

    def satisfied(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over an array of assignment integers."""
        xs = np.asarray(xs, dtype=np.int64)
        ok = np.ones(xs.shape, dtype=bool)
        m = self.num_vars
        for clause in self.clauses:
            clause_ok = np.zeros(xs.shape, dtype=bool)
            for lit in clause:
                bit = ((xs >> (m - abs(lit))) & 1).astype(bool)
                clause_ok |= bit if lit > 0 else ~bit
            ok &= clause_ok
        return ok

    def evaluate(self, assignment: Union[int, str]) -> bool:
        x = from_bits(assignment) if isinstance(assignment, str) else int(assignment)
        if not 0 <= x < (1 << self.num_vars):
            raise ValueError(f"Assignment {x} out of range for {self.num_vars} variables")
        return bool(self.satisfied(np.array([x]))[0])


@dataclass(frozen=True)
class HashedInstance:
    """base plus the parity constraints A d = 0 over GF(2)."""

    base: CnfFormula
    k: int
    A: np.ndarray

    def __post_init__(self):
        m = self.base.num_vars
        if not 1 <= self.k <= m:
            raise InvalidStateError(f"k must lie in [1, {m}], got {self.k}")
        A = np.asarray(self.A, dtype=np.uint8) % 2
        if A.shape != (self.k, m):
            raise InvalidStateError(f"A must be {self.k}x{m}, got {A.shape}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def num_vars(self) -> int:
        return self.base.num_vars

    def row_masks(self) -> List[int]:
        m = self.num_vars
        return [sum(int(b) << (m - 1 - j) for j, b in enumerate(row)) for row in self.A]

    def satisfied(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        ok = self.base.satisfied(xs)
        for mask in self.row_masks():
            ok &= _parity(xs & mask) == 0
        return ok


Instance = Union[CnfFormula, HashedInstance]


def solutions(instance: Instance, predicate: Optional[Predicate] = None,
              cap: int = config.MAX_CNF_VARS) -> np.ndarray:
    """All satisfying assignments in increasing (lexicographic) order."""
    m = instance.num_vars
    if m > cap:
        raise CapExceededError(f"{m} variables exceeds the exhaustive-search cap of {cap}")
    found = []
    for start in range(0, 1 << m, CHUNK):
        xs = np.arange(start, min(start + CHUNK, 1 << m), dtype=np.int64)
        ok = instance.satisfied(xs)
        if predicate is not None:
            ok &= np.asarray(predicate(xs), dtype=bool)
        found.append(xs[ok])
    return np.concatenate(found)


def count_solutions(instance: Instance, predicate: Optional[Predicate] = None) -> int:
    return int(solutions(instance, predicate).size)


def witness_oracle(instance: Instance, predicate: Optional[Predicate] = None) -> int:
    """1 iff some assignment satisfies the instance (and the predicate)."""
    m = instance.num_vars
    if m > config.MAX_CNF_VARS:
        raise CapExceededError(f"{m} variables exceeds the decision-oracle cap of {config.MAX_CNF_VARS}")
    for start in range(0, 1 << m, CHUNK):
        xs = np.arange(start, min(start + CHUNK, 1 << m), dtype=np.int64)
        ok = instance.satisfied(xs)
        if predicate is not None:
            ok &= np.asarray(predicate(xs), dtype=bool)
        if ok.any():
            return 1
    return 0


def gf2_basis(vectors: Sequence[int]) -> List[int]:
    """Basis of the GF(2) span of integers viewed as bit vectors."""
    pivots = {}
    for v in vectors:
        v = int(v)
        while v:
            top = v.bit_length() - 1
            if top not in pivots:
                pivots[top] = v
                break
            v ^= pivots[top]
    return list(pivots.values())


def qcma_oracle_fn(instance: Instance) -> PhaseOracle:
    """
    f(x) = 1 iff some witness d of the instance has x . d = 1.

    Equivalently f(x) = 0 exactly on the annihilator of the span of the
    witnesses, so a unique witness d0 gives f(x) = x . d0.
    """
    m = instance.num_vars
    if m > config.MAX_TRUTH_TABLE_VARS:
        raise CapExceededError(
            f"{m} variables exceeds the truth-table cap of {config.MAX_TRUTH_TABLE_VARS}"
        )
    xs = np.arange(1 << m, dtype=np.int64)
    table = np.zeros(xs.size, dtype=np.uint8)
    for b in gf2_basis(solutions(instance)):
        table |= _parity(xs & b).astype(np.uint8)
    return PhaseOracle(m, table)


def linear_oracle(d: int, m: int) -> PhaseOracle:
    """f(x) = x . d over GF(2)."""
    xs = np.arange(1 << m, dtype=np.int64)
    return PhaseOracle(m, _parity(xs & int(d)).astype(np.uint8))


def bv_extract(f: PhaseOracle, rng: Optional[RngLike] = None) -> int:
    """
    Measure H^n O_f H^n |0^n>.

    With rng the outcome is sampled by the Born rule; without it the most
    likely outcome is returned. A linear f gives its hidden string either way.
    """
    n = f.n_bits
    size = 1 << n
    signs = 1.0 - 2.0 * f.table.astype(float)
    amps = hadamard_transform(signs / np.sqrt(size))
    probs = np.abs(amps) ** 2
    if rng is None:
        return int(np.argmax(probs))
    gen = as_generator(rng)
    return int(gen.choice(size, p=probs / probs.sum()))


def vv_hash(base: CnfFormula, rng: RngLike) -> HashedInstance:
    """k uniform in {1..m}, then A uniform over GF(2)^{k x m}."""
    gen = as_generator(rng)
    m = base.num_vars
    k = int(gen.integers(1, m + 1))
    A = gen.integers(0, 2, size=(k, m), dtype=np.uint8)
    return HashedInstance(base, k, A)


def search_to_decision(base: CnfFormula, rng: Optional[RngLike] = None,
                       isolate: bool = True) -> Union[Abort, int]:
    """
    Hash, build the oracle, extract with one query and verify.

    Args:
        base: Formula to find a witness for
        rng: Stream for the hash and the measurement
        isolate: Apply the random hash; False queries the base instance directly

    Returns:
        A verified satisfying assignment, or Abort
    """
    m = base.num_vars
    if m > config.MAX_PIPELINE_VARS:
        raise CapExceededError(f"{m} variables exceeds the pipeline cap of {config.MAX_PIPELINE_VARS}")
    gen = as_generator(rng if rng is not None else RngStream(config.DEFAULT_SEED))

    instance: Instance = vv_hash(base, gen) if isolate else base
    f = qcma_oracle_fn(instance)
    d = bv_extract(f, gen)
    if base.evaluate(d):
        return d
    return Abort(f"extracted assignment {to_bits(d, m)} does not satisfy the formula")


def lex_first_extract(base: CnfFormula) -> int:
    """
    Lexicographically first witness, fixed bit by bit with decision queries
    and read out exactly from the linear oracle x . d_lex.

    Raises:
        NoWitness: when the formula is unsatisfiable
    """
    m = base.num_vars
    if m > config.MAX_TRUTH_TABLE_VARS:
        raise CapExceededError(
            f"{m} variables exceeds the truth-table cap of {config.MAX_TRUTH_TABLE_VARS}"
        )
    if not witness_oracle(base):
        raise NoWitness("Formula is unsatisfiable")

    prefix = 0
    for i in range(1, m + 1):
        candidate = prefix << 1

        def predicate(xs: np.ndarray, value: int = candidate, shift: int = m - i) -> np.ndarray:
            return (xs >> shift) == value

        prefix = candidate if witness_oracle(base, predicate) else candidate | 1

    d = bv_extract(linear_oracle(prefix, m))
    if not base.evaluate(d):
        raise QsynthError(f"Lex-first extraction produced a non-witness {to_bits(d, m)}")
    return d


def repetitions(m: int, t: int, c: float = config.DEFAULT_REPETITION_CONSTANT) -> int:
    """ceil(c (m + t)) independent pipeline runs."""
    return max(1, math.ceil(c * (m + t)))


def amplify(base: CnfFormula, t: int, rng: Optional[RngLike] = None,
            c: float = config.DEFAULT_REPETITION_CONSTANT,
            isolate: bool = True) -> Union[Abort, int]:
    """Run repetitions(m, t, c) pipelines; return the first verified witness."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    stream = rng if rng is not None else RngStream(config.DEFAULT_SEED)
    runs = repetitions(base.num_vars, t, c)
    for j in range(runs):
        run_rng = stream.child(j) if isinstance(stream, RngStream) else stream
        outcome = search_to_decision(base, run_rng, isolate=isolate)
        if not isinstance(outcome, Abort):
            logger.debug(f"amplify: witness found on run {j + 1}/{runs}")
            return outcome
    return Abort(f"all {runs} pipeline runs failed")


def random_planted_3sat(m: int, ratio: float, rng: RngLike) -> Tuple[CnfFormula, int]:
    """
    Random 3-CNF with round(ratio * m) clauses, each satisfied by a planted
    assignment (a violated clause gets one literal flipped).

    Returns:
        (formula, planted assignment)
    """
    if m < 3:
        raise ValueError(f"3-SAT needs at least 3 variables, got {m}")
    gen = as_generator(rng)
    planted = int(gen.integers(0, 1 << m))
    clauses = []
    for _ in range(max(1, round(ratio * m))):
        variables = gen.choice(np.arange(1, m + 1), size=3, replace=False)
        signs = gen.choice([-1, 1], size=3)
        clause = [int(s * v) for s, v in zip(signs, variables)]
        if not CnfFormula(m, (tuple(clause),)).evaluate(planted):
            flip = int(gen.integers(0, 3))
            clause[flip] = -clause[flip]
        clauses.append(tuple(clause))
    return CnfFormula(m, tuple(clauses)), planted
