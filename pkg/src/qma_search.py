"""
QMA Search Module
One-query search-to-decision for local Hamiltonians: filter with (1 - H)^p,
twirl, query the sign oracle once, then gate the candidate through an exact
spectral energy estimate. Also the gate-free variant for exponentially small
promise gaps.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg

from . import config
from .config import settings
from .ensembles import CliffordElement, RngLike, RngStream, as_generator, haar_unitary, random_clifford
from .phase_states import PhaseOracle, best_phase_oracle, build_phase_state
from .qcore import (
    Abort,
    CapExceededError,
    DimensionMismatchError,
    InvalidStateError,
    StateVector,
    UnitaryMatrix,
)

SPECTRUM_TOL = 1e-9

Term = Tuple[Tuple[int, ...], np.ndarray]


@dataclass(frozen=True)
class LocalHamiltonian:
    """
    H = sum_i H_i with each H_i a Hermitian block on a few qubits.

    Qubit q of a term's subset is the (q-th) most significant bit of the
    block's index. The promise is lambda_min <= a (YES) or >= b (NO).
    """

    n_qubits: int
    terms: Tuple[Term, ...]
    a: float
    b: float
    locality: Optional[int] = None
    normalized: bool = False
    degenerate: bool = False
    _cache: Dict[str, np.ndarray] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.n_qubits > config.MAX_STATE_QUBITS:
            raise CapExceededError(
                f"{self.n_qubits} qubits exceeds the statevector cap of {config.MAX_STATE_QUBITS}"
            )
        if not self.b > self.a:
            raise ValueError(f"Thresholds need b > a, got a = {self.a}, b = {self.b}")

        clean: List[Term] = []
        for qubits, block in self.terms:
            qubits = tuple(int(q) for q in qubits)
            block = np.array(block, dtype=complex)
            if not qubits or len(set(qubits)) != len(qubits):
                raise InvalidStateError(f"Term qubits {qubits} must be distinct and nonempty")
            if min(qubits) < 0 or max(qubits) >= self.n_qubits:
                raise InvalidStateError(f"Term qubits {qubits} out of range for {self.n_qubits} qubits")
            size = 1 << len(qubits)
            if block.shape != (size, size):
                raise InvalidStateError(
                    f"Block on {len(qubits)} qubits must be {size}x{size}, got {block.shape}"
                )
            if np.max(np.abs(block - block.conj().T)) > settings.NORM_TOL:
                raise InvalidStateError(f"Block on qubits {qubits} is not Hermitian")
            block.setflags(write=False)
            clean.append((qubits, block))

        locality = self.locality
        if locality is None:
            locality = max((len(q) for q, _ in clean), default=1)
        elif any(len(q) > locality for q, _ in clean):
            raise InvalidStateError(f"A term acts on more than {locality} qubits")
        object.__setattr__(self, "terms", tuple(clean))
        object.__setattr__(self, "locality", locality)

    @property
    def delta(self) -> float:
        return self.b - self.a

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (cached)."""
        if "matrix" not in self._cache:
            total = np.zeros((self.dim, self.dim), dtype=complex)
            for qubits, block in self.terms:
                total += embed_operator(block, qubits, self.n_qubits)
            total.setflags(write=False)
            self._cache["matrix"] = total
        return self._cache["matrix"]

    def spectrum(self) -> Tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and eigenvectors (columns), cached."""
        if "evals" not in self._cache:
            evals, evecs = linalg.eigh(self.matrix())
            self._cache["evals"] = evals
            self._cache["evecs"] = evecs
        return self._cache["evals"], self._cache["evecs"]

    @property
    def ground_energy(self) -> float:
        return float(self.spectrum()[0][0])

    def energy(self, state: StateVector) -> float:
        """<psi|H|psi>."""
        _check_state(state, self)
        amps = state.amplitudes
        return float(np.vdot(amps, self.matrix() @ amps).real)

    def is_yes_instance(self) -> bool:
        return self.ground_energy <= self.a


def embed_operator(block: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """block (x) I on the listed qubits of an n-qubit register."""
    j = len(qubits)
    rest = [q for q in range(n_qubits) if q not in qubits]
    perm = list(qubits) + rest
    inverse = list(np.argsort(perm))
    full = np.kron(block, np.eye(1 << (n_qubits - j)))
    tensor = full.reshape([2] * (2 * n_qubits))
    axes = inverse + [n_qubits + i for i in inverse]
    return tensor.transpose(axes).reshape(1 << n_qubits, 1 << n_qubits)


def _check_state(state: StateVector, H: LocalHamiltonian):
    if state.dim != H.dim:
        raise DimensionMismatchError(
            f"State dimension {state.dim} does not match Hamiltonian dimension {H.dim}"
        )


def _require_normalized(H: LocalHamiltonian):
    evals, _ = H.spectrum()
    if evals[0] < -SPECTRUM_TOL or evals[-1] > 1 + SPECTRUM_TOL:
        raise InvalidStateError(
            f"Hamiltonian spectrum [{evals[0]:.6g}, {evals[-1]:.6g}] is not inside [0, 1]; "
            "normalize it first"
        )


def normalize_hamiltonian(H: LocalHamiltonian) -> LocalHamiltonian:
    """
    Affinely rescale H so that its spectrum lies in [0, 1].

    A spectrum already inside [0, 1] is left alone. Otherwise negative parts
    are shifted up and the width is scaled down to 1; a and b follow.
    """
    evals, _ = H.spectrum()
    low, high = float(evals[0]), float(evals[-1])
    degenerate = math.isclose(low, high, abs_tol=SPECTRUM_TOL)
    if degenerate:
        logger.warning(f"Hamiltonian spectrum is a single point ({low:.6g})")

    if low >= -SPECTRUM_TOL and high <= 1 + SPECTRUM_TOL:
        return LocalHamiltonian(H.n_qubits, H.terms, H.a, H.b, H.locality,
                                normalized=True, degenerate=degenerate)

    shift = min(low, 0.0)
    scale = max(high - shift, 1.0)
    terms = [(q, blk / scale) for q, blk in H.terms]
    if shift != 0.0:
        terms.append(((0,), -shift / scale * np.eye(2)))
    return LocalHamiltonian(
        H.n_qubits, tuple(terms), (H.a - shift) / scale, (H.b - shift) / scale,
        H.locality, normalized=True, degenerate=degenerate,
    )


def yes_instance(H: LocalHamiltonian, a: float, b: float) -> LocalHamiltonian:
    """Rescale H to spectrum exactly [0, 1] (ground energy 0 <= a) with thresholds a, b."""
    evals, _ = H.spectrum()
    low, high = float(evals[0]), float(evals[-1])
    width = high - low if high - low > SPECTRUM_TOL else 1.0
    terms = [(q, blk / width) for q, blk in H.terms]
    terms.append(((0,), -low / width * np.eye(2)))
    return LocalHamiltonian(H.n_qubits, tuple(terms), a, b, H.locality, normalized=True)


def random_local_hamiltonian(n_qubits: int, k: int, rng: RngLike,
                             n_terms: Optional[int] = None,
                             a: float = 0.1, b: float = 0.2) -> LocalHamiltonian:
    """Sum of GUE blocks on random k-subsets (n_terms defaults to n_qubits)."""
    if not 1 <= k <= n_qubits:
        raise ValueError(f"Locality k must lie in [1, {n_qubits}], got {k}")
    gen = as_generator(rng)
    terms = []
    for _ in range(n_terms or n_qubits):
        qubits = tuple(int(q) for q in np.sort(gen.choice(n_qubits, size=k, replace=False)))
        size = 1 << k
        z = gen.standard_normal((size, size)) + 1j * gen.standard_normal((size, size))
        terms.append((qubits, (z + z.conj().T) / 4))
    return LocalHamiltonian(n_qubits, tuple(terms), a, b, locality=k)


# ---------------------------------------------------------------------------
# Filter and oracle
# ---------------------------------------------------------------------------

def filter_exponent(n: int, delta: float) -> int:
    """Smallest p with (1 - delta/4)^(2p) <= delta / (2 * 2^n)."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    target = math.log(delta) - (n + 1) * math.log(2)
    step = 2 * math.log1p(-delta / 4)
    p = max(0, math.ceil(target / step))
    while p > 0 and (p - 1) * step <= target:
        p -= 1
    while p * step > target:
        p += 1
    return p


def _dense(op: Union[CliffordElement, UnitaryMatrix]) -> np.ndarray:
    if isinstance(op, CliffordElement):
        return op.to_unitary().entries
    return op.entries


def filter_vector(H: LocalHamiltonian, D: Union[CliffordElement, UnitaryMatrix],
                  p: int, spectral: bool = False) -> np.ndarray:
    """
    (1 - H)^p D|0^n>, unnormalized.

    The default path powers the dense matrix by repeated squaring and refuses
    p above the cap. The spectral path scales by (1 - lambda_min)^-p, which
    leaves every sign unchanged.
    """
    start = _dense(D)[:, 0]
    if not spectral:
        if p > config.MAX_FILTER_EXPONENT:
            raise CapExceededError(
                f"Filter exponent {p} exceeds the cap of {config.MAX_FILTER_EXPONENT}; "
                "the promise gap is too small for the dense filter"
            )
        power = np.linalg.matrix_power(np.eye(H.dim) - H.matrix(), p)
        return power @ start

    evals, evecs = H.spectrum()
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = p * (np.log1p(-np.minimum(evals, 1.0)) - np.log1p(-min(evals[0], 1.0)))
    ratio = np.where(np.isnan(log_ratio), 1.0, np.exp(log_ratio))
    return evecs @ (ratio * (evecs.conj().T @ start))


def qma_oracle_fn(H: LocalHamiltonian, C: Union[CliffordElement, UnitaryMatrix],
                  D: Union[CliffordElement, UnitaryMatrix], p: int,
                  spectral: bool = False) -> PhaseOracle:
    """f(x) = sgn(Re <x|C (1 - H)^p D|0^n>), with sgn(0) = +1."""
    vec = _dense(C) @ filter_vector(H, D, p, spectral=spectral)
    f, _ = best_phase_oracle(vec.real)
    return f


def low_energy_mass(state: StateVector, H: LocalHamiltonian, cutoff: float) -> float:
    """Weight of state on eigenvectors of H with eigenvalue <= cutoff."""
    _check_state(state, H)
    evals, evecs = H.spectrum()
    weights = np.abs(evecs.conj().T @ state.amplitudes) ** 2
    return float(min(np.sum(weights[evals <= cutoff + SPECTRUM_TOL]), 1.0))


# ---------------------------------------------------------------------------
# Energy estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyEstimateResult:
    reading: int
    m_bits: int
    post_state: StateVector
    accepted: bool
    threshold: float

    @property
    def theta(self) -> float:
        return self.reading / float(1 << self.m_bits)


def default_energy_bits(delta: float) -> int:
    """ceil(log2(1 / delta)) + ENERGY_EXTRA_BITS."""
    return math.ceil(math.log2(1.0 / delta)) + config.ENERGY_EXTRA_BITS


def acceptance_threshold(H: LocalHamiltonian, m_bits: int) -> float:
    """a + delta/4 + eps with eps = 2 * 2^-m_bits."""
    return H.a + H.delta / 4 + 2.0 / (1 << m_bits)


def _reading_table(evals: np.ndarray, m_bits: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-eigenvalue high reading floor(2^m E) and its probability.

    The low reading floor(2^m E) - 1 takes the remaining probability, which is
    the fractional part of 2^m E; grid energies therefore read exactly.
    """
    scaled = evals * (1 << m_bits)
    high = np.floor(scaled + 1e-9).astype(np.int64)
    frac = np.clip(scaled - high, 0.0, 1.0)
    return high, 1.0 - frac


def reading_distribution(state: StateVector, H: LocalHamiltonian,
                         m_bits: int) -> Dict[int, float]:
    """Exact probability of each energy reading for the given state."""
    _check_state(state, H)
    evals, evecs = H.spectrum()
    weights = np.abs(evecs.conj().T @ state.amplitudes) ** 2
    high, p_high = _reading_table(evals, m_bits)
    dist: Dict[int, float] = {}
    for w, r, ph in zip(weights, high, p_high):
        dist[int(r)] = dist.get(int(r), 0.0) + w * ph
        dist[int(r) - 1] = dist.get(int(r) - 1, 0.0) + w * (1 - ph)
    return {r: p for r, p in sorted(dist.items()) if p > 0}


def acceptance_probability(state: StateVector, H: LocalHamiltonian, m_bits: int) -> float:
    """Probability that energy_estimate accepts the state."""
    threshold = acceptance_threshold(H, m_bits)
    scale = float(1 << m_bits)
    return float(sum(p for r, p in reading_distribution(state, H, m_bits).items()
                     if r / scale <= threshold))


def energy_estimate(state: StateVector, H: LocalHamiltonian, m_bits: int,
                    rng: Optional[RngLike] = None) -> EnergyEstimateResult:
    """
    Idealized energy estimation with exact spectra.

    Samples an eigenbranch by the Born rule, reads floor(2^m E) or one less,
    and collapses the state onto the eigenvectors consistent with the reading.
    Accepts when the reading is at most a + delta/4 + eps.
    """
    if m_bits < 1:
        raise ValueError(f"m_bits must be >= 1, got {m_bits}")
    _require_normalized(H)
    _check_state(state, H)
    gen = as_generator(rng if rng is not None else RngStream(config.DEFAULT_SEED))

    evals, evecs = H.spectrum()
    coeffs = evecs.conj().T @ state.amplitudes
    high, p_high = _reading_table(evals, m_bits)

    dist = reading_distribution(state, H, m_bits)
    readings = np.array(list(dist.keys()))
    probs = np.array(list(dist.values()))
    reading = int(gen.choice(readings, p=probs / probs.sum()))

    likelihood = np.where(high == reading, p_high, 0.0) + np.where(high - 1 == reading, 1 - p_high, 0.0)
    post = evecs @ (coeffs * np.sqrt(likelihood))
    threshold = acceptance_threshold(H, m_bits)
    return EnergyEstimateResult(
        reading=reading,
        m_bits=m_bits,
        post_state=StateVector.from_unnormalized(post),
        accepted=reading / float(1 << m_bits) <= threshold,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# Search pipelines
# ---------------------------------------------------------------------------

@dataclass
class QmaOutcome:
    """One pipeline run: the candidate before measurement and what became of it."""

    candidate: StateVector
    p: int
    estimate: Optional[EnergyEstimateResult] = None
    witness: Optional[StateVector] = None
    witness_energy: Optional[float] = None
    candidate_low_mass: Optional[float] = None
    ground_overlap: Optional[float] = None
    attempts: int = 1

    @property
    def aborted(self) -> bool:
        return self.estimate is not None and self.witness is None

    @property
    def result(self) -> Union[Abort, StateVector]:
        if self.witness is not None:
            return self.witness
        if self.estimate is None:
            return self.candidate
        return Abort(f"energy reading {self.estimate.theta:.6g} above {self.estimate.threshold:.6g}")


def draw_twirls(n_qubits: int, gen: np.random.Generator) -> Tuple[UnitaryMatrix, UnitaryMatrix]:
    """C then D, from the configured twirl family."""
    if settings.TWIRL == "haar":
        return haar_unitary(1 << n_qubits, gen), haar_unitary(1 << n_qubits, gen)
    C = random_clifford(n_qubits, gen).to_unitary()
    D = random_clifford(n_qubits, gen).to_unitary()
    return C, D


def _candidate(H: LocalHamiltonian, C: UnitaryMatrix, D: UnitaryMatrix, p: int,
               spectral: bool) -> StateVector:
    f = qma_oracle_fn(H, C, D, p, spectral=spectral)
    return StateVector.from_unnormalized(C.entries.conj().T @ build_phase_state(f).amplitudes)


def qma_search_one_query(H: LocalHamiltonian, rng: Optional[RngLike] = None,
                         m_bits: Optional[int] = None) -> QmaOutcome:
    """
    Run the gated one-query pipeline once.

    Returns:
        QmaOutcome; outcome.result is the witness or an Abort
    """
    _require_normalized(H)
    gen = as_generator(rng if rng is not None else RngStream(config.DEFAULT_SEED))
    p = filter_exponent(H.n_qubits, H.delta)
    if p > config.MAX_FILTER_EXPONENT:
        raise CapExceededError(
            f"Filter exponent {p} exceeds the cap of {config.MAX_FILTER_EXPONENT}; "
            "use qma_exp_search for this promise gap"
        )
    m_bits = m_bits if m_bits is not None else default_energy_bits(H.delta)

    C, D = draw_twirls(H.n_qubits, gen)
    candidate = _candidate(H, C, D, p, spectral=False)
    estimate = energy_estimate(candidate, H, m_bits, gen)

    outcome = QmaOutcome(candidate=candidate, p=p, estimate=estimate,
                         candidate_low_mass=low_energy_mass(candidate, H, H.a + H.delta / 4))
    if estimate.accepted:
        outcome.witness = estimate.post_state
        outcome.witness_energy = H.energy(estimate.post_state)
    logger.debug(f"qma search: p={p}, m_bits={m_bits}, theta={estimate.theta:.6g}, "
                 f"accepted={estimate.accepted}")
    return outcome


def qma_exp_search(H: LocalHamiltonian, rng: Optional[RngLike] = None) -> QmaOutcome:
    """
    Gate-free variant: return C^dagger |p_f> directly.

    Filter exponents within the cap use the same dense path (and draws) as
    qma_search_one_query, so a shared seed yields the same candidate.
    """
    _require_normalized(H)
    gen = as_generator(rng if rng is not None else RngStream(config.DEFAULT_SEED))
    p = filter_exponent(H.n_qubits, H.delta)
    C, D = draw_twirls(H.n_qubits, gen)
    candidate = _candidate(H, C, D, p, spectral=p > config.MAX_FILTER_EXPONENT)

    _, evecs = H.spectrum()
    ground_overlap = float(abs(np.vdot(evecs[:, 0], candidate.amplitudes)) ** 2)
    return QmaOutcome(
        candidate=candidate,
        p=p,
        candidate_low_mass=low_energy_mass(candidate, H, (H.a + H.b) / 2),
        ground_overlap=ground_overlap,
    )


def amplify_qma(H: LocalHamiltonian, t: int, rng: Optional[RngLike] = None) -> QmaOutcome:
    """Rerun the gated pipeline up to t times; return the first non-abort."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    stream = rng if rng is not None else RngStream(config.DEFAULT_SEED)
    outcome = None
    for attempt in range(t):
        run_rng = stream.child(attempt) if isinstance(stream, RngStream) else stream
        outcome = qma_search_one_query(H, run_rng)
        outcome.attempts = attempt + 1
        if not outcome.aborted:
            break
    return outcome
