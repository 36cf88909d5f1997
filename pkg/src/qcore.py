"""
Quantum Core Module
Exact dense linear-algebra engine: states, density matrices, unitaries,
overlaps, partial traces and the closed-form swap-test update.

Basis convention: qubit 0 is the most significant bit of the basis index.
"""

from dataclasses import dataclass, field
from typing import Any, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from . import config
from .config import settings


class QsynthError(Exception):
    """Base exception for the simulator."""

    def __init__(self, message: str, detail: Any = None):
        self.message = message
        self.detail = detail
        super().__init__(self.message)


class DimensionMismatchError(QsynthError, ValueError):
    """Operands live in spaces of different dimension."""


class InvalidStateError(QsynthError, ValueError):
    """A value violates its state / matrix invariants."""


class CapExceededError(QsynthError, ValueError):
    """A desk-scale size cap was exceeded."""


@dataclass(frozen=True)
class Abort:
    """A modeled failure outcome of a search pipeline; returned, never raised."""

    reason: str


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _qubits_for(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise InvalidStateError(f"Dimension {dim} is not a power of 2")
    return n


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector over 2^n basis states."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = _qubits_for(amps.size)
        if n < 1:
            raise InvalidStateError("A state needs at least one qubit")
        if n > config.MAX_STATE_QUBITS:
            raise CapExceededError(
                f"{n} qubits exceeds the statevector cap of {config.MAX_STATE_QUBITS}"
            )
        norm_sq = float(np.vdot(amps, amps).real)
        if abs(norm_sq - 1.0) > settings.NORM_TOL:
            raise InvalidStateError(f"State is not normalized (|psi|^2 = {norm_sq:.12g})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_qubits(self) -> int:
        return _qubits_for(self.dim)

    @classmethod
    def from_unnormalized(cls, vector: Sequence[complex]) -> "StateVector":
        """Normalize and wrap an arbitrary nonzero vector."""
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidStateError("Cannot normalize the zero vector")
        return cls(vec / norm)

    def density(self) -> "DensityMatrix":
        return density_from_state(self)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian PSD matrix; unit trace unless flagged unnormalized."""

    entries: np.ndarray
    unnormalized: bool = False

    def __post_init__(self):
        mat = np.array(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidStateError(f"Density matrix must be square, got {mat.shape}")
        n = _qubits_for(mat.shape[0])
        if n > config.MAX_DENSITY_QUBITS:
            raise CapExceededError(
                f"{n} qubits exceeds the density-matrix cap of {config.MAX_DENSITY_QUBITS}"
            )
        tol = settings.NORM_TOL
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > tol:
            raise InvalidStateError("Density matrix is not Hermitian")
        mat = (mat + mat.conj().T) / 2
        if not self.unnormalized:
            trace = float(np.trace(mat).real)
            if abs(trace - 1.0) > tol:
                raise InvalidStateError(f"Density matrix trace is {trace:.12g}, expected 1")
        min_eig = float(np.linalg.eigvalsh(mat)[0])
        if min_eig < settings.PSD_FLOOR:
            raise InvalidStateError(f"Density matrix has eigenvalue {min_eig:.3g} < 0")
        object.__setattr__(self, "entries", _frozen(mat))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return _qubits_for(self.dim)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


@dataclass(frozen=True)
class UnitaryMatrix:
    """Square matrix with U^dagger U = I."""

    entries: np.ndarray
    label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        mat = np.array(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidStateError(f"Unitary must be square, got {mat.shape}")
        _qubits_for(mat.shape[0])
        err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if err > settings.UNITARY_TOL:
            raise InvalidStateError(f"Matrix is not unitary (max |U^dag U - I| = {err:.3g})")
        object.__setattr__(self, "entries", _frozen(mat))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return _qubits_for(self.dim)

    def dagger(self) -> "UnitaryMatrix":
        return UnitaryMatrix(self.entries.conj().T)

    def __matmul__(self, other: "UnitaryMatrix") -> "UnitaryMatrix":
        _check_dims(self.dim, other.dim)
        return UnitaryMatrix(self.entries @ other.entries)

    @classmethod
    def identity(cls, n_qubits: int) -> "UnitaryMatrix":
        return cls(np.eye(1 << n_qubits), label="I")

    @classmethod
    def hadamard(cls, n_qubits: int) -> "UnitaryMatrix":
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        out = np.array([[1.0]])
        for _ in range(n_qubits):
            out = np.kron(out, h)
        return cls(out, label="H")


def _check_dims(a: int, b: int):
    if a != b:
        raise DimensionMismatchError(f"Dimension mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def basis_state(index: int, n_qubits: int) -> StateVector:
    """Computational basis state |index> on n qubits."""
    dim = 1 << n_qubits
    if not 0 <= index < dim:
        raise ValueError(f"Basis index {index} out of range for {n_qubits} qubits")
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return StateVector(vec)


def ket(bits: str) -> StateVector:
    """State from a bit string such as '010' or '+-'."""
    singles = {
        "0": np.array([1, 0]),
        "1": np.array([0, 1]),
        "+": np.array([1, 1]) / np.sqrt(2),
        "-": np.array([1, -1]) / np.sqrt(2),
    }
    vec = np.array([1.0 + 0j])
    for ch in bits:
        if ch not in singles:
            raise ValueError(f"Unknown single-qubit label {ch!r}")
        vec = np.kron(vec, singles[ch])
    return StateVector(vec)


def density_from_state(psi: StateVector) -> DensityMatrix:
    """Pure-state projector |psi><psi|."""
    amps = psi.amplitudes
    return DensityMatrix(np.outer(amps, amps.conj()))


def maximally_mixed(n_qubits: int) -> DensityMatrix:
    dim = 1 << n_qubits
    return DensityMatrix(np.eye(dim) / dim)


def tensor(a: Union[StateVector, DensityMatrix], b: Union[StateVector, DensityMatrix]):
    """Kronecker product of two states of the same kind."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries),
                             unnormalized=a.unnormalized or b.unnormalized)
    raise TypeError("tensor expects two StateVectors or two DensityMatrices")


def pad_with_zeros(psi: StateVector, n_total: int) -> StateVector:
    """|psi> (x) |0...0> on n_total qubits."""
    extra = n_total - psi.n_qubits
    if extra < 0:
        raise DimensionMismatchError(
            f"Cannot pad a {psi.n_qubits}-qubit state to {n_total} qubits"
        )
    zeros = np.zeros(1 << extra, dtype=complex)
    zeros[0] = 1.0
    return StateVector(np.kron(psi.amplitudes, zeros))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def overlap(psi: StateVector, tau: StateVector) -> float:
    """|<psi|tau>|^2."""
    _check_dims(psi.dim, tau.dim)
    value = abs(np.vdot(psi.amplitudes, tau.amplitudes)) ** 2
    return float(min(max(value, 0.0), 1.0))


def dm_overlap(rho: DensityMatrix, tau: StateVector) -> float:
    """tr(rho |tau><tau|)."""
    _check_dims(rho.dim, tau.dim)
    t = tau.amplitudes
    value = float(np.vdot(t, rho.entries @ t).real)
    return float(min(max(value, 0.0), 1.0))


def fidelity_pure(state: Union[StateVector, DensityMatrix], tau: StateVector) -> float:
    """Fidelity with a pure target; dispatches to overlap or dm_overlap."""
    if isinstance(state, StateVector):
        return overlap(state, tau)
    if isinstance(state, DensityMatrix):
        return dm_overlap(state, tau)
    raise TypeError(f"Expected StateVector or DensityMatrix, got {type(state).__name__}")


def swap_test_exact(rho1: DensityMatrix, rho2: DensityMatrix) -> Tuple[float, DensityMatrix]:
    """
    Exact swap test on rho1 (x) rho2 conditioned on outcome 0.

    Returns:
        (p_success, survivor) where p_success = (1 + tr(rho1 rho2)) / 2 and the
        survivor is the reduced state of either register after success,
        (rho1 + rho2 + rho1 rho2 + rho2 rho1) / (2 (1 + tr(rho1 rho2))).
    """
    _check_dims(rho1.dim, rho2.dim)
    a, b = rho1.entries, rho2.entries
    ab = a @ b
    overlap_term = float(np.trace(ab).real)
    p_success = (1.0 + overlap_term) / 2.0
    survivor = (a + b + ab + ab.conj().T) / (2.0 * (1.0 + overlap_term))
    return p_success, DensityMatrix(survivor)


def apply_unitary(U: UnitaryMatrix, psi: StateVector) -> StateVector:
    """U |psi>."""
    _check_dims(U.dim, psi.dim)
    return StateVector(U.entries @ psi.amplitudes)


def partial_trace_pair(joint: DensityMatrix,
                       keep: Literal["first", "second"]) -> DensityMatrix:
    """Partial trace of a two-register state on C^d (x) C^d."""
    big = joint.dim
    d = int(round(np.sqrt(big)))
    if d * d != big:
        raise DimensionMismatchError(f"Joint dimension {big} is not a perfect square")
    t = joint.entries.reshape(d, d, d, d)
    if keep == "first":
        reduced = np.einsum("ikjk->ij", t)
    elif keep == "second":
        reduced = np.einsum("kikj->ij", t)
    else:
        raise ValueError(f"keep must be 'first' or 'second', got {keep!r}")
    return DensityMatrix(reduced, unnormalized=joint.unnormalized)


def partial_trace_prefix(state: Union[StateVector, DensityMatrix],
                         keep_qubits: int) -> DensityMatrix:
    """Reduced state of the first keep_qubits qubits."""
    n = state.n_qubits
    if not 1 <= keep_qubits <= n:
        raise ValueError(f"Cannot keep {keep_qubits} of {n} qubits")
    dk = 1 << keep_qubits
    dr = 1 << (n - keep_qubits)
    if isinstance(state, StateVector):
        m = state.amplitudes.reshape(dk, dr)
        return DensityMatrix(m @ m.conj().T)
    t = state.entries.reshape(dk, dr, dk, dr)
    return DensityMatrix(np.einsum("ikjk->ij", t), unnormalized=state.unnormalized)


def swap_operator(d: int) -> np.ndarray:
    """SWAP on C^d (x) C^d as a dense permutation matrix."""
    S = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            S[j * d + i, i * d + j] = 1.0
    return S


def swap_test_circuit(rho1: DensityMatrix, rho2: DensityMatrix) -> Tuple[float, DensityMatrix]:
    """
    Brute-force swap test: ancilla Hadamard, controlled SWAP, Hadamard,
    project the ancilla on 0, then trace out the ancilla and register 2.
    """
    _check_dims(rho1.dim, rho2.dim)
    d = rho1.dim
    dd = d * d
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    H_anc = np.kron(h, np.eye(dd))
    cswap = np.zeros((2 * dd, 2 * dd))
    cswap[:dd, :dd] = np.eye(dd)
    cswap[dd:, dd:] = swap_operator(d)
    circuit = H_anc @ cswap @ H_anc

    anc0 = np.zeros((2, 2))
    anc0[0, 0] = 1.0
    full = np.kron(anc0, np.kron(rho1.entries, rho2.entries))
    evolved = circuit @ full @ circuit.conj().T

    block = evolved[:dd, :dd]
    p_success = float(np.trace(block).real)
    reduced = np.einsum("ikjk->ij", block.reshape(d, d, d, d)) / p_success
    return p_success, DensityMatrix(reduced)


def hadamard_transform(vector: np.ndarray) -> np.ndarray:
    """H^{(x)n} applied to a length-2^n vector by butterflies."""
    out = np.array(vector, dtype=complex).reshape(-1)
    n = _qubits_for(out.size)
    for q in range(n):
        view = out.reshape(1 << q, 2, -1)
        a = view[:, 0, :].copy()
        b = view[:, 1, :].copy()
        view[:, 0, :] = a + b
        view[:, 1, :] = a - b
    return out / np.sqrt(out.size)


def is_valid_density(mat: np.ndarray) -> bool:
    """True when mat passes the DensityMatrix invariants."""
    try:
        DensityMatrix(mat)
    except InvalidStateError:
        return False
    return True
