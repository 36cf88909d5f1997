"""
Ensembles Module
Seeded sampling of Haar-random states and unitaries and of uniformly random
Clifford elements, plus Monte-Carlo checks of the 2-design moment facts.

Uniform symplectic sampling follows the canonical-form construction of Koenig
and Smolin ("How to efficiently select an arbitrary Clifford group element"):
each recursion level draws the image of the first symplectic pair through two
transvections, then recurses on the complement.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from . import config
from .config import settings
from .qcore import InvalidStateError, StateVector, UnitaryMatrix


@dataclass(frozen=True)
class RngStream:
    """
    Reproducible random stream identified by (seed, stream_id).

    Child streams extend the spawn path, so trial i of a run and sub-sampler j
    inside it never share draws.
    """

    seed: int
    stream_id: int = 0
    path: Tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        """Fresh generator; identical streams give bit-identical draws."""
        seq = np.random.SeedSequence(
            entropy=self.seed & ((1 << 64) - 1),
            spawn_key=(self.stream_id,) + self.path,
        )
        return np.random.default_rng(seq)

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (index,))


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Resolve a stream to a generator; generators pass through and keep advancing."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"Expected RngStream or numpy Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# Haar ensembles
# ---------------------------------------------------------------------------

def _ginibre(gen: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols))) / np.sqrt(2)


def haar_amplitudes(dim: int, rng: RngLike) -> np.ndarray:
    """Raw Haar-random unit vector; no qubit cap, for large-d statistics."""
    if dim < 2:
        raise ValueError(f"Haar states need dim >= 2, got {dim}")
    vec = _ginibre(as_generator(rng), dim, 1)[:, 0]
    return vec / np.linalg.norm(vec)


def haar_state(dim: int, rng: RngLike) -> StateVector:
    """Haar-random unit vector: i.i.d. complex Gaussians, normalized."""
    return StateVector(haar_amplitudes(dim, rng))


def haar_isometry(dim: int, cols: int, rng: RngLike) -> np.ndarray:
    """
    First `cols` columns of a Haar unitary (QR of a Ginibre matrix with the
    phase correction that makes the distribution invariant).
    """
    if dim < 2:
        raise ValueError(f"Haar unitaries need dim >= 2, got {dim}")
    if not 1 <= cols <= dim:
        raise ValueError(f"Cannot take {cols} columns of a {dim}-dimensional unitary")
    gen = as_generator(rng)
    q, r = np.linalg.qr(_ginibre(gen, dim, cols))
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_unitary(dim: int, rng: RngLike) -> UnitaryMatrix:
    """Haar-random unitary on C^dim."""
    return UnitaryMatrix(haar_isometry(dim, dim, rng), label="haar")


# ---------------------------------------------------------------------------
# Symplectic group over GF(2), interleaved (x_0, z_0, x_1, z_1, ...) coordinates
# ---------------------------------------------------------------------------

def _symplectic_inner(v: np.ndarray, w: np.ndarray) -> int:
    return int(np.sum(v[0::2] * w[1::2] + w[0::2] * v[1::2]) % 2)


def _transvection(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v + _symplectic_inner(k, v) * k) % 2


def _int_to_bits(i: int, n: int) -> np.ndarray:
    return np.array([(i >> j) & 1 for j in range(n)], dtype=np.int64)


def _find_transvection(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return (h1, h2) with y = Z_h1 Z_h2 x; an all-zero h is a no-op."""
    out = np.zeros((2, x.size), dtype=np.int64)
    if np.array_equal(x, y):
        return out
    if _symplectic_inner(x, y) == 1:
        out[0] = (x + y) % 2
        return out

    z = np.zeros(x.size, dtype=np.int64)
    for ii in range(0, x.size, 2):
        if (x[ii] + x[ii + 1]) != 0 and (y[ii] + y[ii + 1]) != 0:
            z[ii] = (x[ii] + y[ii]) % 2
            z[ii + 1] = (x[ii + 1] + y[ii + 1]) % 2
            if (z[ii] + z[ii + 1]) == 0:
                z[ii + 1] = 1
                if x[ii] != x[ii + 1]:
                    z[ii] = 1
            out[0] = (x + z) % 2
            out[1] = (y + z) % 2
            return out

    # no shared non-00 pair: pick one slot where only x is non-00, one where only y is
    for ii in range(0, x.size, 2):
        if (x[ii] + x[ii + 1]) != 0 and (y[ii] + y[ii + 1]) == 0:
            if x[ii] == x[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = x[ii]
                z[ii] = x[ii + 1]
            break
    for ii in range(0, x.size, 2):
        if (x[ii] + x[ii + 1]) == 0 and (y[ii] + y[ii + 1]) != 0:
            if y[ii] == y[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = y[ii]
                z[ii] = y[ii + 1]
            break
    out[0] = (x + z) % 2
    out[1] = (y + z) % 2
    return out


def _sample_symplectic(n: int, gen: np.random.Generator) -> np.ndarray:
    """Uniform element of Sp(2n, GF(2)); rows form a symplectic basis."""
    nn = 2 * n
    f1 = _int_to_bits(int(gen.integers(1, 1 << nn)), nn)
    e1 = np.zeros(nn, dtype=np.int64)
    e1[0] = 1
    T = _find_transvection(e1, f1)

    bits = _int_to_bits(int(gen.integers(0, 1 << (nn - 1))), nn - 1)
    eprime = e1.copy()
    eprime[2:] = bits[1:]
    h0 = _transvection(T[1], _transvection(T[0], eprime))
    if bits[0] == 1:
        f1 = np.zeros(nn, dtype=np.int64)

    g = np.eye(nn, dtype=np.int64)
    if n > 1:
        g[2:, 2:] = _sample_symplectic(n - 1, gen)
    for j in range(nn):
        row = _transvection(T[0], g[j])
        row = _transvection(T[1], row)
        row = _transvection(h0, row)
        g[j] = _transvection(f1, row)
    return g


def clifford_group_order(n_qubits: int) -> int:
    """|Cliff_n / U(1)| = 2^(n^2 + 2n) prod_j (4^j - 1)."""
    order = 2 ** (n_qubits * n_qubits + 2 * n_qubits)
    for j in range(1, n_qubits + 1):
        order *= 4 ** j - 1
    return order


# ---------------------------------------------------------------------------
# Paulis
# ---------------------------------------------------------------------------

def _bits_to_mask(bits: np.ndarray) -> int:
    n = len(bits)
    return sum(int(b) << (n - 1 - q) for q, b in enumerate(bits))


def apply_pauli(x: np.ndarray, z: np.ndarray, sign: int, vector: np.ndarray) -> np.ndarray:
    """
    Apply the Hermitian Pauli (-1)^sign i^{|x & z|} X^x Z^z to a vector.
    """
    n = len(x)
    idx = np.arange(1 << n)
    parity = np.zeros(idx.size, dtype=np.int64)
    for q in range(n):
        if z[q]:
            parity ^= (idx >> (n - 1 - q)) & 1
    n_y = int(np.sum(np.asarray(x) & np.asarray(z)))
    coeff = (-1) ** int(sign) * (1j ** n_y)
    out = np.empty_like(vector, dtype=complex)
    out[idx ^ _bits_to_mask(x)] = coeff * (1 - 2 * parity) * vector
    return out


def pauli_matrix(x: np.ndarray, z: np.ndarray, sign: int = 0) -> np.ndarray:
    """Dense Hermitian Pauli matrix."""
    single = {
        (0, 0): np.eye(2),
        (1, 0): np.array([[0, 1], [1, 0]]),
        (0, 1): np.array([[1, 0], [0, -1]]),
        (1, 1): np.array([[0, -1j], [1j, 0]]),
    }
    out = np.array([[1.0 + 0j]])
    for xq, zq in zip(x, z):
        out = np.kron(out, single[(int(xq), int(zq))])
    return (-1) ** int(sign) * out


def _pauli_product(p1: Tuple[np.ndarray, np.ndarray, int],
                   p2: Tuple[np.ndarray, np.ndarray, int]) -> Tuple[np.ndarray, np.ndarray, int]:
    """(i^r1 X^x1 Z^z1)(i^r2 X^x2 Z^z2) in the same unnormalized form."""
    x1, z1, r1 = p1
    x2, z2, r2 = p2
    r = (r1 + r2 + 2 * int(np.sum(z1 & x2))) % 4
    return (x1 ^ x2, z1 ^ z2, r)


# ---------------------------------------------------------------------------
# Clifford elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CliffordElement:
    """
    Clifford unitary modulo global phase, stored as a stabilizer tableau.

    Row j < n of `tableau` is the (x | z) image of X_j, row n + j the image of
    Z_j; `phases` holds the sign bit of each image (Hermitian convention).
    """

    n_qubits: int
    tableau: np.ndarray
    phases: np.ndarray
    _dense: Dict[str, UnitaryMatrix] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = self.n_qubits
        tab = np.array(self.tableau, dtype=np.int64) % 2
        ph = np.array(self.phases, dtype=np.int64) % 2
        if tab.shape != (2 * n, 2 * n) or ph.shape != (2 * n,):
            raise InvalidStateError(f"Tableau shape {tab.shape} does not match {n} qubits")
        tab.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "tableau", tab)
        object.__setattr__(self, "phases", ph)
        if not self.is_symplectic():
            raise InvalidStateError("Tableau rows do not form a symplectic basis")

    def image(self, row: int) -> Tuple[np.ndarray, np.ndarray, int]:
        n = self.n_qubits
        return self.tableau[row, :n], self.tableau[row, n:], int(self.phases[row])

    def is_symplectic(self) -> bool:
        n = self.n_qubits
        x, z = self.tableau[:, :n], self.tableau[:, n:]
        gram = (x @ z.T + z @ x.T) % 2
        omega = np.zeros((2 * n, 2 * n), dtype=np.int64)
        omega[:n, n:] = np.eye(n, dtype=np.int64)
        omega[n:, :n] = np.eye(n, dtype=np.int64)
        return bool(np.array_equal(gram, omega))

    def conjugate_pauli(self, x: np.ndarray, z: np.ndarray,
                        sign: int = 0) -> Tuple[np.ndarray, np.ndarray, int]:
        """C P C^dagger for a Hermitian Pauli P, returned as (x', z', sign')."""
        n = self.n_qubits
        x = np.asarray(x, dtype=np.int64) % 2
        z = np.asarray(z, dtype=np.int64) % 2
        acc = (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
               (2 * int(sign) + int(np.sum(x & z))) % 4)
        for q in range(n):
            if x[q]:
                acc = _pauli_product(acc, self._unnormalized_image(q))
        for q in range(n):
            if z[q]:
                acc = _pauli_product(acc, self._unnormalized_image(n + q))
        xo, zo, r = acc
        rel = (r - int(np.sum(xo & zo))) % 4
        if rel % 2:
            raise InvalidStateError("Conjugated Pauli is not Hermitian")
        return xo, zo, rel // 2

    def _unnormalized_image(self, row: int) -> Tuple[np.ndarray, np.ndarray, int]:
        x, z, s = self.image(row)
        return x.copy(), z.copy(), (2 * s + int(np.sum(x & z))) % 4

    def to_unitary(self) -> UnitaryMatrix:
        """Dense form (cached); columns are C|b> = prod_j (C X_j C^dag)^{b_j} C|0>."""
        if "U" in self._dense:
            return self._dense["U"]
        n = self.n_qubits
        if n > config.MAX_STATE_QUBITS:
            raise InvalidStateError(f"Dense Clifford on {n} qubits exceeds the statevector cap")
        dim = 1 << n
        stabilized = self._zero_image()
        cols = np.zeros((dim, dim), dtype=complex)
        cols[:, 0] = stabilized
        for b in range(1, dim):
            top = b.bit_length() - 1
            q = n - 1 - top
            x, z, s = self.image(q)
            cols[:, b] = apply_pauli(x, z, s, cols[:, b ^ (1 << top)])
        unitary = UnitaryMatrix(cols, label="clifford")
        self._dense["U"] = unitary
        return unitary

    def _zero_image(self) -> np.ndarray:
        """C|0^n>: the joint +1 eigenvector of the Z_j images."""
        n = self.n_qubits
        dim = 1 << n
        for b in range(dim):
            vec = np.zeros(dim, dtype=complex)
            vec[b] = 1.0
            for j in range(n):
                x, z, s = self.image(n + j)
                vec = (vec + apply_pauli(x, z, s, vec)) / 2
            norm = np.linalg.norm(vec)
            if norm > 1e-6:
                return vec / norm
        raise InvalidStateError("Stabilizer images have no common +1 eigenvector")

    @classmethod
    def identity(cls, n_qubits: int) -> "CliffordElement":
        return cls(n_qubits, np.eye(2 * n_qubits, dtype=np.int64),
                   np.zeros(2 * n_qubits, dtype=np.int64))

    @classmethod
    def hadamard_all(cls, n_qubits: int) -> "CliffordElement":
        n = n_qubits
        tab = np.zeros((2 * n, 2 * n), dtype=np.int64)
        tab[:n, n:] = np.eye(n, dtype=np.int64)  # X_j -> Z_j
        tab[n:, :n] = np.eye(n, dtype=np.int64)  # Z_j -> X_j
        return cls(n, tab, np.zeros(2 * n, dtype=np.int64))


def random_clifford(n_qubits: int, rng: RngLike) -> CliffordElement:
    """Uniform element of the n-qubit Clifford group modulo global phase."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    gen = as_generator(rng)
    g = _sample_symplectic(n_qubits, gen)
    n = n_qubits
    tab = np.zeros((2 * n, 2 * n), dtype=np.int64)
    for j in range(n):
        tab[j, :n], tab[j, n:] = g[2 * j, 0::2], g[2 * j, 1::2]
        tab[n + j, :n], tab[n + j, n:] = g[2 * j + 1, 0::2], g[2 * j + 1, 1::2]
    phases = gen.integers(0, 2, size=2 * n)
    return CliffordElement(n, tab, phases)


def random_twirl(n_qubits: int, rng: RngLike, family: Optional[str] = None) -> UnitaryMatrix:
    """Dense 2-design element: uniform Clifford, or Haar when TWIRL=haar."""
    family = family or settings.TWIRL
    if family == "clifford":
        return random_clifford(n_qubits, rng).to_unitary()
    if family == "haar":
        return haar_unitary(1 << n_qubits, rng)
    raise ValueError(f"Unknown twirl family {family!r}")


def _stderr(sample: np.ndarray) -> float:
    if len(sample) < 2:
        return float("inf")
    return float(sample.std(ddof=1) / np.sqrt(len(sample)))


def two_design_moments(n_qubits: int, trials: int, rng: RngLike,
                       sampler: Optional[Callable[[int, np.random.Generator], UnitaryMatrix]] = None,
                       tau: Optional[StateVector] = None,
                       theta: float = 0.5) -> Dict[str, float]:
    """
    Monte-Carlo moments of |<x|C|tau>|^2 at x = 0 for a unitary sampler.

    Returns:
        mean second moment, mean fourth moment, Paley-Zygmund rate
        Pr[|<x|C|tau>|^2 >= theta / 2^n], the standard errors of the three
        means and the exact 2-design targets
    """
    gen = as_generator(rng)
    sampler = sampler or (lambda n, g: random_twirl(n, g))
    dim = 1 << n_qubits
    if tau is None:
        tau = haar_state(dim, gen)

    values = np.empty(trials)
    for t in range(trials):
        amp = (sampler(n_qubits, gen).entries @ tau.amplitudes)[0]
        values[t] = abs(amp) ** 2

    logger.debug(f"two-design moments over {trials} draws at n={n_qubits}")
    return {
        "second": float(values.mean()),
        "fourth": float(np.mean(values ** 2)),
        "pz_rate": float(np.mean(values >= theta / dim)),
        "second_stderr": _stderr(values),
        "fourth_stderr": _stderr(values ** 2),
        "pz_stderr": _stderr((values >= theta / dim).astype(float)),
        "second_target": 1.0 / dim,
        "fourth_target": 2.0 / (dim * (dim + 1)),
        "pz_floor": (1 - theta) ** 2 / 2,
    }
