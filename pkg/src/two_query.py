"""
Two-Query Synthesis Module
Rank-match the magnitudes of a Haar vector u to those of the twirled target
v, align phases with a quantized phase register, uncompute the oracle and
undo the twirl. Also holds the sorted-distance and Wasserstein statistics
that govern the error of the procedure.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import special, stats

from . import config
from .ensembles import RngLike, RngStream, as_generator, haar_amplitudes
from .qcore import (
    DensityMatrix,
    DimensionMismatchError,
    InvalidStateError,
    StateVector,
    UnitaryMatrix,
    fidelity_pure,
    pad_with_zeros,
    partial_trace_prefix,
)

RAYLEIGH_SCALE = 1.0 / np.sqrt(2.0)  # |u_x| sqrt(d) for Haar u, E R^2 = 1


@dataclass(frozen=True)
class PermPhaseOracle:
    """
    The oracle pair (f, g): f(x) = (phase(x), sigma(x)) and g its inverse.

    phases holds integers k so that the phase of x is 2 pi k / 2^phase_bits.
    """

    n_bits: int
    sigma: np.ndarray
    sigma_inverse: np.ndarray
    phases: np.ndarray
    phase_bits: int

    def __post_init__(self):
        size = 1 << self.n_bits
        for name in ("sigma", "sigma_inverse", "phases"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (size,):
                raise InvalidStateError(f"{name} must have {size} entries, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.array_equal(self.sigma[self.sigma_inverse], np.arange(size)):
            raise InvalidStateError("sigma_inverse is not the inverse of sigma")
        if np.any(self.phases < 0) or np.any(self.phases >= (1 << self.phase_bits)):
            raise InvalidStateError(f"Phases must be integers in [0, 2^{self.phase_bits})")

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * self.phases / float(1 << self.phase_bits)

    def reconstruct(self, u: np.ndarray) -> np.ndarray:
        """sum_x e^{i phase(x)} u_x |sigma(x)>."""
        out = np.zeros(u.size, dtype=complex)
        out[self.sigma] = np.exp(1j * self.angles) * u
        return out


def _rank_order(vec: np.ndarray) -> np.ndarray:
    """Indices sorted by descending magnitude, ties broken by ascending index."""
    idx = np.arange(vec.size)
    return np.lexsort((idx, -np.abs(vec)))


def build_perm_phase_oracle(u: np.ndarray, v: np.ndarray,
                            phase_bits: int = config.DEFAULT_PHASE_BITS) -> PermPhaseOracle:
    """
    Match the r-th largest |u_x| to the r-th largest |v_y| and quantize the
    phase that rotates u_x onto the phase of v_y.
    """
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if u.size != v.size:
        raise DimensionMismatchError(f"Vector lengths differ: {u.size} vs {v.size}")
    if phase_bits < 1 or phase_bits > 62:
        raise ValueError(f"phase_bits must lie in [1, 62], got {phase_bits}")
    n_bits = int(u.size).bit_length() - 1

    order_u, order_v = _rank_order(u), _rank_order(v)
    sigma = np.empty(u.size, dtype=np.int64)
    sigma[order_u] = order_v
    sigma_inverse = np.empty(u.size, dtype=np.int64)
    sigma_inverse[order_v] = order_u

    matched = v[sigma]
    theta = np.angle(matched) - np.angle(u)
    theta[(u == 0) | (matched == 0)] = 0.0
    grid = 1 << phase_bits
    phases = np.mod(np.round(theta / (2 * np.pi) * grid), grid).astype(np.int64)
    return PermPhaseOracle(n_bits, sigma, sigma_inverse, phases, phase_bits)


def sorted_abs_distance(u: np.ndarray, v: np.ndarray) -> float:
    """|| sort(|u|) - sort(|v|) || with both sorts descending."""
    u = np.asarray(u).reshape(-1)
    v = np.asarray(v).reshape(-1)
    if u.size != v.size:
        raise DimensionMismatchError(f"Vector lengths differ: {u.size} vs {v.size}")
    su = np.sort(np.abs(u))[::-1]
    sv = np.sort(np.abs(v))[::-1]
    return float(np.linalg.norm(su - sv))


def quantization_error(dim: int, phase_bits: int) -> float:
    """Phase-rounding term d * 2^(-2 phase_bits + 3) of the reconstruction bound."""
    return float(dim * 2.0 ** (-2 * phase_bits + 3))


@dataclass
class TwoQueryResult:
    output: StateVector
    reduced: DensityMatrix
    fidelity: float
    expanded_fidelity: float
    sorted_distance: float
    ancilla_clean: bool
    quantization_error: float
    oracle: PermPhaseOracle

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    def __iter__(self) -> Iterator:
        return iter((self.output, self.fidelity))


def _run_oracle_circuit(u: np.ndarray, oracle: PermPhaseOracle) -> Tuple[np.ndarray, bool]:
    """
    Simulate query f, phase kickback and query g on registers (X, A, B).

    The state stays supported on one basis triple per x, so each register is
    held as an integer array over the support.

    Returns:
        (amplitudes on register B, whether X and A returned to exactly 0)
    """
    size = u.size
    amps = u.astype(complex).copy()
    reg_x = np.arange(size, dtype=np.int64)
    reg_a = np.zeros(size, dtype=np.int64)
    reg_b = np.zeros(size, dtype=np.int64)

    # f: (x, 0, 0) -> (x, phase(x), sigma(x))
    reg_a ^= oracle.phases[reg_x]
    reg_b ^= oracle.sigma[reg_x]
    amps *= np.exp(2j * np.pi * reg_a / float(1 << oracle.phase_bits))
    # g: (x, a, y) -> (x ^ sigma^-1(y), a ^ phase(sigma^-1(y)), y)
    source = oracle.sigma_inverse[reg_b]
    reg_x ^= source
    reg_a ^= oracle.phases[source]

    clean = bool(np.all(reg_x == 0) and np.all(reg_a == 0))
    out = np.zeros(size, dtype=complex)
    np.add.at(out, reg_b, amps)
    return out, clean


def two_query_synthesize(target: StateVector, n_expanded: Optional[int] = None,
                         phase_bits: int = config.DEFAULT_PHASE_BITS,
                         rng: Optional[RngLike] = None,
                         unitaries: Optional[Tuple[UnitaryMatrix, UnitaryMatrix]] = None,
                         vectors: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> TwoQueryResult:
    """
    Two-query state synthesis.

    Without hooks only u = U|0> and v = V|tau'> are drawn: u and v are
    independent Haar vectors, and V^dagger w is drawn from its exact law given
    v, namely <v|w> |tau'> plus a Haar direction orthogonal to tau' carrying
    the rest of the norm. With `unitaries` the dense U, V are used instead;
    with `vectors` u and v are fixed and V^dagger w is drawn as above.

    Returns:
        TwoQueryResult with the expanded output, its reduction to the target
        qubits and the fidelity with the target
    """
    n_expanded = n_expanded if n_expanded is not None else target.n_qubits + config.DEFAULT_EXPANSION
    if n_expanded < target.n_qubits:
        raise DimensionMismatchError(
            f"n_expanded ({n_expanded}) is smaller than the target ({target.n_qubits} qubits)"
        )
    expanded = pad_with_zeros(target, n_expanded)
    tau = expanded.amplitudes
    dim = expanded.dim
    gen = as_generator(rng if rng is not None else RngStream(config.DEFAULT_SEED))

    if unitaries is not None:
        U, V = unitaries
        if U.dim != dim or V.dim != dim:
            raise DimensionMismatchError(f"Twirls must act on dimension {dim}")
        u = U.entries[:, 0]
        v = V.entries @ tau
    elif vectors is not None:
        u = np.asarray(vectors[0], dtype=complex).reshape(-1)
        v = np.asarray(vectors[1], dtype=complex).reshape(-1)
        if u.size != dim or v.size != dim:
            raise DimensionMismatchError(f"Hook vectors must have length {dim}")
    else:
        u = haar_amplitudes(dim, gen)
        v = haar_amplitudes(dim, gen)

    oracle = build_perm_phase_oracle(u, v, phase_bits)
    w, clean = _run_oracle_circuit(u, oracle)

    if unitaries is not None:
        final = unitaries[1].entries.conj().T @ w
    else:
        final = _untwirl_conditional(w, v, tau, gen)

    output = StateVector.from_unnormalized(final)
    reduced = partial_trace_prefix(output, target.n_qubits)
    result = TwoQueryResult(
        output=output,
        reduced=reduced,
        fidelity=fidelity_pure(reduced, target),
        expanded_fidelity=fidelity_pure(output, expanded),
        sorted_distance=sorted_abs_distance(u, v),
        ancilla_clean=clean,
        quantization_error=quantization_error(dim, phase_bits),
        oracle=oracle,
    )
    logger.debug(f"two-query synthesis at d'={dim}: fidelity {result.fidelity:.6f}")
    return result


def _untwirl_conditional(w: np.ndarray, v: np.ndarray, tau: np.ndarray,
                         gen: np.random.Generator) -> np.ndarray:
    """V^dagger w for a Haar V conditioned on V tau = v."""
    along = np.vdot(v, w)
    rest = max(float(np.vdot(w, w).real) - abs(along) ** 2, 0.0)
    h = haar_amplitudes(tau.size, gen)
    h = h - np.vdot(tau, h) * tau
    h /= np.linalg.norm(h)
    return along * tau + np.sqrt(rest) * h


# ---------------------------------------------------------------------------
# Rayleigh statistics
# ---------------------------------------------------------------------------

def _partial_first_moment(x: np.ndarray, scale: float) -> np.ndarray:
    """int_0^x t f(t) dt for the Rayleigh density f."""
    finite = np.where(np.isinf(x), 0.0, x)
    tail = finite * np.exp(-np.square(finite) / (2 * scale ** 2))
    return -tail + scale * np.sqrt(np.pi / 2) * special.erf(x / (scale * np.sqrt(2)))


def _partial_second_moment(x: np.ndarray, scale: float) -> np.ndarray:
    """int_0^x t^2 f(t) dt for the Rayleigh density f."""
    t = np.square(np.where(np.isinf(x), 0.0, x)) / (2 * scale ** 2)
    value = 2 * scale ** 2 * (1.0 - (t + 1.0) * np.exp(-t))
    return np.where(np.isinf(x), 2 * scale ** 2, value)


def empirical_wasserstein2(samples: Sequence[float], reference: str = "rayleigh",
                           scale: float = RAYLEIGH_SCALE) -> float:
    """
    W2 distance between the empirical law of samples and a Rayleigh law.

    The empirical quantile function is constant on [i/N, (i+1)/N); each piece
    is integrated against the Rayleigh quantile function in closed form.
    """
    if reference != "rayleigh":
        raise ValueError(f"Unsupported reference distribution {reference!r}")
    s = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if s.size == 0:
        raise ValueError("empirical_wasserstein2 needs at least one sample")

    n = s.size
    q = np.arange(n + 1) / n
    edges = stats.rayleigh.ppf(q, scale=scale)
    m1 = np.diff(_partial_first_moment(edges, scale))
    m2 = np.diff(_partial_second_moment(edges, scale))
    w2_sq = float(np.sum(s ** 2 / n - 2 * s * m1 + m2))
    return float(np.sqrt(max(w2_sq, 0.0)))


def rayleigh_moments_check(dim: int, rng: RngLike) -> Dict[str, float]:
    """Mean and variance of |u_x| sqrt(d) for one Haar u against the Rayleigh law."""
    r = np.abs(haar_amplitudes(dim, rng)) * np.sqrt(dim)
    return {
        "mean": float(r.mean()),
        "variance": float(r.var()),
        "mean_target": float(np.sqrt(np.pi) / 2),
        "variance_target": float((4 - np.pi) / 4),
    }
