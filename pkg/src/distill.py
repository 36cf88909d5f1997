"""
Swap Test Distillation Module
Pairs registers round by round, keeps the swap-test survivor on success and
reports survivor counts, overlaps and the analytic bounds of the procedure.

Survivors of disjoint input sets are tracked as product states: each
register is a single DensityMatrix and the pair update uses the closed form of
qcore.swap_test_exact.
"""

import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from . import config
from .ensembles import RngLike, RngStream, as_generator
from .qcore import (
    DensityMatrix,
    DimensionMismatchError,
    InvalidStateError,
    QsynthError,
    StateVector,
    density_from_state,
    dm_overlap,
    swap_test_exact,
)


class BoundNotApplicable(QsynthError):
    """The preconditions of an analytic bound do not hold."""


@dataclass(frozen=True)
class DistillationConfig:
    """
    Distillation parameters.

    rounds="auto" picks the largest l with n * 6^l <= m (at least one round),
    where n defaults to the target's qubit count.

    With an odd register count the last register has no partner. By default it
    is dropped, so every round leaves at most floor(m_prev / 2) survivors and
    the survival and overlap bounds apply to the counts as reported.
    carry_unpaired=True passes it through untouched instead; the count after
    that round can then reach ceil(m_prev / 2).
    """

    m: int
    rounds: Union[int, Literal["auto"]] = "auto"
    mode: Literal["sampled", "exact_conditional"] = "sampled"
    keep: Literal["first", "random"] = "first"
    carry_unpaired: bool = False
    n: Optional[int] = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"Distillation needs m >= 2 registers, got {self.m}")
        if self.rounds != "auto" and (not isinstance(self.rounds, int) or self.rounds < 1):
            raise ValueError(f"rounds must be 'auto' or an integer >= 1, got {self.rounds!r}")
        if self.mode not in ("sampled", "exact_conditional"):
            raise ValueError(f"Unknown distillation mode {self.mode!r}")
        if self.keep not in ("first", "random"):
            raise ValueError(f"keep must be 'first' or 'random', got {self.keep!r}")

    def resolve_rounds(self, n_qubits: int) -> int:
        if self.rounds != "auto":
            return int(self.rounds)
        return auto_rounds(self.m, self.n if self.n is not None else n_qubits)


@dataclass(frozen=True)
class PairRecord:
    round: int
    parent_overlaps: Tuple[float, float]
    p_success: float
    survivor_overlap: Optional[float]


@dataclass
class DistillationReport:
    """
    Outcome of one distillation run.

    survivor_counts[0] is the input count m; entry k is the count after round k.
    survivor_overlaps follows the same indexing with the mean overlap of the
    registers alive at that point (nan once none are left).
    """

    survivor_counts: List[int]
    survivor_states: List[DensityMatrix]
    survivor_overlaps: List[float]
    all_success_probability: Optional[float]
    aborted: bool
    rounds: int
    lineage: List[int] = field(default_factory=list)
    pairs: List[PairRecord] = field(default_factory=list)

    @property
    def final_overlap(self) -> float:
        return self.survivor_overlaps[-1]

    def output_state(self) -> Optional[DensityMatrix]:
        """First surviving register, None on abort."""
        return self.survivor_states[0] if self.survivor_states else None


def _as_density(state: Union[StateVector, DensityMatrix]) -> DensityMatrix:
    if isinstance(state, StateVector):
        return density_from_state(state)
    return state


def distill(inputs: Sequence[Union[StateVector, DensityMatrix]], target: StateVector,
            cfg: DistillationConfig, rng: Optional[RngLike] = None) -> DistillationReport:
    """
    Run swap test distillation.

    Args:
        inputs: m registers, pure or mixed
        target: State the overlaps are measured against
        cfg: Distillation parameters
        rng: Stream for sampled outcomes and random survivor selection

    Returns:
        DistillationReport; aborted is set when no register survives
    """
    if len(inputs) != cfg.m:
        raise ValueError(f"Config expects m = {cfg.m} registers, got {len(inputs)}")
    registers = [_as_density(s) for s in inputs]
    for reg in registers:
        if reg.dim != target.dim:
            raise DimensionMismatchError(
                f"Register dimension {reg.dim} does not match target dimension {target.dim}"
            )

    gen = as_generator(rng if rng is not None else RngStream(config.DEFAULT_SEED))
    rounds = cfg.resolve_rounds(target.n_qubits)
    exact = cfg.mode == "exact_conditional"

    overlaps = [dm_overlap(r, target) for r in registers]
    lineage = list(range(cfg.m))
    counts = [cfg.m]
    mean_overlaps = [float(np.mean(overlaps))]
    pairs: List[PairRecord] = []
    joint_probability = 1.0

    for k in range(1, rounds + 1):
        next_regs, next_overlaps, next_lineage = [], [], []
        for j in range(len(registers) // 2):
            r1, r2 = registers[2 * j], registers[2 * j + 1]
            p_success, survivor = swap_test_exact(r1, r2)
            parents = (overlaps[2 * j], overlaps[2 * j + 1])

            if exact:
                joint_probability *= p_success
                success = True
            else:
                success = bool(gen.random() < p_success)

            if not success:
                pairs.append(PairRecord(k, parents, p_success, None))
                continue

            survivor_overlap = dm_overlap(survivor, target)
            pairs.append(PairRecord(k, parents, p_success, survivor_overlap))
            slot = 2 * j
            if cfg.keep == "random" and gen.random() < 0.5:
                slot = 2 * j + 1
            next_regs.append(survivor)
            next_overlaps.append(survivor_overlap)
            next_lineage.append(lineage[slot])

        if cfg.carry_unpaired and len(registers) % 2 == 1:
            next_regs.append(registers[-1])
            next_overlaps.append(overlaps[-1])
            next_lineage.append(lineage[-1])

        registers, overlaps, lineage = next_regs, next_overlaps, next_lineage
        counts.append(len(registers))
        mean_overlaps.append(float(np.mean(overlaps)) if overlaps else float("nan"))
        logger.debug(f"distill round {k}/{rounds}: {len(registers)} survivors")
        if not registers:
            break

    aborted = not registers
    return DistillationReport(
        survivor_counts=counts,
        survivor_states=registers,
        survivor_overlaps=mean_overlaps,
        all_success_probability=joint_probability if exact else None,
        aborted=aborted,
        rounds=rounds,
        lineage=lineage,
        pairs=pairs,
    )


# ---------------------------------------------------------------------------
# Round counts
# ---------------------------------------------------------------------------

def auto_rounds(m: int, n: int) -> int:
    """floor(log_6(m / n)) computed in integers, clamped to at least 1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rounds = 0
    while n * 6 ** (rounds + 1) <= m:
        rounds += 1
    return max(rounds, 1)


def theorem_rounds(a: float, n: int, c: float = 1.0) -> int:
    """ceil(c * log_{5/4}(2n) + 2 / a^2)."""
    if not 0 < a <= 1:
        raise ValueError(f"a must lie in (0, 1], got {a}")
    return math.ceil(c * math.log(2 * n, 1.25) + 2.0 / a ** 2)


def relaxed_extra_rounds(a: float, n: int) -> int:
    """Extra rounds ceil(log2(8n (1-a)^2 / a^2)) for i.i.d. input overlaps of mean a."""
    if not 0 < a <= 1:
        raise ValueError(f"a must lie in (0, 1], got {a}")
    if a == 1:
        return 0
    return max(0, math.ceil(math.log2(8 * n * (1 - a) ** 2 / a ** 2)))


# ---------------------------------------------------------------------------
# Bounds and diagnostics
# ---------------------------------------------------------------------------

def overlap_bound(a: float, rounds: int) -> float:
    """1 - (1/2)(4/5)^(rounds - 2/a^2), clamped to [0, 1]."""
    if a <= 0 or a > 1:
        raise ValueError(f"a must lie in (0, 1], got {a}")
    exponent = rounds - 2.0 / a ** 2
    # (4/5)^exponent overflows only in the clamped-to-0 regime
    if exponent < -3000:
        return 0.0
    value = 1.0 - 0.5 * 0.8 ** exponent
    return float(min(max(value, 0.0), 1.0))


def overlap_recurrence(a: float, rounds: int) -> float:
    """Iterate gamma <- gamma (1 + gamma) / (1 + gamma^2) from gamma_0 = a."""
    gamma = a
    for _ in range(rounds):
        gamma = gamma * (1 + gamma) / (1 + gamma ** 2)
    return gamma


def pair_survivor_overlap(a1: float, a2: float) -> float:
    """Survivor overlap (a1 + a2 + 2 a1 a2) / (2 (1 + a1 a2)) for orthogonal noise."""
    return (a1 + a2 + 2 * a1 * a2) / (2 * (1 + a1 * a2))


def survival_bound(m: int, n: int) -> float:
    """
    Probability that no register survives, at most 2 exp(-n/12).

    Raises:
        BoundNotApplicable: when m < n or n < 12
    """
    if n < 12:
        raise BoundNotApplicable(f"Survival bound needs n >= 12, got n = {n}")
    if m < n:
        raise BoundNotApplicable(f"Survival bound needs m >= n, got m = {m}, n = {n}")
    return 2.0 * math.exp(-n / 12.0)


def survival_trial(m: int, rounds: int, p_success: float, rng: RngLike) -> bool:
    """
    Bernoulli round simulation with a fixed success probability per test.

    Returns:
        True when at least one register is left after all rounds
    """
    gen = as_generator(rng)
    alive = m
    for _ in range(rounds):
        alive = int(gen.binomial(alive // 2, p_success))
        if alive == 0:
            return False
    return True


def check_conditions(inputs: Sequence[StateVector], target: StateVector) -> Tuple[float, float]:
    """
    Distillation preconditions for pure inputs.

    Returns:
        (min_j |<psi_j|tau>|^2, max_{i != j} |<psi_i|(I - |tau><tau|)|psi_j>|^2)
    """
    psi = _stack(inputs, target)
    tau = target.amplitudes
    along = psi.conj() @ tau
    min_overlap = float(np.min(np.abs(along) ** 2))

    noise = psi - np.outer(psi @ tau.conj(), tau)
    gram = noise.conj() @ noise.T
    np.fill_diagonal(gram, 0.0)
    max_cross = float(np.max(np.abs(gram) ** 2)) if len(inputs) > 1 else 0.0
    return min(min_overlap, 1.0), max_cross


def _stack(inputs: Sequence[StateVector], target: StateVector) -> np.ndarray:
    for s in inputs:
        if s.dim != target.dim:
            raise DimensionMismatchError(
                f"Input dimension {s.dim} does not match target dimension {target.dim}"
            )
    return np.array([s.amplitudes for s in inputs])


def gram_schmidt_diagnostic(inputs: Sequence[StateVector], target: StateVector,
                            delta: Optional[float] = None) -> np.ndarray:
    """
    Residual masses of each input's noise part outside its own new direction.

    The noise part phi_j of input j is orthonormalized against phi_1..phi_{j-1};
    the returned entry j is the squared norm of its component inside their span.
    When delta is given and sqrt(delta) <= 1/(8m), each residual is checked
    against (2j - 1) * delta (1-indexed).
    """
    psi = _stack(inputs, target)
    tau = target.amplitudes
    m = len(inputs)
    basis: List[np.ndarray] = []
    residuals = np.zeros(m)

    for j in range(m):
        noise = psi[j] - np.vdot(tau, psi[j]) * tau
        norm = np.linalg.norm(noise)
        if norm < 1e-12:
            continue
        phi = noise / norm
        inside = sum((np.vdot(b, phi) * b for b in basis), np.zeros_like(phi))
        residuals[j] = float(np.vdot(inside, inside).real)
        fresh = phi - inside
        fresh_norm = np.linalg.norm(fresh)
        if fresh_norm > 1e-12:
            basis.append(fresh / fresh_norm)

    if delta is not None and math.sqrt(delta) <= 1.0 / (8 * m):
        limits = (2 * np.arange(1, m + 1) - 1) * delta
        if np.any(residuals > limits + 1e-15):
            worst = int(np.argmax(residuals - limits))
            raise InvalidStateError(
                f"Residual mass {residuals[worst]:.3g} of input {worst + 1} exceeds "
                f"{limits[worst]:.3g}"
            )
    return residuals


def orthogonal_noise_inputs(target: StateVector, a_values: Sequence[float],
                            rng: Optional[RngLike] = None,
                            noise_overlap: float = 0.0) -> List[StateVector]:
    """
    Pure inputs sqrt(a_j)|tau> + sqrt(1 - a_j)|phi_j> with prescribed overlaps.

    The noise vectors are orthonormal and orthogonal to tau. A positive
    noise_overlap mixes in a shared direction so that every pair has
    |<phi_i|phi_j>|^2 = noise_overlap.
    """
    m = len(a_values)
    shared = noise_overlap > 0
    needed = m + 1 + int(shared)
    if target.dim < needed:
        raise DimensionMismatchError(
            f"{m} orthogonal noise directions need dimension >= {needed}, got {target.dim}"
        )
    if not 0 <= noise_overlap < 1:
        raise ValueError(f"noise_overlap must lie in [0, 1), got {noise_overlap}")

    gen = as_generator(rng if rng is not None else RngStream(config.DEFAULT_SEED))
    tau = target.amplitudes
    cols = gen.standard_normal((target.dim, needed - 1)) + 1j * gen.standard_normal((target.dim, needed - 1))
    q, _ = np.linalg.qr(np.column_stack([tau, cols]))
    # column 0 of q spans tau; the rest are orthonormal and orthogonal to it
    noise = q[:, 1:m + 1]
    if shared:
        weight_sq = math.sqrt(noise_overlap) / (1 - math.sqrt(noise_overlap))
        noise = (noise + math.sqrt(weight_sq) * q[:, m + 1:m + 2]) / math.sqrt(1 + weight_sq)

    states = []
    for j, a in enumerate(a_values):
        if not 0 <= a <= 1:
            raise ValueError(f"Overlap {a} outside [0, 1]")
        vec = math.sqrt(a) * tau + math.sqrt(1 - a) * noise[:, j]
        states.append(StateVector.from_unnormalized(vec))
    return states
