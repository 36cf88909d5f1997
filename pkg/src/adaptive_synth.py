"""
Adaptive Synthesis Module
O(n)-query adaptive baseline: build the QSample state one qubit at a time
from rounded conditional marginals, then apply rounded phases.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from .qcore import StateVector


@dataclass(frozen=True)
class PrecisionPolicy:
    """Bits of precision in the oracle's answers; None disables rounding."""

    prob_bits: Optional[int] = 32
    phase_bits: Optional[int] = 32

    def __post_init__(self):
        for name in ("prob_bits", "phase_bits"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")

    @classmethod
    def exact(cls) -> "PrecisionPolicy":
        return cls(prob_bits=None, phase_bits=None)


def _round_to_bits(value: np.ndarray, bits: Optional[int]) -> np.ndarray:
    if bits is None:
        return value
    scale = float(1 << bits)
    return np.round(value * scale) / scale


def _rounded_conditionals(marginal: np.ndarray, split: np.ndarray,
                          bits: Optional[int]) -> np.ndarray:
    """
    Pr[next bit = b | prefix y] for every prefix, rounded then renormalized.

    Args:
        marginal: Pr[prefix = y], shape (2^k,)
        split: Pr[prefix = y, next = b], shape (2^k, 2)
    """
    cond = np.full_like(split, 0.5)
    live = marginal > 0
    cond[live] = split[live] / marginal[live, None]
    cond = _round_to_bits(cond, bits)
    totals = cond.sum(axis=1)
    # rounding can only zero one side, never both
    return cond / totals[:, None]


def qsample_state(target: StateVector, policy: Optional[PrecisionPolicy] = None) -> StateVector:
    """sum_x sqrt(p_x) |x> built stage by stage from conditional marginals."""
    policy = policy or PrecisionPolicy()
    probs = np.abs(target.amplitudes) ** 2
    n = target.n_qubits

    amps = np.ones(1)
    for k in range(n):
        marginal = probs.reshape(1 << k, -1).sum(axis=1)
        split = probs.reshape(1 << k, 2, -1).sum(axis=2)
        cond = _rounded_conditionals(marginal, split, policy.prob_bits)
        amps = (amps[:, None] * np.sqrt(cond)).reshape(-1)
    return StateVector(amps.astype(complex))


def synthesize_adaptive(target: StateVector,
                        policy: Optional[PrecisionPolicy] = None) -> Tuple[StateVector, int]:
    """
    Adaptive state synthesis with finite-precision oracle answers.

    Args:
        target: State to synthesize
        policy: Rounding policy for conditional probabilities and phases

    Returns:
        (output, query_count) with query_count = 2n + 2
    """
    policy = policy or PrecisionPolicy()
    n = target.n_qubits
    qsample = qsample_state(target, policy)

    phases = np.angle(target.amplitudes)
    if policy.phase_bits is not None:
        turns = np.round(phases / (2 * np.pi) * (1 << policy.phase_bits)) % (1 << policy.phase_bits)
        phases = 2 * np.pi * turns / (1 << policy.phase_bits)
    output = StateVector(qsample.amplitudes * np.exp(1j * phases))

    # one compute and one uncompute query per stage, two for the phase pass
    query_count = 2 * n + 2
    logger.debug(f"adaptive synthesis on {n} qubits used {query_count} queries")
    return output, query_count
