"""
Phase States Module
Phase-state construction, the best phase oracle for a real vector and the
l1-overlap facts used by the synthesis algorithms.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger

from . import config
from .config import settings
from .ensembles import RngLike, as_generator, random_twirl
from .qcore import CapExceededError, InvalidStateError, StateVector, _qubits_for
from .utils import wilson_interval


@dataclass(frozen=True)
class PhaseOracle:
    """Boolean function f: {0,1}^n -> {0,1} stored as a dense truth table."""

    n_bits: int
    table: np.ndarray

    def __post_init__(self):
        if self.n_bits > config.MAX_ORACLE_BITS:
            raise CapExceededError(
                f"{self.n_bits}-bit oracle exceeds the truth-table cap of {config.MAX_ORACLE_BITS}"
            )
        table = np.asarray(self.table, dtype=np.uint8).reshape(-1)
        if table.size != 1 << self.n_bits:
            raise InvalidStateError(
                f"Truth table has {table.size} entries, expected {1 << self.n_bits}"
            )
        if np.any(table > 1):
            raise InvalidStateError("Truth table entries must be 0 or 1")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def __call__(self, x: int) -> int:
        return int(self.table[x])

    @classmethod
    def from_signs(cls, values: np.ndarray) -> "PhaseOracle":
        """f(x) = 0 where values[x] >= 0, else 1 (zero counts as positive)."""
        values = np.asarray(values, dtype=float).reshape(-1)
        return cls(_qubits_for(values.size), (values < 0).astype(np.uint8))


def build_phase_state(f: PhaseOracle) -> StateVector:
    """2^{-n/2} sum_x (-1)^{f(x)} |x>."""
    signs = 1.0 - 2.0 * f.table.astype(float)
    return StateVector(signs / np.sqrt(signs.size))


def best_phase_oracle(a: np.ndarray) -> Tuple[PhaseOracle, float]:
    """
    Phase oracle maximizing |<a|p_f>| for a real vector a.

    Returns:
        (f, overlap) with overlap = ||a||_1 / sqrt(d)
    """
    a = np.asarray(a)
    if np.iscomplexobj(a):
        if np.max(np.abs(a.imag), initial=0.0) > 0:
            raise ValueError("best_phase_oracle expects a real vector")
        a = a.real
    f = PhaseOracle.from_signs(a)
    return f, float(np.sum(np.abs(a)) / np.sqrt(a.size))


def l4_lower_bound(a: np.ndarray) -> float:
    """Hoelder bound 1 / ||a||_4^2, never above ||a||_1 for a unit vector."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    norm_sq = float(np.vdot(a, a).real)
    if abs(norm_sq - 1.0) > settings.NORM_TOL:
        raise InvalidStateError(f"Expected a unit vector, |a|^2 = {norm_sq:.12g}")
    return float(1.0 / np.sqrt(np.sum(np.abs(a) ** 4)))


def phase_overlap_statistic(tau: StateVector, gamma: float, trials: int, rng: RngLike,
                            family: Optional[str] = None) -> Dict[str, float]:
    """
    Rate at which a twirled state has a good phase-state overlap.

    For each trial draws C from the twirl family, sets f(x) = sgn(Re <x|C|tau>)
    and records whether |<C tau|p_f>|^2 >= gamma.

    Returns:
        Dictionary with the rate, its Wilson interval and the floor 1/2 - 2 gamma
    """
    gen = as_generator(rng)
    n = tau.n_qubits
    hits = 0
    for _ in range(trials):
        rotated = random_twirl(n, gen, family).entries @ tau.amplitudes
        f, _ = best_phase_oracle(rotated.real)
        p_f = build_phase_state(f).amplitudes
        if abs(np.vdot(rotated, p_f)) ** 2 >= gamma:
            hits += 1

    low, high = wilson_interval(hits, trials)
    logger.debug(f"phase overlap rate at n={n}, gamma={gamma}: {hits}/{trials}")
    return {
        "rate": hits / trials if trials else 0.0,
        "wilson_low": low,
        "wilson_high": high,
        "floor": 0.5 - 2 * gamma,
    }
