"""
One-Query Synthesis Module
Twirl each register with a fresh Haar unitary, query the sign oracle of the
rotated target once, undo the twirl and distill the registers.
"""

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from . import config
from .distill import DistillationConfig, DistillationReport, check_conditions, distill
from .ensembles import RngLike, RngStream, as_generator, haar_unitary
from .phase_states import best_phase_oracle, build_phase_state
from .qcore import (
    DensityMatrix,
    DimensionMismatchError,
    StateVector,
    UnitaryMatrix,
    dm_overlap,
    overlap,
    pad_with_zeros,
    partial_trace_prefix,
)


@dataclass(frozen=True)
class OneQueryConfig:
    n_target: int
    m: int
    n_expanded: Optional[int] = None
    seed: int = config.DEFAULT_SEED
    rounds: Union[int, Literal["auto"]] = "auto"
    mode: Literal["sampled", "exact_conditional"] = "sampled"

    def __post_init__(self):
        if self.n_target < 1:
            raise ValueError(f"n_target must be >= 1, got {self.n_target}")
        if self.n_expanded is None:
            object.__setattr__(self, "n_expanded", self.n_target + config.DEFAULT_EXPANSION)
        if self.n_expanded < self.n_target:
            raise ValueError(
                f"n_expanded ({self.n_expanded}) must be >= n_target ({self.n_target})"
            )
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")

    def distillation(self) -> DistillationConfig:
        return DistillationConfig(m=self.m, rounds=self.rounds, mode=self.mode, n=self.n_target)


@dataclass
class OneQueryResult:
    """Synthesis output plus the per-register diagnostics."""

    output: Optional[DensityMatrix]
    report: DistillationReport
    register_overlaps: List[float] = field(default_factory=list)
    min_overlap: float = 0.0
    max_cross: float = 0.0
    output_overlap: Optional[float] = None

    @property
    def aborted(self) -> bool:
        return self.report.aborted

    @property
    def mean_register_overlap(self) -> float:
        return float(np.mean(self.register_overlaps))

    def cross_error_terms(self) -> Tuple[float, float]:
        """(8 m sqrt(delta), 8 m^2 sqrt(delta)) with delta the largest cross overlap."""
        m = len(self.register_overlaps)
        root = math.sqrt(max(self.max_cross, 0.0))
        return 8 * m * root, 8 * m * m * root

    def __iter__(self) -> Iterator:
        return iter((self.output, self.report))


def one_query_register(target_expanded: StateVector, U: UnitaryMatrix) -> StateVector:
    """U^dagger |p_f> with f(x) = sgn(Re <x|U|tau'>)."""
    if U.dim != target_expanded.dim:
        raise DimensionMismatchError(
            f"Unitary dimension {U.dim} does not match state dimension {target_expanded.dim}"
        )
    rotated = U.entries @ target_expanded.amplitudes
    f, _ = best_phase_oracle(rotated.real)
    phase_state = build_phase_state(f)
    return StateVector.from_unnormalized(U.entries.conj().T @ phase_state.amplitudes)


def one_query_synthesize(target: StateVector, cfg: OneQueryConfig,
                         rng: Optional[RngLike] = None,
                         unitaries: Optional[Sequence[UnitaryMatrix]] = None) -> OneQueryResult:
    """
    One-query state synthesis.

    Args:
        target: State on n_target qubits
        cfg: Register count, expansion and distillation settings
        rng: Stream for the twirls and the distillation; defaults to cfg.seed
        unitaries: Optional fixed twirls, one per register

    Returns:
        OneQueryResult; output is the first survivor reduced to the first
        n_target qubits, None on abort
    """
    if target.n_qubits != cfg.n_target:
        raise DimensionMismatchError(
            f"Target has {target.n_qubits} qubits, config expects {cfg.n_target}"
        )
    if unitaries is not None and len(unitaries) != cfg.m:
        raise ValueError(f"Expected {cfg.m} unitaries, got {len(unitaries)}")

    stream = rng if rng is not None else RngStream(cfg.seed)
    gen = as_generator(stream)
    expanded = pad_with_zeros(target, cfg.n_expanded)
    d_expanded = expanded.dim

    registers = []
    for j in range(cfg.m):
        U = unitaries[j] if unitaries is not None else haar_unitary(d_expanded, gen)
        registers.append(one_query_register(expanded, U))

    register_overlaps = [overlap(r, expanded) for r in registers]
    min_overlap, max_cross = check_conditions(registers, expanded)
    report = distill(registers, expanded, cfg.distillation(), gen)

    output = None
    output_overlap = None
    if not report.aborted:
        output = partial_trace_prefix(report.output_state(), cfg.n_target)
        output_overlap = dm_overlap(output, target)
    else:
        logger.debug("one-query synthesis aborted: no register survived")

    return OneQueryResult(
        output=output,
        report=report,
        register_overlaps=register_overlaps,
        min_overlap=min_overlap,
        max_cross=max_cross,
        output_overlap=output_overlap,
    )
