"""
Experiment Harness Module
Typed experiment configs, seeded batch execution over a worker pool, summary
statistics and CSV / JSON reports.

Trial i of a run always draws from RngStream(seed, i), so per-trial rows do
not depend on the number of workers.
"""

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Type, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from tqdm import tqdm

from . import __version__, config
from .adaptive_synth import PrecisionPolicy, synthesize_adaptive
from .classical_search import (
    NoWitness,
    amplify,
    count_solutions,
    lex_first_extract,
    random_planted_3sat,
    search_to_decision,
    to_bits,
)
from .config import settings
from .distill import (
    BoundNotApplicable,
    DistillationConfig,
    auto_rounds,
    distill,
    orthogonal_noise_inputs,
    overlap_bound,
    survival_bound,
    survival_trial,
)
from .ensembles import RngStream, haar_amplitudes, haar_state, random_twirl
from .one_query import OneQueryConfig, one_query_synthesize
from .parsers import read_dimacs, read_hamiltonian
from .phase_states import best_phase_oracle, build_phase_state
from .qcore import Abort, DensityMatrix, overlap
from .qma_search import (
    LocalHamiltonian,
    normalize_hamiltonian,
    qma_exp_search,
    qma_search_one_query,
    random_local_hamiltonian,
    yes_instance,
)
from .two_query import empirical_wasserstein2, sorted_abs_distance, two_query_synthesize
from .utils import (
    config_hash,
    fit_constant,
    fit_power_law,
    format_time,
    print_section_header,
    save_results,
    wilson_interval,
)

# Stream id reserved for per-run fixtures (instances, fixed targets)
INSTANCE_STREAM = 2 ** 31 - 1

Rounds = Union[int, Literal["auto"]]


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

class ExperimentConfig(BaseModel):
    """Parameters shared by every subcommand."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    subcommand: str
    seed: int = Field(default=config.DEFAULT_SEED, ge=0, lt=2 ** 64)
    trials: int = Field(default=100, ge=1)
    out: Optional[Path] = None
    workers: Optional[int] = Field(default=None, ge=1)
    progress: bool = False

    def snapshot(self) -> Dict[str, Any]:
        """Everything that determines the per-trial rows."""
        return self.model_dump(mode="json", exclude={"out", "workers", "progress"})


class AdaptiveExperiment(ExperimentConfig):
    subcommand: Literal["synth-adaptive"] = "synth-adaptive"
    n: int = Field(default=5, ge=1, le=config.MAX_STATE_QUBITS)
    prob_bits: int = Field(default=24, ge=1, le=52)
    phase_bits: int = Field(default=24, ge=1, le=52)
    exact: bool = False


class OneQueryExperiment(ExperimentConfig):
    subcommand: Literal["synth-one"] = "synth-one"
    n: int = Field(default=4, ge=1, le=config.MAX_DENSITY_QUBITS)
    n_expanded: Optional[int] = Field(default=None, ge=1, le=config.MAX_DENSITY_QUBITS)
    m: int = Field(default=96, ge=2)
    rounds: Rounds = "auto"
    mode: Literal["sampled", "exact_conditional"] = "sampled"

    @model_validator(mode="after")
    def _check_expansion(self):
        expanded = self.n_expanded if self.n_expanded is not None else self.n + config.DEFAULT_EXPANSION
        if expanded < self.n:
            raise ValueError(f"n_expanded ({expanded}) must be >= n ({self.n})")
        if expanded > config.MAX_DENSITY_QUBITS:
            raise ValueError(
                f"n_expanded ({expanded}) exceeds the density-matrix cap of "
                f"{config.MAX_DENSITY_QUBITS}"
            )
        return self


class TwoQueryExperiment(ExperimentConfig):
    subcommand: Literal["synth-two"] = "synth-two"
    n: int = Field(default=4, ge=1, le=config.MAX_STATE_QUBITS)
    n_expanded: Optional[int] = Field(default=None, ge=1, le=config.MAX_STATE_QUBITS)
    phase_bits: int = Field(default=config.DEFAULT_PHASE_BITS, ge=1, le=62)

    @model_validator(mode="after")
    def _check_expansion(self):
        expanded = self.n_expanded if self.n_expanded is not None else self.n + config.DEFAULT_EXPANSION
        if not self.n <= expanded <= config.MAX_STATE_QUBITS:
            raise ValueError(
                f"n_expanded ({expanded}) must lie in [{self.n}, {config.MAX_STATE_QUBITS}]"
            )
        return self


class DistillExperiment(ExperimentConfig):
    subcommand: Literal["distill"] = "distill"
    n: int = Field(default=2, ge=1, le=config.MAX_DENSITY_QUBITS)
    m: int = Field(default=8, ge=2)
    a: float = Field(default=0.5, gt=0, le=1)
    rounds: Rounds = "auto"
    mode: Literal["sampled", "exact_conditional"] = "sampled"
    keep: Literal["first", "random"] = "first"
    carry_unpaired: bool = False
    noise: Literal["auto", "orthogonal", "depolarized"] = "auto"
    noise_overlap: float = Field(default=0.0, ge=0, lt=1)
    # Bernoulli round simulation for the survival bound, beyond the dense cap
    survival_m: Optional[int] = Field(default=None, ge=2)
    survival_n: Optional[int] = Field(default=None, ge=12)
    survival_p: float = Field(default=0.5, gt=0, le=1)

    @model_validator(mode="after")
    def _check_noise(self):
        if (self.survival_m is None) != (self.survival_n is None):
            raise ValueError("survival_m and survival_n must be given together")
        if self.survival_m is not None and self.survival_m < self.survival_n:
            raise ValueError(
                f"survival_m ({self.survival_m}) must be >= survival_n ({self.survival_n})"
            )
        needed = self.m + 1 + int(self.noise_overlap > 0)
        if self.noise == "orthogonal" and (1 << self.n) < needed:
            raise ValueError(
                f"orthogonal noise for m = {self.m} needs dimension >= {needed}, "
                f"n = {self.n} gives {1 << self.n}"
            )
        if self.n == 1 and self.noise != "orthogonal":
            raise ValueError("depolarized noise needs n >= 2 to leave room outside the target")
        return self


class QmaExperiment(ExperimentConfig):
    subcommand: Literal["qma"] = "qma"
    hamiltonian: Optional[Path] = None
    n: int = Field(default=2, ge=1, le=config.MAX_DENSITY_QUBITS)
    k: int = Field(default=2, ge=1)
    a: float = Field(default=0.1, ge=0, lt=1)
    b: float = Field(default=0.2, gt=0, le=1)
    m_bits: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_instance(self):
        if not self.b > self.a:
            raise ValueError(f"thresholds need b > a, got a = {self.a}, b = {self.b}")
        if self.hamiltonian is None and self.k > self.n:
            raise ValueError(f"locality k = {self.k} exceeds n = {self.n}")
        return self


class QmaExpExperiment(QmaExperiment):
    subcommand: Literal["qma-exp"] = "qma-exp"
    gamma: float = Field(default=0.125, gt=0, lt=0.25)


class ExtractExperiment(ExperimentConfig):
    subcommand: Literal["extract"] = "extract"
    cnf: Optional[Path] = None
    m: int = Field(default=12, ge=3, le=config.MAX_PIPELINE_VARS)
    ratio: float = Field(default=4.0, gt=0)
    mode: Literal["search", "amplify", "lex"] = "search"
    t: int = Field(default=0, ge=0)
    repetition_constant: float = Field(default=config.DEFAULT_REPETITION_CONSTANT, gt=0)
    isolate: bool = True


class EnsemblesCheckExperiment(ExperimentConfig):
    subcommand: Literal["ensembles-check"] = "ensembles-check"
    n: int = Field(default=2, ge=1, le=config.MAX_DENSITY_QUBITS)
    family: Optional[Literal["clifford", "haar"]] = None
    theta: float = Field(default=0.5, gt=0, lt=1)
    gamma: float = Field(default=0.125, gt=0, lt=0.25)


class WassersteinCheckExperiment(ExperimentConfig):
    subcommand: Literal["wasserstein-check"] = "wasserstein-check"
    log_dims: List[int] = Field(default_factory=lambda: [8, 10, 12])

    @field_validator("log_dims")
    @classmethod
    def _check_dims(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("log_dims must not be empty")
        if any(not 2 <= L <= 16 for L in value):
            raise ValueError("each log2 dimension must lie in [2, 16]")
        return sorted(set(value))


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _stream(cfg: ExperimentConfig, index: int) -> RngStream:
    return RngStream(cfg.seed, index)


def _instance_stream(cfg: ExperimentConfig) -> RngStream:
    return RngStream(cfg.seed, INSTANCE_STREAM)


def _rate(successes: int, trials: int) -> Dict[str, Any]:
    low, high = wilson_interval(successes, trials)
    return {
        "successes": int(successes),
        "trials": int(trials),
        "rate": successes / trials if trials else None,
        "wilson_low": low,
        "wilson_high": high,
    }


def _finite_mean(values: pd.Series) -> Optional[float]:
    clean = values.dropna()
    return float(clean.mean()) if len(clean) else None


def _finite_min(values: pd.Series) -> Optional[float]:
    clean = values.dropna()
    return float(clean.min()) if len(clean) else None


def _clean(value: Any) -> Any:
    """JSON-safe copy: NaN becomes None, numpy scalars become Python scalars."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


# ---------------------------------------------------------------------------
# synth-adaptive
# ---------------------------------------------------------------------------

def _adaptive_trial(cfg: AdaptiveExperiment, context: Any, index: int) -> Dict[str, Any]:
    stream = _stream(cfg, index)
    target = haar_state(1 << cfg.n, stream.child(0))
    policy = PrecisionPolicy.exact() if cfg.exact else PrecisionPolicy(cfg.prob_bits, cfg.phase_bits)
    output, queries = synthesize_adaptive(target, policy)
    return {"trial": index, "infidelity": 1.0 - overlap(output, target), "query_count": queries}


def _adaptive_summary(cfg: AdaptiveExperiment, context: Any, table: pd.DataFrame) -> Dict[str, Any]:
    return {
        "mean_infidelity": float(table["infidelity"].mean()),
        "max_infidelity": float(table["infidelity"].max()),
        "query_count": int(table["query_count"].iloc[0]),
    }


# ---------------------------------------------------------------------------
# synth-one
# ---------------------------------------------------------------------------

def _one_query_trial(cfg: OneQueryExperiment, context: Any, index: int) -> Dict[str, Any]:
    stream = _stream(cfg, index)
    target = haar_state(1 << cfg.n, stream.child(0))
    oq = OneQueryConfig(n_target=cfg.n, m=cfg.m, n_expanded=cfg.n_expanded, seed=cfg.seed,
                        rounds=cfg.rounds, mode=cfg.mode)
    result = one_query_synthesize(target, oq, stream.child(1))
    d_expanded = 1 << oq.n_expanded
    conditions = result.min_overlap >= 1 / 8 and result.max_cross <= d_expanded ** -0.25
    final = result.report.final_overlap
    linear_term, quadratic_term = result.cross_error_terms()
    return {
        "trial": index,
        "aborted": result.aborted,
        "output_overlap": result.output_overlap if result.output_overlap is not None else float("nan"),
        "final_overlap": final,
        "mean_register_overlap": result.mean_register_overlap,
        "min_overlap": result.min_overlap,
        "max_cross": result.max_cross,
        "cross_term_linear": linear_term,
        "cross_term_quadratic": quadratic_term,
        "conditions_hold": conditions,
        "improved": (not result.aborted) and final > result.mean_register_overlap,
    }


def _one_query_summary(cfg: OneQueryExperiment, context: Any, table: pd.DataFrame) -> Dict[str, Any]:
    alive = table[~table["aborted"]]
    return {
        "abort": _rate(int(table["aborted"].sum()), len(table)),
        "conditions": _rate(int(table["conditions_hold"].sum()), len(table)),
        "improvement": _rate(int(alive["improved"].sum()), len(alive)),
        "mean_register_overlap": float(table["mean_register_overlap"].mean()),
        "mean_output_overlap": _finite_mean(table["output_overlap"]),
    }


# ---------------------------------------------------------------------------
# synth-two
# ---------------------------------------------------------------------------

def _two_query_trial(cfg: TwoQueryExperiment, context: Any, index: int) -> Dict[str, Any]:
    stream = _stream(cfg, index)
    target = haar_state(1 << cfg.n, stream.child(0))
    result = two_query_synthesize(target, cfg.n_expanded, cfg.phase_bits, stream.child(1))
    return {
        "trial": index,
        "fidelity": result.fidelity,
        "infidelity": result.infidelity,
        "expanded_fidelity": result.expanded_fidelity,
        "sorted_distance": result.sorted_distance,
        "ancilla_clean": result.ancilla_clean,
    }


def _two_query_summary(cfg: TwoQueryExperiment, context: Any, table: pd.DataFrame) -> Dict[str, Any]:
    median_infidelity = float(table["infidelity"].median())
    median_distance = float(table["sorted_distance"].median())
    return {
        "median_infidelity": median_infidelity,
        "median_sorted_distance": median_distance,
        "infidelity_over_distance_sq": median_infidelity / median_distance ** 2
        if median_distance > 0 else None,
        "all_ancillas_clean": bool(table["ancilla_clean"].all()),
    }


# ---------------------------------------------------------------------------
# distill
# ---------------------------------------------------------------------------

def _distill_inputs(cfg: DistillExperiment, target, stream: RngStream):
    dim = target.dim
    needed = cfg.m + 1 + int(cfg.noise_overlap > 0)
    if cfg.noise == "orthogonal" or (cfg.noise == "auto" and dim >= needed):
        return orthogonal_noise_inputs(target, [cfg.a] * cfg.m, stream, cfg.noise_overlap)
    proj = np.outer(target.amplitudes, target.amplitudes.conj())
    rho = DensityMatrix(cfg.a * proj + (1 - cfg.a) * (np.eye(dim) - proj) / (dim - 1))
    return [rho] * cfg.m


def _distill_trial(cfg: DistillExperiment, context: Any, index: int) -> Dict[str, Any]:
    stream = _stream(cfg, index)
    target = haar_state(1 << cfg.n, stream.child(0))
    inputs = _distill_inputs(cfg, target, stream.child(1))
    dc = DistillationConfig(m=cfg.m, rounds=cfg.rounds, mode=cfg.mode, keep=cfg.keep,
                            carry_unpaired=cfg.carry_unpaired)
    report = distill(inputs, target, dc, stream.child(2))
    row = {
        "trial": index,
        "aborted": report.aborted,
        "rounds": report.rounds,
        "final_count": report.survivor_counts[-1],
        "final_overlap": report.final_overlap,
        "all_success_probability": report.all_success_probability
        if report.all_success_probability is not None else float("nan"),
    }
    if cfg.survival_m is not None:
        rounds = auto_rounds(cfg.survival_m, cfg.survival_n)
        row["bernoulli_survived"] = survival_trial(cfg.survival_m, rounds, cfg.survival_p, stream.child(3))
    return row


def _distill_summary(cfg: DistillExperiment, context: Any, table: pd.DataFrame) -> Dict[str, Any]:
    rounds = int(table["rounds"].iloc[0])
    survival, bernoulli_abort = None, None
    if cfg.survival_m is not None:
        try:
            survival = survival_bound(cfg.survival_m, cfg.survival_n)
        except BoundNotApplicable as e:
            logger.warning(f"survival bound skipped: {e.message}")
        bernoulli_abort = _rate(int((~table["bernoulli_survived"].astype(bool)).sum()), len(table))
    return {
        "abort": _rate(int(table["aborted"].sum()), len(table)),
        "rounds": rounds,
        "mean_final_overlap": _finite_mean(table["final_overlap"]),
        "min_final_overlap": _finite_min(table["final_overlap"]),
        "overlap_bound": overlap_bound(cfg.a, rounds),
        "survival_bound": survival,
        "bernoulli_abort": bernoulli_abort,
    }


# ---------------------------------------------------------------------------
# qma / qma-exp
# ---------------------------------------------------------------------------

def _qma_prepare(cfg: QmaExperiment) -> LocalHamiltonian:
    if cfg.hamiltonian is not None:
        return normalize_hamiltonian(read_hamiltonian(cfg.hamiltonian))
    raw = random_local_hamiltonian(cfg.n, cfg.k, _instance_stream(cfg), a=cfg.a, b=cfg.b)
    return yes_instance(raw, cfg.a, cfg.b)


def _qma_trial(cfg: QmaExperiment, H: LocalHamiltonian, index: int) -> Dict[str, Any]:
    outcome = qma_search_one_query(H, _stream(cfg, index), cfg.m_bits)
    return {
        "trial": index,
        "aborted": outcome.aborted,
        "theta": outcome.estimate.theta,
        "witness_energy": outcome.witness_energy if outcome.witness_energy is not None else float("nan"),
        "candidate_low_mass": outcome.candidate_low_mass,
    }


def _qma_summary(cfg: QmaExperiment, H: LocalHamiltonian, table: pd.DataFrame) -> Dict[str, Any]:
    accepted = int((~table["aborted"]).sum())
    return {
        "non_abort": _rate(accepted, len(table)),
        "conditional_mean_energy": _finite_mean(table["witness_energy"]),
        "max_witness_energy": float(table["witness_energy"].max()) if accepted else None,
        "energy_bound": (H.a + H.b) / 2,
        "ground_energy": H.ground_energy,
        "a": H.a,
        "b": H.b,
    }


def _qma_exp_trial(cfg: QmaExpExperiment, H: LocalHamiltonian, index: int) -> Dict[str, Any]:
    outcome = qma_exp_search(H, _stream(cfg, index))
    return {
        "trial": index,
        "ground_overlap": outcome.ground_overlap,
        "low_energy_mass": outcome.candidate_low_mass,
        "good": outcome.ground_overlap >= 0.5 - 2 * cfg.gamma,
    }


def _qma_exp_summary(cfg: QmaExpExperiment, H: LocalHamiltonian, table: pd.DataFrame) -> Dict[str, Any]:
    return {
        "good_overlap": _rate(int(table["good"].sum()), len(table)),
        "floor": cfg.gamma / 8,
        "mean_ground_overlap": float(table["ground_overlap"].mean()),
        "mean_low_energy_mass": float(table["low_energy_mass"].mean()),
    }


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------

def _extract_prepare(cfg: ExtractExperiment):
    if cfg.cnf is not None:
        formula = read_dimacs(cfg.cnf)
    else:
        formula, _ = random_planted_3sat(cfg.m, cfg.ratio, _instance_stream(cfg))
    return formula, count_solutions(formula)


def _extract_trial(cfg: ExtractExperiment, context, index: int) -> Dict[str, Any]:
    formula, _ = context
    stream = _stream(cfg, index)
    if cfg.mode == "search":
        outcome = search_to_decision(formula, stream, isolate=cfg.isolate)
    elif cfg.mode == "amplify":
        outcome = amplify(formula, cfg.t, stream, cfg.repetition_constant, isolate=cfg.isolate)
    else:
        try:
            outcome = lex_first_extract(formula)
        except NoWitness as e:
            outcome = Abort(e.message)
    success = not isinstance(outcome, Abort)
    return {
        "trial": index,
        "success": success,
        "witness": to_bits(outcome, formula.num_vars) if success else "",
        "verified": success and formula.evaluate(outcome),
    }


def _extract_summary(cfg: ExtractExperiment, context, table: pd.DataFrame) -> Dict[str, Any]:
    formula, n_solutions = context
    m = formula.num_vars
    successes = int(table["success"].sum())
    rate = successes / len(table)
    return {
        "success": _rate(successes, len(table)),
        "num_vars": m,
        "solution_count": n_solutions,
        "fitted_constant": rate * m,
        "failure_target": 2.0 ** -cfg.t if cfg.mode == "amplify" else None,
        "all_verified": bool(table.loc[table["success"], "verified"].all()),
    }


# ---------------------------------------------------------------------------
# ensembles-check
# ---------------------------------------------------------------------------

def _ensembles_prepare(cfg: EnsemblesCheckExperiment):
    return haar_state(1 << cfg.n, _instance_stream(cfg))


def _ensembles_trial(cfg: EnsemblesCheckExperiment, tau, index: int) -> Dict[str, Any]:
    gen = _stream(cfg, index).generator()
    rotated = random_twirl(cfg.n, gen, cfg.family).entries @ tau.amplitudes
    value = float(abs(rotated[0]) ** 2)
    f, _ = best_phase_oracle(rotated.real)
    phase_overlap = float(abs(np.vdot(rotated, build_phase_state(f).amplitudes)) ** 2)
    return {
        "trial": index,
        "value": value,
        "pz_hit": value >= cfg.theta / tau.dim,
        "phase_overlap": phase_overlap,
        "phase_hit": phase_overlap >= cfg.gamma,
    }


def _ensembles_summary(cfg: EnsemblesCheckExperiment, tau, table: pd.DataFrame) -> Dict[str, Any]:
    d = tau.dim
    values = table["value"].to_numpy()
    return {
        "family": cfg.family or settings.TWIRL,
        "second_moment": float(values.mean()),
        "second_target": 1.0 / d,
        "fourth_moment": float(np.mean(values ** 2)),
        "fourth_target": 2.0 / (d * (d + 1)),
        "paley_zygmund": _rate(int(table["pz_hit"].sum()), len(table)),
        "paley_zygmund_floor": (1 - cfg.theta) ** 2 / 2,
        "phase_overlap": _rate(int(table["phase_hit"].sum()), len(table)),
        "phase_overlap_floor": 0.5 - 2 * cfg.gamma,
    }


# ---------------------------------------------------------------------------
# wasserstein-check
# ---------------------------------------------------------------------------

def _wasserstein_trial(cfg: WassersteinCheckExperiment, context: Any, index: int) -> Dict[str, Any]:
    stream = _stream(cfg, index)
    row: Dict[str, Any] = {"trial": index}
    for j, L in enumerate(cfg.log_dims):
        d = 1 << L
        gen = stream.child(j).generator()
        u = haar_amplitudes(d, gen)
        v = haar_amplitudes(d, gen)
        row[f"w2sq_{d}"] = empirical_wasserstein2(np.abs(u) * np.sqrt(d)) ** 2
        row[f"sorted_distance_{d}"] = sorted_abs_distance(u, v)
    return row


def _wasserstein_summary(cfg: WassersteinCheckExperiment, context: Any,
                         table: pd.DataFrame) -> Dict[str, Any]:
    dims = [1 << L for L in cfg.log_dims]
    mean_w2sq = [float(table[f"w2sq_{d}"].mean()) for d in dims]
    medians = [float(table[f"sorted_distance_{d}"].median()) for d in dims]
    summary: Dict[str, Any] = {
        "dims": dims,
        "mean_w2sq": mean_w2sq,
        "w2sq_constant": fit_constant(mean_w2sq, [math.log(d) / d for d in dims]),
        "median_sorted_distance": medians,
    }
    if len(dims) > 1:
        summary["sorted_distance_fit"] = fit_power_law(dims, medians)
    return summary


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    config_cls: Type[ExperimentConfig]
    trial: Callable[[Any, Any, int], Dict[str, Any]]
    summarize: Callable[[Any, Any, pd.DataFrame], Dict[str, Any]]
    prepare: Optional[Callable[[Any], Any]] = None


EXPERIMENTS: Dict[str, Experiment] = {
    "synth-adaptive": Experiment(AdaptiveExperiment, _adaptive_trial, _adaptive_summary),
    "synth-one": Experiment(OneQueryExperiment, _one_query_trial, _one_query_summary),
    "synth-two": Experiment(TwoQueryExperiment, _two_query_trial, _two_query_summary),
    "distill": Experiment(DistillExperiment, _distill_trial, _distill_summary),
    "qma": Experiment(QmaExperiment, _qma_trial, _qma_summary, _qma_prepare),
    "qma-exp": Experiment(QmaExpExperiment, _qma_exp_trial, _qma_exp_summary, _qma_prepare),
    "extract": Experiment(ExtractExperiment, _extract_trial, _extract_summary, _extract_prepare),
    "ensembles-check": Experiment(EnsemblesCheckExperiment, _ensembles_trial,
                                  _ensembles_summary, _ensembles_prepare),
    "wasserstein-check": Experiment(WassersteinCheckExperiment, _wasserstein_trial,
                                    _wasserstein_summary),
}


def build_config(subcommand: str, **params: Any) -> ExperimentConfig:
    """
    Validated config for a subcommand.

    Raises:
        KeyError: unknown subcommand
        pydantic.ValidationError: invalid parameters
    """
    if subcommand not in EXPERIMENTS:
        raise KeyError(f"Unknown subcommand {subcommand!r}")
    return EXPERIMENTS[subcommand].config_cls(**params)


@dataclass
class RunRecord:
    """Config snapshot, per-trial rows and summary statistics of one run."""

    subcommand: str
    config: Dict[str, Any]
    config_hash: str
    seed: int
    trials: pd.DataFrame
    summary: Dict[str, Any]
    wall_clock: float
    version: str = __version__

    def summary_json(self) -> Dict[str, Any]:
        return _clean({
            "subcommand": self.subcommand,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "trials": len(self.trials),
            "wall_clock_seconds": self.wall_clock,
            "summary": self.summary,
        })

    def save(self, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
        """Write <subcommand>.csv and <subcommand>_summary.json into out_dir."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{self.subcommand}.csv"
        json_path = out_dir / f"{self.subcommand}_summary.json"
        self.trials.to_csv(csv_path, index=False)
        save_results(self.summary_json(), str(json_path))
        logger.info(f"Per-trial rows saved to {csv_path}")
        return csv_path, json_path

    def echo(self):
        print_section_header(f"{self.subcommand} ({len(self.trials)} trials, seed {self.seed})")
        for key, value in _clean(self.summary).items():
            print(f"{key}: {value}")
        print(f"config_hash: {self.config_hash}")


def run(cfg: ExperimentConfig, echo: bool = True) -> RunRecord:
    """
    Execute one experiment.

    Args:
        cfg: Validated experiment config
        echo: Print the summary to standard output

    Returns:
        RunRecord; files are written when cfg.out is set
    """
    experiment = EXPERIMENTS[cfg.subcommand]
    workers = cfg.workers or settings.WORKERS
    logger.info(f"Running {cfg.subcommand}: {cfg.trials} trials, seed {cfg.seed}, {workers} worker(s)")

    start = time.time()
    context = experiment.prepare(cfg) if experiment.prepare is not None else None
    indices = tqdm(range(cfg.trials), desc=cfg.subcommand, disable=not cfg.progress)
    if workers == 1:
        rows = [experiment.trial(cfg, context, i) for i in indices]
    else:
        rows = Parallel(n_jobs=workers)(delayed(experiment.trial)(cfg, context, i) for i in indices)
    table = pd.DataFrame(rows)
    summary = experiment.summarize(cfg, context, table)

    snapshot = cfg.snapshot()
    record = RunRecord(
        subcommand=cfg.subcommand,
        config=snapshot,
        config_hash=config_hash(snapshot),
        seed=cfg.seed,
        trials=table,
        summary=summary,
        wall_clock=time.time() - start,
    )
    logger.info(f"{cfg.subcommand} finished in {format_time(record.wall_clock)}")
    if cfg.out is not None:
        record.save(cfg.out)
    if echo:
        record.echo()
    return record
