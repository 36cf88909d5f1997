"""
Configuration file for the qsynth project.
Contains the desk-scale caps, defaults and the runtime numeric policy.
"""

from pathlib import Path
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Project root directory
PROJECT_ROOT = Path(__file__).parent.parent

# Directory paths
RESULTS_DIR = PROJECT_ROOT / "results"
DATA_DIR = PROJECT_ROOT / "data"

# Desk-scale caps
MAX_STATE_QUBITS = 12  # statevectors
MAX_DENSITY_QUBITS = 8  # density matrices
MAX_ORACLE_BITS = 24  # dense phase-oracle truth tables
MAX_CNF_VARS = 24  # exhaustive witness search
MAX_TRUTH_TABLE_VARS = 20  # qcma oracle truth tables
MAX_PIPELINE_VARS = 16  # full search-to-decision pipeline
MAX_FILTER_EXPONENT = 2 ** 20  # dense (1 - H)^p by repeated squaring

# Algorithm defaults
DEFAULT_SEED = 20240229
DEFAULT_PHASE_BITS = 32
DEFAULT_EXPANSION = 4  # n_expanded = n_target + DEFAULT_EXPANSION
DEFAULT_REPETITION_CONSTANT = 2.0  # amplify: ceil(c * (m + t)) runs
ENERGY_EXTRA_BITS = 5  # m_bits = ceil(log2(1 / delta)) + ENERGY_EXTRA_BITS

# Statistics
CONFIDENCE_LEVEL = 0.95

# Logging settings
LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - {name} - {level} - {message}"


class Settings(BaseSettings):
    """Runtime settings, overridable through QSYNTH_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="QSYNTH_", env_file=".env", case_sensitive=False, extra="ignore"
    )

    # Numeric policy
    NORM_TOL: float = 1e-9
    UNITARY_TOL: float = 1e-8
    PSD_FLOOR: float = -1e-9

    # Every "random Clifford" site may be swapped for a Haar unitary
    TWIRL: Literal["clifford", "haar"] = "clifford"

    # Worker pool
    WORKERS: int = Field(default=1, ge=1)

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None


settings = Settings()
