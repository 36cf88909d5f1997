"""Shared fixtures for the simulator tests."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.ensembles import RngStream, haar_state


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical checks with many trials")


@pytest.fixture
def stream():
    """Fixed root stream so every statistical test is reproducible."""
    return RngStream(1234)


@pytest.fixture
def gen(stream):
    return stream.generator()


@pytest.fixture
def target3(stream):
    """Haar-random 3-qubit target."""
    return haar_state(8, stream.child(99))


@pytest.fixture
def hadamard_plus():
    return np.array([1.0, 1.0]) / np.sqrt(2)
