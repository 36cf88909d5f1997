"""
Unit tests for utility functions module.

Tests result persistence, config hashing and the run statistics.
"""
import math

import numpy as np
import pytest

from src.utils import (
    config_hash,
    ensure_dir,
    fit_constant,
    fit_power_law,
    format_time,
    load_results,
    save_results,
    wilson_interval,
)


def test_save_and_load_results(tmp_path):
    """Test that numpy values are written as plain JSON."""
    path = tmp_path / "nested" / "summary.json"
    save_results({"rate": np.float64(0.25), "count": np.int64(3), "dims": np.arange(3)}, str(path))

    loaded = load_results(str(path))

    assert loaded == {"rate": 0.25, "count": 3, "dims": [0, 1, 2]}


def test_ensure_dir(tmp_path):
    target = tmp_path / "a" / "b"
    ensure_dir(str(target))
    ensure_dir(str(target))
    assert target.is_dir()


def test_config_hash_is_stable():
    """Test that key order does not change the hash."""
    a = config_hash({"seed": 1, "n": 4})
    b = config_hash({"n": 4, "seed": 1})
    assert a == b
    assert len(a) == 16
    assert config_hash({"seed": 2, "n": 4}) != a


def test_format_time():
    assert format_time(5) == "5.00 seconds"
    assert format_time(90) == "1.50 minutes"
    assert format_time(5400) == "1.50 hours"


class TestWilsonInterval:
    """Tests for the binomial confidence interval."""

    def test_contains_rate(self):
        low, high = wilson_interval(30, 100)
        assert low < 0.3 < high
        assert low == pytest.approx(0.2189, abs=1e-3)
        assert high == pytest.approx(0.3958, abs=1e-3)

    def test_edges(self):
        low, high = wilson_interval(0, 20)
        assert low == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < high < 0.2
        low, high = wilson_interval(20, 20)
        assert high == pytest.approx(1.0)
        assert 0.8 < low < 1.0
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            wilson_interval(5, 3)
        with pytest.raises(ValueError):
            wilson_interval(-1, 3)


def test_fit_power_law_recovers_exponent():
    x = [64, 256, 1024, 4096]
    y = [3.0 * v ** -0.25 for v in x]
    fit = fit_power_law(x, y)
    assert fit["slope"] == pytest.approx(-0.25)
    assert fit["prefactor"] == pytest.approx(3.0)
    assert fit["r_squared"] == pytest.approx(1.0)


def test_fit_constant():
    scale = [math.log(d) / d for d in (256, 1024)]
    fit = fit_constant([2 * s for s in scale], scale)
    assert fit["mean"] == pytest.approx(2.0)
    assert fit["spread"] == pytest.approx(1.0)
    assert fit_constant([0.0, 1.0], [1.0, 1.0])["spread"] == math.inf
