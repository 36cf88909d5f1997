"""
Unit tests for one-query synthesis.
"""
import numpy as np
import pytest

from src.ensembles import haar_state
from src.one_query import OneQueryConfig, one_query_register, one_query_synthesize
from src.qcore import DimensionMismatchError, UnitaryMatrix, ket, overlap, pad_with_zeros


def test_config_defaults_and_validation():
    cfg = OneQueryConfig(n_target=2, m=8)
    assert cfg.n_expanded == 6
    assert cfg.distillation().n == 2
    with pytest.raises(ValueError):
        OneQueryConfig(n_target=3, m=8, n_expanded=2)
    with pytest.raises(ValueError):
        OneQueryConfig(n_target=0, m=8)


def test_register_without_twirl():
    """Test that a positive real target is its own best phase state."""
    register = one_query_register(ket("+"), UnitaryMatrix.identity(1))
    assert overlap(register, ket("+")) == pytest.approx(1.0)


def test_register_dimension_check(stream):
    with pytest.raises(DimensionMismatchError):
        one_query_register(haar_state(4, stream), UnitaryMatrix.identity(3))


class TestSynthesis:
    """Tests for the full one-query pipeline."""

    @pytest.fixture
    def target(self, stream):
        return haar_state(2, stream.child(0))

    def test_register_overlaps_near_one_over_pi(self, target, stream):
        cfg = OneQueryConfig(n_target=1, m=48, n_expanded=5, mode="exact_conditional")
        result = one_query_synthesize(target, cfg, stream.child(1))
        assert len(result.register_overlaps) == 48
        assert 0.2 < result.mean_register_overlap < 0.5
        assert result.min_overlap == pytest.approx(min(result.register_overlaps))

    def test_distillation_improves_overlap(self, target, stream):
        cfg = OneQueryConfig(n_target=1, m=36, n_expanded=5, mode="exact_conditional")
        result = one_query_synthesize(target, cfg, stream.child(1))
        assert result.report.rounds == 2
        assert not result.aborted
        assert result.report.final_overlap > result.mean_register_overlap
        assert result.output.dim == 2
        assert result.output_overlap is not None

    def test_reproducible(self, target, stream):
        cfg = OneQueryConfig(n_target=1, m=12, n_expanded=4)
        a = one_query_synthesize(target, cfg, stream.child(2))
        b = one_query_synthesize(target, cfg, stream.child(2))
        assert a.register_overlaps == b.register_overlaps
        assert a.report.survivor_counts == b.report.survivor_counts

    def test_fixed_unitaries(self, target):
        cfg = OneQueryConfig(n_target=1, m=2, n_expanded=1, rounds=1, mode="exact_conditional")
        identity = UnitaryMatrix.identity(1)
        result = one_query_synthesize(target, cfg, unitaries=[identity, identity])
        expanded = pad_with_zeros(target, 1)
        assert result.register_overlaps[0] == pytest.approx(result.register_overlaps[1])
        assert result.register_overlaps[0] == pytest.approx(
            np.sum(np.abs(expanded.amplitudes.real)) ** 2 / 2
            + np.abs(np.sum(np.sign(expanded.amplitudes.real + (expanded.amplitudes.real == 0))
                            * expanded.amplitudes.imag)) ** 2 / 2
        )
        with pytest.raises(ValueError):
            one_query_synthesize(target, cfg, unitaries=[identity])

    def test_cross_error_terms(self, target, stream):
        cfg = OneQueryConfig(n_target=1, m=8, n_expanded=4, mode="exact_conditional")
        result = one_query_synthesize(target, cfg, stream.child(3))
        linear, quadratic = result.cross_error_terms()
        assert linear == pytest.approx(8 * 8 * np.sqrt(result.max_cross))
        assert quadratic == pytest.approx(8 * linear)

    def test_unpacks_to_output_and_report(self, target, stream):
        cfg = OneQueryConfig(n_target=1, m=4, n_expanded=3, mode="exact_conditional")
        output, report = one_query_synthesize(target, cfg, stream)
        assert report.survivor_counts[0] == 4
        assert output is not None

    def test_target_size_check(self, stream):
        cfg = OneQueryConfig(n_target=2, m=4)
        with pytest.raises(DimensionMismatchError):
            one_query_synthesize(haar_state(2, stream), cfg)


@pytest.mark.slow
def test_success_rates_at_eight_expanded_qubits(stream):
    """
    Test that at n_target=4, n_expanded=8, m=96 the distillation preconditions
    hold in at least 99% of 200 trials and distillation improves on the mean
    register overlap in at least 95% of the non-aborting ones.
    """
    cfg = OneQueryConfig(n_target=4, m=96, n_expanded=8)
    cross_cap = (2 ** 8) ** -0.25
    conditions_held = 0
    improved = 0
    completed = 0
    for i in range(200):
        target = haar_state(16, stream.child(2 * i))
        result = one_query_synthesize(target, cfg, stream.child(2 * i + 1))
        if result.min_overlap >= 1 / 8 and result.max_cross <= cross_cap:
            conditions_held += 1
        if not result.aborted:
            completed += 1
            if result.report.final_overlap > result.mean_register_overlap:
                improved += 1
    assert conditions_held >= 198
    assert completed > 0
    assert improved >= 0.95 * completed
