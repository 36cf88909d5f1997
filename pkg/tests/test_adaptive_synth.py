"""
Unit tests for the adaptive synthesis baseline.
"""
import numpy as np
import pytest

from src.adaptive_synth import PrecisionPolicy, qsample_state, synthesize_adaptive
from src.ensembles import haar_state
from src.qcore import StateVector, basis_state, overlap


def test_exact_policy_reproduces_target(stream):
    for i in range(5):
        target = haar_state(16, stream.child(i))
        output, _ = synthesize_adaptive(target, PrecisionPolicy.exact())
        assert 1 - overlap(output, target) < 1e-12


@pytest.mark.parametrize("n", [1, 3, 6])
def test_query_count(stream, n):
    target = haar_state(1 << n, stream)
    _, queries = synthesize_adaptive(target)
    assert queries == 2 * n + 2


def test_precision_improves_fidelity(stream):
    """Test that mean infidelity falls as the answer precision grows."""
    targets = [haar_state(32, stream.child(i)) for i in range(20)]

    def mean_infidelity(bits):
        policy = PrecisionPolicy(prob_bits=bits, phase_bits=bits)
        return np.mean([1 - overlap(synthesize_adaptive(t, policy)[0], t) for t in targets])

    coarse, medium, fine = mean_infidelity(3), mean_infidelity(8), mean_infidelity(20)
    assert coarse > medium > fine
    assert fine < 1e-6


def test_zero_probability_prefixes():
    """Test sparse targets, whose conditionals are undefined on empty prefixes."""
    target = basis_state(5, 3)
    output, _ = synthesize_adaptive(target, PrecisionPolicy(prob_bits=2, phase_bits=2))
    assert overlap(output, target) == pytest.approx(1.0)


def test_phases_on_grid_are_exact():
    amps = np.array([1, 1j, -1, -1j]) / 2
    target = StateVector(amps)
    output, _ = synthesize_adaptive(target, PrecisionPolicy(prob_bits=4, phase_bits=2))
    assert np.allclose(output.amplitudes, amps)


def test_qsample_state_amplitudes(stream):
    target = haar_state(8, stream)
    qs = qsample_state(target, PrecisionPolicy.exact())
    assert np.allclose(qs.amplitudes, np.abs(target.amplitudes))


def test_policy_validation():
    with pytest.raises(ValueError):
        PrecisionPolicy(prob_bits=0)
