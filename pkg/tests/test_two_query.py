"""
Unit tests for two-query synthesis and the Rayleigh statistics.
"""
import numpy as np
import pytest

from src.ensembles import haar_amplitudes, haar_state, haar_unitary
from src.qcore import DimensionMismatchError, InvalidStateError, pad_with_zeros
from src.two_query import (
    PermPhaseOracle,
    build_perm_phase_oracle,
    empirical_wasserstein2,
    quantization_error,
    rayleigh_moments_check,
    sorted_abs_distance,
    two_query_synthesize,
)
from src.utils import fit_power_law


class TestOracle:
    """Tests for the permutation-phase oracle."""

    def test_identical_vectors(self, stream):
        u = haar_amplitudes(16, stream)
        oracle = build_perm_phase_oracle(u, u)
        assert np.array_equal(oracle.sigma, np.arange(16))
        assert np.all(oracle.phases == 0)

    def test_reconstructs_permuted_vector(self, stream):
        """Test exact recovery when |v| is a permutation of |u|."""
        gen = stream.generator()
        u = haar_amplitudes(32, gen)
        perm = gen.permutation(32)
        v = np.empty_like(u)
        v[perm] = u * np.exp(1j * gen.uniform(0, 2 * np.pi, 32))
        oracle = build_perm_phase_oracle(u, v, phase_bits=40)
        assert np.allclose(oracle.reconstruct(u), v, atol=1e-9)
        assert np.array_equal(oracle.sigma[oracle.sigma_inverse], np.arange(32))

    def test_tie_breaking_by_index(self):
        u = np.array([0.5, 0.5, 0.5, 0.5])
        v = np.array([0.5, 0.5, 0.5, 0.5])
        oracle = build_perm_phase_oracle(u, v, phase_bits=8)
        assert np.array_equal(oracle.sigma, np.arange(4))

    def test_zero_amplitudes_get_zero_phase(self):
        u = np.array([1.0, 0.0])
        v = np.array([0.0, 1j])
        oracle = build_perm_phase_oracle(u, v, phase_bits=4)
        assert oracle.sigma.tolist() == [1, 0]
        assert oracle.phases.tolist() == [4, 0]

    def test_validation(self):
        with pytest.raises(InvalidStateError):
            PermPhaseOracle(1, np.array([0, 1]), np.array([1, 0]), np.array([0, 0]), 4)
        with pytest.raises(InvalidStateError):
            PermPhaseOracle(1, np.array([0, 1]), np.array([0, 1]), np.array([0, 16]), 4)
        with pytest.raises(ValueError):
            build_perm_phase_oracle(np.ones(2) / np.sqrt(2), np.ones(2) / np.sqrt(2), phase_bits=0)
        with pytest.raises(DimensionMismatchError):
            build_perm_phase_oracle(np.ones(2), np.ones(4))


@pytest.mark.parametrize("phase_bits", [6, 10, 32])
def test_reconstruction_bound_at_256(phase_bits, stream):
    """Test ||reconstruct(u) - v||^2 <= 2 D^2 + d 2^(-2 bits + 3) for Haar u, v."""
    d = 256
    for i in range(20):
        u = haar_amplitudes(d, stream.child(2 * i))
        v = haar_amplitudes(d, stream.child(2 * i + 1))
        oracle = build_perm_phase_oracle(u, v, phase_bits=phase_bits)
        error = np.linalg.norm(oracle.reconstruct(u) - v) ** 2
        bound = 2 * sorted_abs_distance(u, v) ** 2 + quantization_error(d, phase_bits)
        assert error <= bound + 1e-12
        # magnitudes land on sigma(x) unchanged
        assert np.allclose(np.abs(oracle.reconstruct(u))[oracle.sigma], np.abs(u))


def test_sorted_abs_distance():
    u = np.array([0.6, 0.8])
    v = np.array([0.8j, -0.6])
    assert sorted_abs_distance(u, v) == pytest.approx(0.0)
    assert sorted_abs_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert sorted_abs_distance(np.array([1.0, 0.0]), np.ones(2) / np.sqrt(2)) > 0


def test_quantization_error():
    assert quantization_error(1024, 32) == pytest.approx(1024 * 2.0 ** -61)


class TestSynthesis:
    """Tests for the full two-query pipeline."""

    def test_ancillas_return_clean(self, stream):
        target = haar_state(8, stream.child(0))
        for i in range(5):
            assert two_query_synthesize(target, 7, rng=stream.child(1 + i)).ancilla_clean

    def test_fidelity_from_sorted_distance(self, stream):
        """Test fidelity = (1 - D^2 / 2)^2 up to phase rounding."""
        target = haar_state(4, stream.child(0))
        for i in range(5):
            result = two_query_synthesize(target, 8, phase_bits=32, rng=stream.child(1 + i))
            d = result.sorted_distance
            assert result.expanded_fidelity == pytest.approx((1 - d ** 2 / 2) ** 2, abs=1e-8)
            assert result.fidelity >= result.expanded_fidelity - 1e-12

    def test_identical_vectors_give_exact_output(self, stream):
        target = haar_state(4, stream.child(0))
        u = haar_amplitudes(64, stream.child(1))
        result = two_query_synthesize(target, 6, rng=stream.child(2), vectors=(u, u))
        assert result.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_dense_and_conditional_paths_agree(self, stream):
        """Test that sampling V^dagger w from its conditional law keeps the fidelity."""
        target = haar_state(2, stream.child(0))
        U = haar_unitary(16, stream.child(1))
        V = haar_unitary(16, stream.child(2))
        dense = two_query_synthesize(target, 4, rng=stream.child(3), unitaries=(U, V))
        tau = pad_with_zeros(target, 4).amplitudes
        sampled = two_query_synthesize(target, 4, rng=stream.child(4),
                                       vectors=(U.entries[:, 0], V.entries @ tau))
        assert dense.expanded_fidelity == pytest.approx(sampled.expanded_fidelity)

    def test_error_shrinks_with_dimension(self, stream):
        target = haar_state(4, stream.child(0))
        dims, medians = [], []
        for n_expanded in (6, 8, 10):
            distances = [
                two_query_synthesize(target, n_expanded, rng=stream.child(10 * n_expanded + i)).sorted_distance
                for i in range(15)
            ]
            dims.append(1 << n_expanded)
            medians.append(float(np.median(distances)))
        assert medians[0] > medians[1] > medians[2]
        assert -0.65 <= fit_power_law(dims, medians)["slope"] <= -0.15

    def test_infidelity_within_ten_distance_squared(self, stream):
        target = haar_state(4, stream.child(0))
        infidelities, distances = [], []
        for i in range(20):
            result = two_query_synthesize(target, 10, phase_bits=32, rng=stream.child(1 + i))
            assert result.infidelity <= 10 * result.sorted_distance ** 2
            infidelities.append(result.infidelity)
            distances.append(result.sorted_distance)
        assert np.median(infidelities) < 10 * np.median(distances) ** 2

    @pytest.mark.slow
    def test_infidelity_at_twelve_qubits(self, stream):
        target = haar_state(16, stream.child(0))
        results = [two_query_synthesize(target, 12, phase_bits=32, rng=stream.child(1 + i))
                   for i in range(200)]
        assert all(r.ancilla_clean for r in results)
        median_distance = np.median([r.sorted_distance for r in results])
        assert np.median([r.infidelity for r in results]) < 10 * median_distance ** 2

    def test_unpacks_to_output_and_fidelity(self, stream):
        target = haar_state(2, stream.child(0))
        output, fidelity = two_query_synthesize(target, 3, rng=stream.child(1))
        assert output.n_qubits == 3
        assert 0.0 <= fidelity <= 1.0

    def test_rejects_small_expansion(self, stream):
        with pytest.raises(DimensionMismatchError):
            two_query_synthesize(haar_state(8, stream), 2)


class TestRayleigh:
    """Tests for the Wasserstein distance to the Rayleigh law."""

    def test_single_sample_closed_form(self):
        # W2^2 = s^2 - 2 s E[R] + E[R^2] with E[R] = sqrt(pi)/2, E[R^2] = 1
        assert empirical_wasserstein2([1.0]) ** 2 == pytest.approx(2 - np.sqrt(np.pi))

    def test_haar_magnitudes_are_close(self, stream):
        r = np.abs(haar_amplitudes(1 << 14, stream)) * np.sqrt(1 << 14)
        assert empirical_wasserstein2(r) < 0.1
        assert empirical_wasserstein2(2 * r) > 0.5

    def test_distance_shrinks_with_dimension(self, stream):
        small = np.mean([
            empirical_wasserstein2(np.abs(haar_amplitudes(256, stream.child(i))) * 16) ** 2
            for i in range(10)
        ])
        large = np.mean([
            empirical_wasserstein2(np.abs(haar_amplitudes(4096, stream.child(100 + i))) * 64) ** 2
            for i in range(10)
        ])
        assert large < small

    def test_moments(self, stream):
        stats = rayleigh_moments_check(1 << 14, stream)
        assert stats["mean"] == pytest.approx(stats["mean_target"], abs=0.02)
        assert stats["variance"] == pytest.approx(stats["variance_target"], abs=0.02)

    def test_validation(self):
        with pytest.raises(ValueError):
            empirical_wasserstein2([])
        with pytest.raises(ValueError):
            empirical_wasserstein2([1.0], reference="gaussian")
