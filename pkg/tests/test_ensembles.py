"""
Unit tests for random ensembles: seeded streams, Haar sampling and the
Clifford tableau sampler.
"""
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from src.ensembles import (
    CliffordElement,
    RngStream,
    as_generator,
    clifford_group_order,
    haar_isometry,
    haar_state,
    haar_unitary,
    pauli_matrix,
    random_clifford,
    random_twirl,
    two_design_moments,
)
from src.qcore import InvalidStateError, UnitaryMatrix


class TestRngStream:
    """Tests for reproducible streams."""

    def test_same_stream_same_draws(self):
        a = RngStream(7, 3).generator().standard_normal(5)
        b = RngStream(7, 3).generator().standard_normal(5)
        assert np.array_equal(a, b)

    def test_streams_are_independent(self):
        a = RngStream(7, 3).generator().standard_normal(5)
        b = RngStream(7, 4).generator().standard_normal(5)
        c = RngStream(7, 3).child(0).generator().standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_large_seed(self):
        """Test that 64-bit seeds are accepted."""
        draws = RngStream(2 ** 64 - 1).generator().integers(0, 10, size=3)
        assert draws.shape == (3,)

    def test_as_generator(self):
        gen = np.random.default_rng(0)
        assert as_generator(gen) is gen
        with pytest.raises(TypeError):
            as_generator(42)


def test_haar_state_is_normalized(stream):
    psi = haar_state(16, stream)
    assert np.vdot(psi.amplitudes, psi.amplitudes).real == pytest.approx(1.0)
    assert psi.n_qubits == 4


def test_haar_state_mean_weight(stream):
    """Test E |<0|psi>|^2 = 1/d over many draws."""
    gen = stream.generator()
    weights = [abs(haar_state(8, gen).amplitudes[0]) ** 2 for _ in range(3000)]
    # variance of |<0|psi>|^2 is (d - 1) / (d^2 (d + 1)) ~ 0.0122 at d = 8
    assert np.mean(weights) == pytest.approx(1 / 8, abs=4 * np.sqrt(0.0122 / 3000))


def test_haar_isometry_and_unitary(stream):
    V = haar_isometry(8, 3, stream.child(0))
    assert np.allclose(V.conj().T @ V, np.eye(3))
    U = haar_unitary(4, stream.child(1))
    assert isinstance(U, UnitaryMatrix)
    with pytest.raises(ValueError):
        haar_isometry(4, 5, stream)


class TestClifford:
    """Tests for the tableau representation and uniform sampling."""

    def test_group_order(self):
        assert clifford_group_order(1) == 24
        assert clifford_group_order(2) == 11520

    def test_identity_and_hadamard(self):
        assert np.allclose(CliffordElement.identity(2).to_unitary().entries, np.eye(4))
        H = CliffordElement.hadamard_all(2).to_unitary().entries
        assert np.allclose(H, UnitaryMatrix.hadamard(2).entries)

    def test_rejects_non_symplectic(self):
        tab = np.eye(2, dtype=int)
        tab[1] = [1, 0]
        with pytest.raises(InvalidStateError):
            CliffordElement(1, tab, np.zeros(2, dtype=int))

    def test_random_elements_are_symplectic(self, stream):
        for i in range(20):
            assert random_clifford(3, stream.child(i)).is_symplectic()

    def test_single_qubit_covers_group(self, stream):
        """Test that all 24 single-qubit classes appear."""
        gen = stream.generator()
        seen = set()
        for _ in range(1000):
            c = random_clifford(1, gen)
            seen.add((tuple(c.tableau.reshape(-1)), tuple(c.phases)))
        assert len(seen) == 24

    def test_dense_form_matches_tableau(self, stream):
        """Test U P U^dagger against conjugate_pauli for every 2-qubit Pauli."""
        c = random_clifford(2, stream)
        U = c.to_unitary().entries
        for code in range(16):
            x = np.array([(code >> 3) & 1, (code >> 2) & 1])
            z = np.array([(code >> 1) & 1, code & 1])
            xo, zo, sign = c.conjugate_pauli(x, z, 0)
            expected = pauli_matrix(xo, zo, sign)
            assert np.allclose(U @ pauli_matrix(x, z, 0) @ U.conj().T, expected)

    def test_dense_form_is_cached(self, stream):
        c = random_clifford(2, stream)
        assert c.to_unitary() is c.to_unitary()


def test_random_twirl_families(stream):
    assert random_twirl(2, stream.child(0), "clifford").dim == 4
    assert random_twirl(2, stream.child(1), "haar").dim == 4
    with pytest.raises(ValueError):
        random_twirl(2, stream, "pauli")


@pytest.mark.parametrize("family", ["clifford", "haar"])
def test_two_design_moments(stream, family):
    """Test the second and fourth moments of the twirled amplitude within 3 sigma."""
    stats = two_design_moments(
        2, 4000, stream, sampler=lambda n, g: random_twirl(n, g, family)
    )
    assert abs(stats["second"] - stats["second_target"]) <= 3 * stats["second_stderr"]
    assert abs(stats["fourth"] - stats["fourth_target"]) <= 3 * stats["fourth_stderr"]


@pytest.mark.parametrize("n_qubits", [2, 3])
def test_paley_zygmund_rate(stream, n_qubits):
    """Test Pr[|<x|C|tau>|^2 >= theta / 2^n] >= (1 - theta)^2 / 2 at theta = 1/2."""
    stats = two_design_moments(n_qubits, 2000, stream.child(n_qubits), theta=0.5)
    assert stats["pz_floor"] == pytest.approx(0.125)
    assert stats["pz_rate"] >= stats["pz_floor"] - 3 * stats["pz_stderr"]


def test_moment_errors_need_two_draws(stream):
    stats = two_design_moments(1, 1, stream)
    assert stats["second_stderr"] == float("inf")


@pytest.mark.slow
def test_single_qubit_classes_are_uniform(stream):
    """Test that each of the 24 single-qubit classes has frequency 1/24."""
    draws = 10 ** 5
    gen = stream.child(5).generator()
    counts = Counter()
    for _ in range(draws):
        c = random_clifford(1, gen)
        counts[(tuple(c.tableau.reshape(-1)), tuple(c.phases))] += 1
    assert len(counts) == 24

    observed = np.array(list(counts.values()))
    p = 1 / 24
    sigma = np.sqrt(p * (1 - p) / draws)
    # 4 sigma on the worst of 24 classes, plus a goodness-of-fit test
    assert np.max(np.abs(observed / draws - p)) <= 4 * sigma
    assert chisquare(observed).pvalue > 1e-3
