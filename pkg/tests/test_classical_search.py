"""
Unit tests for CNF evaluation, witness isolation, Bernstein-Vazirani
extraction and the search-to-decision pipelines.
"""
import numpy as np
import pytest
from scipy.stats import chisquare

from src.classical_search import (
    CnfFormula,
    HashedInstance,
    NoWitness,
    amplify,
    bv_extract,
    count_solutions,
    from_bits,
    gf2_basis,
    lex_first_extract,
    linear_oracle,
    qcma_oracle_fn,
    random_planted_3sat,
    repetitions,
    search_to_decision,
    solutions,
    to_bits,
    vv_hash,
    witness_oracle,
)
from src.ensembles import RngStream
from src.qcore import Abort, CapExceededError, InvalidStateError


@pytest.fixture
def unique_101():
    """x1 and not x2 and x3: the only witness is 101."""
    return CnfFormula(3, ((1,), (-2,), (3,)))


@pytest.fixture
def unsatisfiable():
    return CnfFormula(2, ((1,), (-1,)))


class TestCnfFormula:
    """Tests for formula construction and evaluation."""

    def test_first_variable_is_most_significant(self):
        formula = CnfFormula(2, ((1,), (-2,)))
        assert formula.evaluate("10")
        assert formula.evaluate(2)
        assert not formula.evaluate("01")

    def test_vectorized_matches_scalar(self, unique_101):
        xs = np.arange(8)
        assert unique_101.satisfied(xs).tolist() == [unique_101.evaluate(int(x)) for x in xs]

    def test_validation(self):
        with pytest.raises(InvalidStateError):
            CnfFormula(2, ((3,),))
        with pytest.raises(InvalidStateError):
            CnfFormula(2, ((0,),))
        with pytest.raises(InvalidStateError):
            CnfFormula(0, ())
        with pytest.raises(ValueError):
            CnfFormula(2, ()).evaluate(4)

    def test_empty_clause_is_unsatisfiable(self):
        assert count_solutions(CnfFormula(2, ((),))) == 0


def test_bit_strings():
    assert to_bits(5, 4) == "0101"
    assert from_bits("0101") == 5
    assert from_bits("") == 0


class TestHashedInstance:
    """Tests for parity constraints on top of a base formula."""

    def test_parity_filter(self):
        inst = HashedInstance(CnfFormula(3, ()), 1, np.array([[1, 1, 0]]))
        assert solutions(inst).tolist() == [0, 1, 6, 7]

    def test_validation(self):
        base = CnfFormula(3, ())
        with pytest.raises(InvalidStateError):
            HashedInstance(base, 0, np.zeros((0, 3)))
        with pytest.raises(InvalidStateError):
            HashedInstance(base, 1, np.zeros((2, 3)))

    def test_vv_hash_shape(self, stream):
        gen = stream.generator()
        for _ in range(20):
            inst = vv_hash(CnfFormula(5, ()), gen)
            assert 1 <= inst.k <= 5
            assert inst.A.shape == (inst.k, 5)


class TestSolutions:
    """Tests for exhaustive enumeration and decision queries."""

    def test_lexicographic_order(self):
        formula = CnfFormula(3, ((1, 2),))
        assert solutions(formula).tolist() == [2, 3, 4, 5, 6, 7]
        assert count_solutions(formula) == 6

    def test_witness_oracle(self, unique_101, unsatisfiable):
        assert witness_oracle(unique_101) == 1
        assert witness_oracle(unsatisfiable) == 0
        assert witness_oracle(unique_101, lambda xs: xs < 4) == 0

    def test_cap(self):
        with pytest.raises(CapExceededError):
            solutions(CnfFormula(25, ()))


class TestOracles:
    """Tests for the GF(2) span oracle and Bernstein-Vazirani readout."""

    def test_gf2_basis(self):
        assert len(gf2_basis([3, 5, 6])) == 2
        assert len(gf2_basis([1, 2, 4])) == 3
        assert gf2_basis([0, 0]) == []

    def test_unique_witness_gives_linear_oracle(self, unique_101):
        f = qcma_oracle_fn(unique_101)
        assert np.array_equal(f.table, linear_oracle(0b101, 3).table)

    def test_spanning_witnesses(self):
        """Test that witnesses 10 and 11 span everything, so f vanishes only at 0."""
        f = qcma_oracle_fn(CnfFormula(2, ((1,),)))
        assert f.table.tolist() == [0, 1, 1, 1]

    def test_bv_recovers_hidden_string(self, stream):
        f = linear_oracle(0b1011, 4)
        assert bv_extract(f) == 0b1011
        assert all(bv_extract(f, stream.child(i)) == 0b1011 for i in range(10))

    def test_truth_table_cap(self):
        with pytest.raises(CapExceededError):
            qcma_oracle_fn(CnfFormula(21, ()))


class TestSearchToDecision:
    """Tests for the one-query pipeline and its variants."""

    def test_unique_witness_without_hash(self, unique_101, stream):
        for i in range(10):
            assert search_to_decision(unique_101, stream.child(i), isolate=False) == 0b101

    def test_outputs_are_verified(self, stream):
        formula, _ = random_planted_3sat(6, 3.0, stream.child(0))
        for i in range(30):
            outcome = search_to_decision(formula, stream.child(1 + i))
            assert isinstance(outcome, Abort) or formula.evaluate(outcome)

    def test_unsatisfiable_aborts(self, unsatisfiable, stream):
        assert isinstance(search_to_decision(unsatisfiable, stream), Abort)

    def test_pipeline_cap(self):
        with pytest.raises(CapExceededError):
            search_to_decision(CnfFormula(17, ()))

    def test_lex_first(self, unsatisfiable):
        assert lex_first_extract(CnfFormula(3, ((1, 2),))) == 0b010
        with pytest.raises(NoWitness):
            lex_first_extract(unsatisfiable)

    def test_repetitions(self):
        assert repetitions(10, 5) == 30
        assert repetitions(10, 5, 1.0) == 15
        assert repetitions(0, 0) == 1

    def test_amplify_finds_unique_witness(self, unique_101):
        # each isolated run keeps 101 with probability E[2^-k] = 7/24
        assert amplify(unique_101, 10, RngStream(0)) == 0b101
        with pytest.raises(ValueError):
            amplify(unique_101, -1)

    def test_amplify_reports_abort(self, unsatisfiable):
        outcome = amplify(unsatisfiable, 0, RngStream(0))
        assert isinstance(outcome, Abort)


def test_random_planted_3sat(stream):
    formula, planted = random_planted_3sat(8, 4.0, stream)
    assert formula.evaluate(planted)
    assert len(formula.clauses) == 32
    assert all(len({abs(l) for l in clause}) == 3 for clause in formula.clauses)
    with pytest.raises(ValueError):
        random_planted_3sat(2, 4.0, stream)


def _random_cnf(gen: np.random.Generator) -> CnfFormula:
    m = int(gen.integers(2, 7))
    clauses = []
    for _ in range(int(gen.integers(1, 3 * m + 1))):
        width = int(gen.integers(1, min(3, m) + 1))
        variables = gen.choice(np.arange(1, m + 1), size=width, replace=False)
        signs = gen.choice([-1, 1], size=width)
        clauses.append(tuple(int(s * v) for s, v in zip(signs, variables)))
    return CnfFormula(m, tuple(clauses))


class TestStatistics:
    """Randomized checks against brute force and uniformity tests."""

    def test_bv_on_random_linear_oracles(self, stream):
        gen = stream.child(0).generator()
        for i in range(1000):
            d = int(gen.integers(0, 1 << 10))
            assert bv_extract(linear_oracle(d, 10), stream.child(1 + i)) == d

    def test_vv_hash_is_uniform(self, stream):
        """Test that k is uniform on {1..m} and each row of A is uniform on GF(2)^m."""
        base = CnfFormula(4, ())
        draws = 8000
        k_counts = np.zeros(4)
        row_counts = np.zeros(16)
        for i in range(draws):
            hashed = vv_hash(base, stream.child(i))
            k_counts[hashed.k - 1] += 1
            row_counts[hashed.row_masks()[0]] += 1
        assert chisquare(k_counts).pvalue > 1e-3
        assert chisquare(row_counts).pvalue > 1e-3

    @pytest.mark.slow
    def test_lex_first_matches_brute_force(self, stream):
        gen = stream.generator()
        satisfiable = 0
        for _ in range(500):
            formula = _random_cnf(gen)
            found = solutions(formula)
            if len(found) == 0:
                with pytest.raises(NoWitness):
                    lex_first_extract(formula)
            else:
                satisfiable += 1
                assert lex_first_extract(formula) == int(found[0])
        assert satisfiable > 0
