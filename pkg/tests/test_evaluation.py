import itertools

import numpy as np
import pytest

from fuzzent.core import FuzzyPartition, PrototypeSet
from fuzzent.evaluation import (
    HardPartition,
    adjusted_rand_index,
    hard_partition,
    hullermeier_index,
    robustness_detection,
)
from fuzzent.exceptions import (
    IdenticalIdealCenters,
    LengthMismatch,
    UndefinedIndex,
    ValidationError,
)


class TestHardPartition:
    def test_argmax(self):
        hp = hard_partition(FuzzyPartition([[0.2, 0.5, 0.3]] * 2))
        assert hp.assign.tolist() == [1, 1]

    def test_tie_goes_to_lowest_index(self):
        hp = hard_partition(FuzzyPartition([[0.5, 0.5], [0.5, 0.5]]))
        assert hp.assign.tolist() == [0, 0]

    def test_idempotent_on_crisp(self):
        u = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        hp = hard_partition(FuzzyPartition(u))
        assert hp.assign.tolist() == [0, 1, 0]

    def test_validation(self):
        with pytest.raises(ValidationError):
            HardPartition(np.array([0, 2]), n_clusters=2)


def pair_counting_rand(a, b):
    """Brute-force ARI over all object pairs."""
    n = len(a)
    ss = sd = ds = dd = 0
    for i, j in itertools.combinations(range(n), 2):
        same_a = a[i] == a[j]
        same_b = b[i] == b[j]
        ss += same_a and same_b
        sd += same_a and not same_b
        ds += not same_a and same_b
        dd += not (same_a or same_b)
    total = ss + sd + ds + dd
    expected = (ss + sd) * (ss + ds) / total
    max_index = 0.5 * ((ss + sd) + (ss + ds))
    if max_index == expected:
        return 1.0
    return (ss - expected) / (max_index - expected)


class TestAdjustedRandIndex:
    def test_identical_partitions(self):
        a = np.array([0, 0, 1, 1, 2, 2])
        assert adjusted_rand_index(a, a) == pytest.approx(1.0)

    def test_relabeling_invariance(self):
        a = np.array([0, 0, 1, 1, 2, 2])
        b = np.array([2, 2, 0, 0, 1, 1])
        assert adjusted_rand_index(a, b) == pytest.approx(1.0)

    def test_crossed_partition_matches_pair_counting(self):
        a = np.array([0, 0, 1, 1])
        b = np.array([0, 1, 0, 1])
        assert adjusted_rand_index(a, b) == pytest.approx(pair_counting_rand(a, b))

    def test_matches_pair_counting_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(4, 30))
            a = rng.integers(0, 3, size=n)
            b = rng.integers(0, 4, size=n)
            a[:2] = [0, 1]
            b[:2] = [0, 1]
            assert adjusted_rand_index(a, b) == pytest.approx(pair_counting_rand(a, b), abs=1e-12)

    def test_label_permutation_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(5, 25))
            a = rng.integers(0, 3, size=n)
            b = rng.integers(0, 3, size=n)
            relabel = rng.permutation(3)
            assert adjusted_rand_index(relabel[a], b) == pytest.approx(
                adjusted_rand_index(a, b), abs=1e-12
            )

    def test_accepts_hard_partition(self):
        hp = HardPartition(np.array([0, 0, 1]), 2)
        assert adjusted_rand_index(hp, np.array([1, 1, 0])) == pytest.approx(1.0)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            adjusted_rand_index(np.array([0, 1]), np.array([0, 1, 2]))
        with pytest.raises(UndefinedIndex):
            adjusted_rand_index(np.array([0]), np.array([0]))


def naive_hullermeier(u, labels):
    n = u.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            eq_u = 1.0 - 0.5 * np.abs(u[i] - u[j]).sum()
            eq_y = 1.0 if labels[i] == labels[j] else 0.0
            total += abs(eq_u - eq_y)
    return 1.0 - 2.0 * total / (n * (n - 1))


class TestHullermeierIndex:
    def test_perfect_crisp_agreement(self):
        u = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert hullermeier_index(FuzzyPartition(u), np.array([0, 0, 1])) == pytest.approx(1.0)

    def test_maximal_disagreement(self):
        u = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert hullermeier_index(FuzzyPartition(u), np.array([0, 1])) == pytest.approx(0.0)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            n = int(rng.integers(2, 20))
            u = rng.dirichlet(np.ones(2), size=n)
            labels = rng.integers(0, 2, size=n)
            got = hullermeier_index(FuzzyPartition(u), labels)
            assert got == pytest.approx(naive_hullermeier(u, labels), abs=1e-12)

    def test_blocked_path_matches_naive(self):
        # more rows than the internal block size
        rng = np.random.default_rng(3)
        import fuzzent.evaluation as ev

        old = ev._HUL_BLOCK
        ev._HUL_BLOCK = 16
        try:
            u = rng.dirichlet(np.ones(3), size=50)
            labels = rng.integers(0, 3, size=50)
            got = hullermeier_index(FuzzyPartition(u), labels)
            assert got == pytest.approx(naive_hullermeier(u, labels), abs=1e-12)
        finally:
            ev._HUL_BLOCK = old

    def test_label_permutation_invariance(self):
        rng = np.random.default_rng(4)
        u = rng.dirichlet(np.ones(3), size=15)
        labels = rng.integers(0, 3, size=15)
        relabel = rng.permutation(3)
        fp = FuzzyPartition(u)
        assert hullermeier_index(fp, relabel[labels]) == pytest.approx(
            hullermeier_index(fp, labels), abs=1e-12
        )

    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(5)
        u = rng.dirichlet(np.ones(3), size=12)
        labels = rng.integers(0, 3, size=12)
        assert hullermeier_index(FuzzyPartition(u[:, [2, 0, 1]]), labels) == pytest.approx(
            hullermeier_index(FuzzyPartition(u), labels), abs=1e-12
        )

    def test_in_unit_interval(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            u = rng.dirichlet(np.ones(4), size=10)
            labels = rng.integers(0, 4, size=10)
            assert 0.0 <= hullermeier_index(FuzzyPartition(u), labels) <= 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            hullermeier_index(FuzzyPartition(np.full((3, 2), 0.5)), np.array([0, 1]))


class TestRobustnessDetection:
    IDEAL = np.array([[0.0, 0.0], [0.8, 0.8]])

    def test_exact_recovery_is_one(self):
        assert robustness_detection(PrototypeSet(self.IDEAL), self.IDEAL) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_swapped_prototypes_still_one(self):
        assert robustness_detection(
            PrototypeSet(self.IDEAL[::-1]), self.IDEAL
        ) == pytest.approx(1.0, abs=1e-12)

    def test_midpoint_degenerate_case(self):
        mid = np.tile(self.IDEAL.mean(axis=0), (2, 1))
        assert robustness_detection(PrototypeSet(mid), self.IDEAL) == pytest.approx(1.0)

    def test_grows_as_prototype_diverges(self):
        values = []
        for shift in (1.0, 5.0, 25.0):
            g = self.IDEAL.copy()
            g[1] += shift
            values.append(robustness_detection(PrototypeSet(g), self.IDEAL))
        assert values[0] < values[1] < values[2]

    def test_paper_formula_flag(self):
        g = np.array([[0.1, 0.0], [0.7, 0.9]])
        corrected = robustness_detection(PrototypeSet(g), self.IDEAL)
        published = robustness_detection(PrototypeSet(g), self.IDEAL, paper_formula=True)
        d = np.linalg.norm
        sep = 2 * d(self.IDEAL[0] - self.IDEAL[1])
        num_pub = (
            d(self.IDEAL[0] - g[0]) + d(self.IDEAL[0] - g[1]) + 2 * d(self.IDEAL[1] - g[0])
        )
        assert published == pytest.approx(num_pub / sep)
        assert corrected != published

    def test_identical_ideal_centers_rejected(self):
        with pytest.raises(IdenticalIdealCenters):
            robustness_detection(PrototypeSet(self.IDEAL), np.zeros((2, 2)))

    def test_requires_two_clusters(self):
        with pytest.raises(ValidationError):
            robustness_detection(PrototypeSet(np.zeros((3, 2))), self.IDEAL)
