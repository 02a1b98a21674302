import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divexp.mdp import Trajectory, Transition
from divexp.theory import (DensityPair, compositions, de_allocation, diversity_histogram,
                           expected_single_distance, joint_entropy, lemma1_bound, max_l1_distance,
                           multi_is_variance, optimal_allocations, random_profile, sampled_variance_profile,
                           single_allocation, single_is_variance, uniformity_objective, variance_profile,
                           verify_theorem1, verify_theorem2)


class TestVariances:
    def test_single(self):
        assert single_is_variance([[0.0]], 0, 0, 5) == 0.0
        assert single_is_variance([[2.0]], 0, 0, 4) == 0.5

    def test_multi_examples(self):
        assert multi_is_variance([[1.0, 3.0]], 0, (2, 2), 4) == 0.5
        assert multi_is_variance([[2.0, 2.0, 2.0]], 0, (1, 0, 3), 4) == 0.5

    def test_multi_reduces_to_single(self):
        V = np.array([[1.5, 4.0, 0.2]])
        for t in range(3):
            assert multi_is_variance(V, 0, single_allocation(6, 3, t), 6) == pytest.approx(
                single_is_variance(V, 0, t, 6), rel=1e-15)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            multi_is_variance([[1.0, 2.0]], 0, (1, 1, 1), 3)

    def test_linear_in_k(self):
        rng = np.random.default_rng(0)
        V = rng.random((3, 4))
        n = 10
        base = np.array([3, 2, 3, 2])
        for t in range(4):
            e = np.zeros(4)
            e[t] = 1
            # multi_is_variance needs sum(k) == n, so difference two allocations of n + 1
            step = (n + 1) ** 2 * (multi_is_variance(V, 1, base + e, n + 1) - np.dot(base, V[1]) / (n + 1) ** 2)
            assert step == pytest.approx(V[1, t], rel=1e-9)

    def test_analytic_profile_matches_monte_carlo(self):
        rng = np.random.default_rng(1)
        pair = DensityPair(rng.dirichlet(np.ones(5), size=2), rng.dirichlet(np.ones(5) * 3, size=2),
                           rng.uniform(0.1, 1.0, 5))
        exact = variance_profile(pair)
        mc = sampled_variance_profile(pair, 1_000_000, rng)
        np.testing.assert_allclose(mc, exact, rtol=0.02)

    def test_density_validation(self):
        with pytest.raises(ValueError):
            DensityPair(np.array([[0.5, 0.6]]), np.array([[0.5, 0.5]]), np.ones(2))
        with pytest.raises(ValueError):
            DensityPair(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]), np.ones(2))


class TestUniformity:
    def test_single_target(self):
        assert uniformity_objective([[1.0, 5.0]], (3, 1), 4) == 0.0

    def test_identical_rows(self):
        assert uniformity_objective([[1.0, 5.0], [1.0, 5.0]], (1, 3), 4) == 0.0

    def test_exhaustive_small_instance(self):
        V = np.array([[1.0, 4.0], [3.0, 1.0]])
        scores = {k: uniformity_objective(V, k, 4) for k in compositions(4, 2)}
        assert len(scores) == 5
        # hand values: var_j(k) = (k1 V[j,0] + k2 V[j,1]) / 16, objective = |v1 - v2| / 2
        for (a, b), s in scores.items():
            v1, v2 = (a * 1 + b * 4) / 16, (a * 3 + b * 1) / 16
            assert s == pytest.approx(abs(v1 - v2) / 2, abs=1e-15)
        best = optimal_allocations(V, 4, 2)
        assert [tuple(k) for k in best] == [min(scores, key=scores.get)]


class TestLemma1:
    def test_examples(self):
        assert lemma1_bound((10, 10, 10, 10)) == 60
        assert lemma1_bound((40, 0, 0, 0)) == 80

    def test_composition_count(self):
        assert len(list(compositions(6, 3))) == math.comb(8, 2)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 4).flatmap(lambda m: st.lists(st.integers(0, 4), min_size=m, max_size=m)))
    def test_matches_brute_force(self, k):
        if sum(k) == 0:
            return
        assert lemma1_bound(k) == max_l1_distance(k)


class TestTheorem1:
    def test_expected_distance_n6_m2(self):
        for k_star in compositions(6, 2):
            assert expected_single_distance(np.array(k_star), 6, 2) == 6

    def test_closed_form_for_every_allocation(self):
        for n, m in [(6, 2), (6, 3), (8, 4), (12, 3)]:
            for k_star in compositions(n, m):
                assert expected_single_distance(np.array(k_star), n, m) == Fraction(2 * n) - Fraction(2 * n, m)

    def test_equal_optimum_has_zero_distance(self):
        V = np.array([[1.0, 1.0], [2.0, 2.0]])
        rep = verify_theorem1([V], 6, 2)
        assert rep.passed

    def test_random_profiles(self):
        rng = np.random.default_rng(0)
        profiles = [random_profile(rng, 3, 3) for _ in range(100)]
        rep = verify_theorem1(profiles, 6, 3)
        assert rep.passed and rep.checks >= 100


class TestTheorem2:
    def test_zero(self):
        assert verify_theorem2(np.zeros((2, 3)), 6, 3) == (0.0, 0.0)

    def test_hand(self):
        de, spi = verify_theorem2([[1.0, 3.0]], 4, 2)
        assert de == pytest.approx(0.5) and spi == pytest.approx(0.5)

    def test_random(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            de, spi = verify_theorem2(random_profile(rng, 4, 3), 12, 3)
            assert abs(de - spi) <= 1e-12

    def test_de_allocation_requires_divisor(self):
        with pytest.raises(ValueError):
            de_allocation(7, 3)


def traj(pairs):
    nxt = [s for s, _ in pairs[1:]] + [pairs[-1][0]]
    trs = tuple(Transition(s, a, -1.0, n, i == len(pairs) - 1) for i, ((s, a), n) in enumerate(zip(pairs, nxt)))
    return Trajectory(trs, "b")


class TestJointEntropy:
    def test_single_pair(self):
        assert joint_entropy([traj([(0, 1)] * 5)]) == 0.0

    def test_uniform_four(self):
        assert joint_entropy([traj([(0, 0), (0, 1)]), traj([(1, 0), (1, 1)])]) == pytest.approx(math.log(4))

    def test_bounded(self):
        rng = np.random.default_rng(0)
        pairs = [(int(s), int(a)) for s, a in zip(rng.integers(0, 16, 500), rng.integers(0, 5, 500))]
        assert 0 <= joint_entropy([traj(pairs)]) <= math.log(80)

    def test_empty(self):
        with pytest.raises(ValueError):
            joint_entropy([])


@pytest.fixture(scope="module")
def hist():
    return diversity_histogram(3)


class TestDiversityHistogram:
    def test_optimal_bucket(self, hist):
        assert hist[0]["count"] == 64
        assert hist[0]["diversity"].sum() == 64 * 63 // 2
        assert hist[0]["diversity"][0] == 0

    def test_pairs_are_distinct_and_unordered(self, hist):
        for q, b in hist.items():
            assert b["diversity"].sum() == b["count"] * (b["count"] - 1) // 2
            assert b["diversity"][0] == 0

    def test_shrinks_towards_optimal(self, hist):
        counts = [hist[q]["count"] for q in range(4)]
        spread = [max(np.flatnonzero(hist[q]["diversity"])) for q in range(4)]
        assert counts == sorted(counts)
        assert spread == sorted(spread)
