import math

import numpy as np
import pytest

from privcore import (
    DistancePredicate,
    DpBudget,
    GraphPredicate,
    RandomSource,
    basic_filter,
    dp_paradigm_cost,
    friend_counts_exact,
    friend_counts_sampled,
    friendly_core,
    friendly_core_dp,
    min_n_for_completeness,
    zcdp_filter,
)


def complete_graph(n):
    return GraphPredicate(np.ones((n, n), dtype=bool))


def random_graph(gen, n, density):
    adj = gen.random((n, n)) < density
    adj = adj | adj.T
    np.fill_diagonal(adj, True)
    return adj


class TestFriendCountsExact:
    def test_complete_dataset(self):
        counts = friend_counts_exact(np.arange(5), complete_graph(5))
        assert np.array_equal(counts.counts, np.full(5, 5.0))

    def test_line_points(self):
        data = np.array([[0.0], [1.0], [100.0]])
        counts = friend_counts_exact(data, DistancePredicate(2.0))
        assert np.array_equal(counts.counts, [2.0, 2.0, 1.0])

    def test_singleton(self):
        counts = friend_counts_exact(np.array([[3.0]]), DistancePredicate(0.0))
        assert np.array_equal(counts.counts, [1.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            friend_counts_exact(np.zeros((0, 2)), DistancePredicate(1.0))


class TestFriendCountsSampled:
    def test_complete_dataset_estimates_full(self):
        n = 300
        counts = friend_counts_sampled(
            np.arange(n), complete_graph(n), xi=0.2, delta=0.1, rng=RandomSource(0)
        )
        assert counts.mode == "sampled"
        assert np.allclose(counts.counts, n)

    def test_fallback_when_sample_would_exceed_n(self):
        n = 50
        data = np.arange(n)
        gen = np.random.default_rng(1)
        pred = GraphPredicate(random_graph(gen, n, 0.5))
        sampled = friend_counts_sampled(data, pred, xi=0.05, delta=0.01, rng=RandomSource(0))
        exact = friend_counts_exact(data, pred)
        assert sampled.mode == "exact"
        assert np.array_equal(sampled.counts, exact.counts)

    def test_half_friends_rarely_estimated_above_shift(self):
        # An element with at most half the dataset as friends should clear
        # the shifted center only with probability below delta.
        n, xi, delta = 60, 0.3, 0.05
        m = math.ceil(math.log(n / delta) / (2 * xi**2))
        assert m < n
        adj = np.zeros((n, n), dtype=bool)
        adj[0, : n // 2] = True
        adj[: n // 2, 0] = True
        adj |= adj.T
        np.fill_diagonal(adj, True)
        pred = GraphPredicate(adj)
        root = RandomSource(17)
        exceed = 0
        trials = 10_000
        for i in range(trials):
            counts = friend_counts_sampled(np.arange(n), pred, xi, delta, root.child(i))
            if counts.centered()[0] > 0:
                exceed += 1
        bound = math.exp(-2 * xi**2 * m)  # analytic tail for a half-friend element
        assert bound <= delta
        slack = 3 * math.sqrt(trials * delta * (1 - delta))
        assert exceed <= delta * trials + slack

    def test_xi_domain(self):
        with pytest.raises(ValueError):
            friend_counts_sampled(np.arange(3), complete_graph(3), 0.5, 0.1, RandomSource(0))


class TestBasicFilter:
    def test_complete_keeps_all_deterministically(self):
        sel = basic_filter(np.arange(8), complete_graph(8), 0.0, RandomSource(0))
        assert np.all(sel.probs == 1.0)
        assert np.all(sel.keep)

    def test_midrange_probability(self):
        # 10 elements, alpha = 0, one element with 8 friends: p = (8-5)/5.
        adj = np.eye(10, dtype=bool)
        adj[0, 1:8] = adj[1:8, 0] = True
        adj[1:8, 1:8] = True
        pred = GraphPredicate(adj)
        sel = basic_filter(np.arange(10), pred, 0.0, RandomSource(0))
        assert sel.probs[0] == pytest.approx(0.6)

    def test_half_or_fewer_never_kept(self):
        n = 10
        adj = np.eye(n, dtype=bool)
        adj[0, 1:5] = adj[1:5, 0] = True  # element 0 has 5 = n/2 friends
        pred = GraphPredicate(adj)
        for seed in range(50):
            sel = basic_filter(np.arange(n), pred, 0.0, RandomSource(seed))
            assert sel.probs[0] == 0.0
            assert not sel.keep[0]

    def test_alpha_domain(self):
        with pytest.raises(ValueError):
            basic_filter(np.arange(3), complete_graph(3), 0.5, RandomSource(0))

    def test_keep_frequency_tracks_probability(self):
        adj = np.eye(10, dtype=bool)
        adj[0, 1:8] = adj[1:8, 0] = True
        adj[1:8, 1:8] = True
        pred = GraphPredicate(adj)
        root = RandomSource(5)
        trials = 10_000
        kept = sum(
            basic_filter(np.arange(10), pred, 0.0, root.child(i)).keep[0]
            for i in range(trials)
        )
        p = 0.6
        assert abs(kept - p * trials) <= 3 * math.sqrt(trials * p * (1 - p))


class TestStability:
    def test_l1_shift_bound_random_graphs(self):
        # Sharp bound: the keep probability has slope 2/((1-2a) n) in the
        # friend count and each count shifts by at most 1 across n-1 shared
        # elements, so the L1 shift is at most 2/(1-2a) * (n-1)/n.
        gen = np.random.default_rng(123)
        for _ in range(300):
            n = int(gen.integers(2, 50))
            alpha = float(gen.choice([0.0, 0.1, 0.25, 0.4]))
            pred = GraphPredicate(random_graph(gen, n, float(gen.random())))
            j = int(gen.integers(n))
            ids = np.arange(n)
            probs_full = basic_filter(ids, pred, alpha, RandomSource(0)).probs
            probs_less = basic_filter(np.delete(ids, j), pred, alpha, RandomSource(0)).probs
            l1 = np.abs(np.delete(probs_full, j) - probs_less).sum()
            assert l1 <= (2.0 / (1.0 - 2.0 * alpha)) * (n - 1) / n + 1e-9

    def test_l1_shift_can_exceed_half_the_sharp_bound(self):
        # Witness that the ramp's factor-2 slope is real: an isolated
        # element plus a 4-cycle shifts the probabilities by 1.2 in L1.
        adj = np.eye(5, dtype=bool)
        for a, b in [(1, 2), (2, 3), (3, 4), (4, 1)]:
            adj[a, b] = adj[b, a] = True
        pred = GraphPredicate(adj)
        p_full = basic_filter(np.arange(5), pred, 0.0, RandomSource(0)).probs
        p_less = basic_filter(np.arange(1, 5), pred, 0.0, RandomSource(0)).probs
        assert np.abs(p_full[1:] - p_less).sum() == pytest.approx(1.2)


class TestZcdpFilter:
    def test_noise_free_threshold_closed_form(self):
        n, rho, delta = 100, 1.0, 1e-8
        gen = np.random.default_rng(0)
        adj = random_graph(gen, n, 0.7)
        pred = GraphPredicate(adj)
        sel = zcdp_filter(np.arange(n), pred, rho, delta, RandomSource(0, noise_free=True))
        n_hat = n + math.sqrt(math.log(2 / delta) / (0.1 * rho))
        threshold = math.sqrt(n_hat * math.log(2 * n_hat / delta) / (4 * 0.9 * rho)) + 0.5
        z = adj.sum(axis=1) - n / 2
        assert np.array_equal(sel.keep, z >= threshold)

    def test_complete_keeps_all_with_high_probability(self):
        n = min_n_for_completeness(0.0, 0.1, 1e-8, 1.0)
        pred = complete_graph(n)
        kept_all = sum(
            np.all(zcdp_filter(np.arange(n), pred, 1.0, 1e-8, RandomSource(seed)).keep)
            for seed in range(200)
        )
        assert kept_all >= 0.86 * 200

    def test_singleton_rarely_kept(self):
        # A lone element has count 1, centered value 1/2: far below threshold.
        kept = sum(
            zcdp_filter(
                np.array([[0.0]]), DistancePredicate(1.0), 1.0, 0.05, RandomSource(seed)
            ).keep[0]
            for seed in range(2000)
        )
        assert kept <= 0.05 * 2000 + 3 * math.sqrt(2000 * 0.05 * 0.95)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            zcdp_filter(np.arange(3), complete_graph(3), 0.0, 0.1, RandomSource(0))
        with pytest.raises(ValueError):
            zcdp_filter(np.arange(3), complete_graph(3), 1.0, 0.0, RandomSource(0))


class TestFriendliness:
    def _cores_share_friends(self, adj, keep_full, keep_less, j):
        """Every kept pair across both cores must share a friend among the
        shared elements (all but j)."""
        n = adj.shape[0]
        shared = [i for i in range(n) if i != j]
        kept_a = [i for i in range(n) if keep_full[i]]
        less_ids = [i for i in range(n) if i != j]
        kept_b = [less_ids[i] for i in range(n - 1) if keep_less[i]]
        for a in kept_a:
            for b in kept_b:
                if not any(adj[a, s] and adj[b, s] for s in shared):
                    return False
        return True

    def test_basic_filter_union_always_friendly(self):
        gen = np.random.default_rng(99)
        for trial in range(500):
            n = int(gen.integers(2, 30))
            adj = random_graph(gen, n, float(gen.random()))
            pred = GraphPredicate(adj)
            j = int(gen.integers(n))
            ids = np.arange(n)
            keep_full = basic_filter(ids, pred, 0.1, RandomSource(trial)).keep
            keep_less = basic_filter(
                np.delete(ids, j), pred, 0.1, RandomSource(trial + 10_000)
            ).keep
            assert self._cores_share_friends(adj, keep_full, keep_less, j)

    def test_zcdp_filter_union_friendly_with_rare_exceptions(self):
        gen = np.random.default_rng(7)
        delta = 0.05
        trials, violations = 500, 0
        for trial in range(trials):
            n = int(gen.integers(5, 30))
            adj = random_graph(gen, n, float(gen.random()))
            pred = GraphPredicate(adj)
            j = int(gen.integers(n))
            ids = np.arange(n)
            keep_full = zcdp_filter(ids, pred, 1.0, delta, RandomSource(trial)).keep
            keep_less = zcdp_filter(
                np.delete(ids, j), pred, 1.0, delta, RandomSource(trial + 10_000)
            ).keep
            if not self._cores_share_friends(adj, keep_full, keep_less, j):
                violations += 1
        bound = 2 * delta * trials
        assert violations <= bound + 3 * math.sqrt(trials * 2 * delta * (1 - 2 * delta))


class TestCoreWrappers:
    def test_friendly_core_complete(self):
        data = np.zeros((48, 2))
        core = friendly_core(data, DistancePredicate(1.0), 1.0, 0.1, RandomSource(0))
        assert core.shape == (48, 2)

    def test_friendly_core_empty_result_ok(self):
        data = np.array([[0.0], [100.0], [200.0], [300.0]])
        core = friendly_core(
            data, DistancePredicate(1.0), 1.0, 0.05, RandomSource(0, noise_free=True)
        )
        assert core.shape[0] == 0

    def test_friendly_core_dp_outliers_dropped(self):
        data = np.vstack([np.zeros((20, 1)), [[500.0]]])
        core = friendly_core_dp(data, DistancePredicate(1.0), 0.0, RandomSource(0))
        assert 500.0 not in core

    def test_preserves_input_order(self):
        data = np.arange(48, dtype=float).reshape(-1, 1) * 1e-6
        core = friendly_core(data, DistancePredicate(1.0), 1.0, 0.1, RandomSource(1))
        assert np.all(np.diff(core[:, 0]) > 0)


class TestMinN:
    def test_hand_values(self):
        assert min_n_for_completeness(0.0, 0.1, 0.1, 1.0) == 48
        assert min_n_for_completeness(0.25, 0.1, 0.1, 1.0) == 237

    def test_clamped_at_one(self):
        assert min_n_for_completeness(0.0, 0.5, 0.5, 1e9) == 1

    def test_domain(self):
        with pytest.raises(ValueError):
            min_n_for_completeness(0.6, 0.1, 0.1, 1.0)


class TestDpParadigmCost:
    def test_small_eps_limit(self):
        out = dp_paradigm_cost(DpBudget(eps=1e-9, delta=0.0), 0.0)
        assert out.eps == pytest.approx(2e-9, rel=1e-6)
        assert out.delta == 0.0

    def test_hand_value_alpha_zero(self):
        out = dp_paradigm_cost(DpBudget(eps=0.1, delta=1e-6), 0.0)
        assert out.eps == pytest.approx(2 * (math.e**0.1 - 1))
        assert out.delta == pytest.approx(2e-6 * math.exp(0.1 + out.eps))

    def test_hand_value_alpha_quarter(self):
        out = dp_paradigm_cost(DpBudget(eps=1.0, delta=0.0), 0.25)
        assert out.eps == pytest.approx(3 * (math.e - 1))
