"""Base learner: schedules, play distribution, estimator, eviction scans."""

import math

import numpy as np
import pytest

from nsduel.learner import (EMPIRICAL_EVICT_CONST, PRESETS,
                            THEORY_EVICT_CONST, BaseAlgState, EvictionRecord,
                            Specification, estimate_wbs, eviction_threshold,
                            play_distribution, run_eviction_scan, sample_pair)
from nsduel.preferences import random_matrix
from nsduel.scores import uniform_weight, weighted_borda_gap


class TestSpecification:
    def test_fixed_constants(self):
        spec = Specification.fixed(uniform_weight(8))
        assert spec.kind == "fixed"
        assert spec.n_w == 1
        assert spec.gamma_coef == pytest.approx(2.0)
        assert spec.coef_len == pytest.approx(2.0)
        assert spec.coef_var == pytest.approx(8.0)

    def test_unknown_constants(self):
        spec = Specification.unknown(8)
        assert spec.kind == "unknown"
        assert spec.n_w == 8
        assert np.array_equal(spec.weights, np.eye(8))
        assert spec.gamma_coef == pytest.approx(4.0)
        assert spec.coef_len == pytest.approx(4.0)
        assert spec.coef_var == pytest.approx(64.0)

    def test_explore_mix(self):
        assert np.allclose(Specification.unknown(4).explore_mix, 0.25)
        w = np.array([0.7, 0.2, 0.1])
        assert np.allclose(Specification.fixed(w).explore_mix, w)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            Specification("other", np.eye(2))

    def test_presets(self):
        assert PRESETS["theory"] == THEORY_EVICT_CONST
        assert PRESETS["empirical"] == EMPIRICAL_EVICT_CONST
        assert THEORY_EVICT_CONST == pytest.approx(10 * (math.e - 1))


class TestLearningRate:
    def test_fixed_hand_value(self):
        # K = 8: 8^(1/3) * 64^(-1/3) = 2 / 4 = 1/2
        spec = Specification.fixed(uniform_weight(8))
        assert spec.learning_rate(64) == pytest.approx(0.5)

    def test_unknown_hand_value(self):
        # K = 8: 8^(2/3) * 512^(-1/3) = 4 / 8 = 1/2
        assert Specification.unknown(8).learning_rate(512) == pytest.approx(0.5)

    def test_capped_at_one(self):
        spec = Specification.unknown(8)
        assert spec.learning_rate(0) == 1.0
        assert spec.learning_rate(1) == 1.0
        assert spec.learning_rate(10) == 1.0  # 4 * 10^(-1/3) > 1

    def test_monotone_decreasing(self):
        spec = Specification.fixed(uniform_weight(3))
        rates = [spec.learning_rate(t) for t in range(1, 200)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))


class TestPlayDistribution:
    def test_sums_to_one_and_floors(self):
        spec = Specification.fixed(uniform_weight(5))
        active = np.array([True, False, True, True, False])
        for eta in (0.05, 0.3, 1.0):
            q = play_distribution(spec, active, eta)
            assert q.sum() == pytest.approx(1.0)
            assert np.all(q >= eta * spec.explore_mix - 1e-15)

    def test_inactive_arms_get_exploration_mass_only(self):
        spec = Specification.fixed(uniform_weight(4))
        active = np.array([True, True, True, False])
        q = play_distribution(spec, active, 0.2)
        assert q[3] == pytest.approx(0.2 * 0.25)
        assert q[0] == pytest.approx(0.8 / 3 + 0.2 * 0.25)

    def test_empty_active_set_raises(self):
        spec = Specification.fixed(uniform_weight(3))
        with pytest.raises(ValueError):
            play_distribution(spec, np.zeros(3, dtype=bool), 0.5)


class TestSamplePair:
    def test_inverse_transform(self):
        q = np.array([0.5, 0.3, 0.2])
        assert sample_pair(q, np.array([0.1, 0.6])) == (0, 1)
        assert sample_pair(q, np.array([0.95, 0.49])) == (2, 0)

    def test_top_edge_clamped(self):
        q = np.array([0.5, 0.5])
        i, j = sample_pair(q, np.array([1.0 - 1e-16, 0.999999]))
        assert i in (0, 1) and j == 1

    def test_empirical_marginals(self):
        rng = np.random.default_rng(0)
        q = np.array([0.6, 0.1, 0.3])
        counts = np.zeros(3)
        for _ in range(4000):
            i, _ = sample_pair(q, rng.random(2))
            counts[i] += 1
        assert np.allclose(counts / 4000, q, atol=0.03)


class TestEstimator:
    def test_hand_example_two_arms(self):
        # uniform q on 2 arms, uniform weight, duel (0, 1) won by 0
        w = uniform_weight(2)[None, :]
        q = np.array([0.5, 0.5])
        est = estimate_wbs(w, q, 0, 1, 1)
        assert est[0, 0] == pytest.approx(1.0)
        assert est[0, 1] == 0.0

    def test_loss_gives_negative_estimate(self):
        w = uniform_weight(2)[None, :]
        q = np.array([0.5, 0.5])
        est = estimate_wbs(w, q, 0, 1, 0)
        assert est[0, 0] == pytest.approx(-1.0)

    def test_only_first_arm_row_is_touched(self):
        w = np.eye(3)
        q = np.array([0.2, 0.3, 0.5])
        est = estimate_wbs(w, q, 1, 2, 1)
        assert np.all(est[:, [0, 2]] == 0.0)
        assert est[2, 1] == pytest.approx(0.5 / (0.3 * 0.5))

    def test_zero_probability_pair_raises(self):
        w = uniform_weight(2)[None, :]
        with pytest.raises(ValueError):
            estimate_wbs(w, np.array([1.0, 0.0]), 0, 1, 1)

    def test_unbiased_by_enumeration(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            k = int(rng.integers(2, 5))
            p = random_matrix(k, rng)
            q = rng.random(k) + 0.05
            q /= q.sum()
            w = rng.random((2, k))
            w /= w.sum(axis=1, keepdims=True)
            expect = np.zeros((2, k))
            for i in range(k):
                for j in range(k):
                    for o in (0, 1):
                        pr = q[i] * q[j] * (p[i, j] if o else 1 - p[i, j])
                        expect += pr * estimate_wbs(w, q, i, j, o)
            target = np.stack([weighted_borda_gap(p, w[r]) for r in range(2)])
            assert np.abs(expect - target).max() < 1e-12


class TestEvictionThreshold:
    def test_hand_value_length_branch(self):
        # K = 8, interval length 64, eta = 1 throughout:
        # F = max(8^(1/3) * 64^(2/3), sqrt(8 * 65) + 8) = max(32, 30.8) = 32
        spec = Specification.fixed(uniform_weight(8), evict_const=1.0)
        eta_inv = np.ones(200)
        thr = eviction_threshold(spec, eta_inv, 100, 164, horizon=5000)
        assert thr == pytest.approx(math.log(5000) * 32.0)

    def test_variance_branch_dominates_for_large_eta_inv(self):
        spec = Specification.fixed(uniform_weight(8), evict_const=1.0)
        eta_inv = np.full(200, 9.0)
        thr = eviction_threshold(spec, eta_inv, 100, 164, horizon=5000)
        expect = math.sqrt(8 * 9 * 65) + 8 * 9  # 140.5 > 32
        assert thr == pytest.approx(math.log(5000) * expect)

    def test_scales_with_constant(self):
        a = Specification.fixed(uniform_weight(4), evict_const=1.0)
        b = Specification.fixed(uniform_weight(4), evict_const=2.5)
        eta_inv = np.ones(50)
        assert (eviction_threshold(b, eta_inv, 10, 20, 100)
                == pytest.approx(2.5 * eviction_threshold(a, eta_inv, 10, 20, 100)))


def oracle_scan(prefix, last_inactive, eta_inv, t, lo, cand_mask, mult,
                coef_len, coef_var, k):
    """Independent double-loop reimplementation of the eviction scan."""
    n = prefix.shape[0]
    out = {}
    for a in range(n):
        if not cand_mask[a]:
            continue
        for s1 in range(t, lo - 1, -1):  # shortest interval first
            if last_inactive[a] >= s1:
                break
            seg = eta_inv[s1:t + 1]
            f = max(coef_len * (t - s1) ** (2 / 3),
                    math.sqrt(coef_var * seg.sum()) + k * seg.max())
            best = -np.inf
            for b in range(n):
                if last_inactive[b] < s1:
                    best = max(best, prefix[b, t] - prefix[b, s1 - 1])
            stat = best - (prefix[a, t] - prefix[a, s1 - 1])
            if stat >= mult * f and a not in out:
                out[a] = (s1, stat, mult * f)
    return out


class TestEvictionScan:
    def _random_inputs(self, rng, n=4, t=30):
        prefix = np.cumsum(rng.normal(size=(n, t + 1)), axis=1)
        prefix[:, 0] = 0.0
        eta_inv = 1.0 + 3.0 * rng.random(t + 1)
        last_inactive = rng.integers(0, t // 2, size=n).astype(np.int64)
        last_inactive[rng.integers(n)] = 0
        return prefix, eta_inv, last_inactive

    def test_matches_oracle_on_random_histories(self):
        rng = np.random.default_rng(8)
        spec = Specification.fixed(uniform_weight(4), evict_const=1.0)
        for trial in range(30):
            prefix, eta_inv, last_inactive = self._random_inputs(rng)
            cand = np.ones(4, dtype=bool)
            mult = 0.2 + rng.random()
            records = []
            run_eviction_scan(spec, prefix[None, :, :], last_inactive, eta_inv,
                              30, 1, cand, mult, "local", 0, records)
            expect = oracle_scan(prefix, last_inactive, eta_inv, 30, 1,
                                 np.ones(4, dtype=bool), mult, spec.coef_len,
                                 spec.coef_var, spec.k)
            got = {r.arm: (r.s1, r.statistic, r.threshold) for r in records}
            assert set(got) == set(expect)
            for a in got:
                assert got[a][0] == expect[a][0]
                assert got[a][1] == pytest.approx(expect[a][1])
                assert got[a][2] == pytest.approx(expect[a][2])
            # evicted arms were cleared from the candidate mask
            assert all(not cand[a] for a in got)

    def test_record_fields(self):
        # one arm far behind a comparator triggers a global eviction
        spec = Specification.fixed(uniform_weight(2), evict_const=1.0)
        t = 20
        prefix = np.zeros((1, 2, t + 1))
        prefix[0, 0] = np.arange(t + 1) * 5.0  # strong leader
        eta_inv = np.ones(t + 1)
        cand = np.ones(2, dtype=bool)
        records = []
        run_eviction_scan(spec, prefix, np.zeros(2, dtype=np.int64), eta_inv,
                          t, 1, cand, 1.0, "global", 2, records)
        assert len(records) == 1
        rec = records[0]
        assert isinstance(rec, EvictionRecord)
        assert rec.arm == 1 and rec.round == t and rec.s2 == t
        assert rec.scope == "global" and rec.depth == 2
        assert rec.statistic >= rec.threshold
        assert not cand[1] and cand[0]


class TestBaseAlgState:
    def test_expiry(self):
        inst = BaseAlgState(t_start=10, m0=8, active=np.ones(2, dtype=bool))
        assert not inst.expired(18)
        assert inst.expired(19)
