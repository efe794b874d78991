"""Agreement between the compiled-loop and vectorized kernel backends."""

import numpy as np

from nsduel._kernels import (BACKEND, NUMBA_ENV_FLAG, _approx_winner_loop,
                             _phase_scan_loop, _scan_evictions_loop,
                             approx_winner_numpy, approx_winner_phases,
                             phase_scan, phase_scan_numpy, scan_evictions,
                             scan_evictions_numpy)
from nsduel.preferences import gen_random_piecewise


def test_backend_flag_exported():
    assert BACKEND in ("numba", "numpy")
    assert NUMBA_ENV_FLAG == "NSDUEL_NO_NUMBA"


def _eviction_inputs(rng, n_arms, t):
    prefix = np.cumsum(rng.normal(size=(n_arms, t + 1)), axis=1)
    prefix[:, 0] = 0.0
    eta_inv = 1.0 + 4.0 * rng.random(t + 1)
    last_inactive = rng.integers(0, max(t // 2, 1), size=n_arms).astype(np.int64)
    cand = rng.random(n_arms) < 0.8
    return prefix, last_inactive, eta_inv, cand


class TestEvictionScanBackends:
    def test_all_three_implementations_agree(self):
        rng = np.random.default_rng(21)
        for trial in range(40):
            n_arms = int(rng.integers(2, 6))
            t = int(rng.integers(5, 60))
            lo = int(rng.integers(1, t + 1))
            prefix, last_inactive, eta_inv, cand = _eviction_inputs(rng, n_arms, t)
            mult = 0.1 + rng.random()
            args = (prefix, last_inactive, eta_inv, t, lo, cand, mult,
                    float(n_arms) ** (1 / 3), float(n_arms), n_arms)
            outs = [
                fn(*(a.copy() if isinstance(a, np.ndarray) else a for a in args))
                for fn in (scan_evictions, scan_evictions_numpy,
                           _scan_evictions_loop)
            ]
            for other in outs[1:]:
                assert np.array_equal(outs[0][0], other[0])  # evict mask
                assert np.array_equal(outs[0][1], other[1])  # s1
                assert np.allclose(outs[0][2], other[2])     # statistic
                assert np.allclose(outs[0][3], other[3])     # threshold


class TestPhaseScanBackends:
    def test_agree_on_random_gap_prefixes(self):
        rng = np.random.default_rng(22)
        for trial in range(25):
            n_w = int(rng.integers(1, 4))
            n_arms = int(rng.integers(2, 5))
            t = int(rng.integers(10, 120))
            gaps = rng.random((n_w, n_arms, t + 1)) * rng.random()
            gaps[:, :, 0] = 0.0
            # random arms get zero gap stretches so phases vary
            for a in range(n_arms):
                if rng.random() < 0.5:
                    gaps[:, a, : t // 2] = 0.0
            prefix = np.cumsum(gaps, axis=2)
            coef = 0.5 + 2.0 * rng.random()
            a = phase_scan(prefix, coef)
            b = phase_scan_numpy(prefix, coef)
            c = _phase_scan_loop(prefix, coef)
            assert np.array_equal(a, b)
            assert np.array_equal(a, c)


class TestApproxWinnerBackends:
    def test_agree_on_random_sequences(self):
        rng = np.random.default_rng(23)
        for trial in range(15):
            k = int(rng.integers(2, 5))
            lens = [int(rng.integers(10, 40)) for _ in range(int(rng.integers(1, 5)))]
            seq = gen_random_piecewise(k, lens, rng, gic=True)
            pmats = np.zeros((seq.horizon + 1, k, k))
            winners = np.zeros(seq.horizon + 1, np.int64)
            t = 1
            for length, p in seq.segments:
                pmats[t:t + length] = p
                winners[t:t + length] = int(np.argmax(p.sum(axis=1)))
                t += length
            a = approx_winner_phases(pmats, winners, k)
            b = approx_winner_numpy(pmats, winners, k)
            c = _approx_winner_loop(pmats, winners, k)
            for other in (b, c):
                assert np.array_equal(a[0], other[0])
                assert np.array_equal(a[1], other[1])
