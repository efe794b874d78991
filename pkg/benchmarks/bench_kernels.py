#!/usr/bin/env python3
"""Benchmark the compiled-loop kernels against their vectorized numpy twins.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]

With numba installed (and NSDUEL_NO_NUMBA unset) the loop variants are
jit-compiled; otherwise they run as plain Python and the numpy column is
the one that matters.
"""

import argparse
import timeit

import numpy as np

from nsduel._kernels import (BACKEND, approx_winner_numpy,
                             approx_winner_phases, phase_scan,
                             phase_scan_numpy, scan_evictions,
                             scan_evictions_numpy)
from nsduel.preferences import gen_random_piecewise


def bench(label, fn, args, repeat):
    fn(*args)  # warm-up / jit compile
    best = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
    print(f"  {label:<28s} {best * 1e3:10.3f} ms")
    return best


def eviction_case(k, t, rng):
    prefix = np.cumsum(rng.normal(size=(k, t + 1)), axis=1)
    prefix[:, 0] = 0.0
    eta_inv = 1.0 + 4.0 * rng.random(t + 1)
    last_inactive = np.zeros(k, dtype=np.int64)
    cand = np.ones(k, dtype=bool)
    return (prefix, last_inactive, eta_inv, t, 1, cand, 50.0,
            float(k) ** (1 / 3), float(k), k)


def phase_case(k, t, rng):
    gaps = 0.02 * rng.random((1, k, t + 1))
    gaps[:, :, 0] = 0.0
    return (np.cumsum(gaps, axis=2), float(k) ** (1 / 3))


def approx_case(k, t, rng):
    seq = gen_random_piecewise(k, [t // 2, t - t // 2], rng, gic=True)
    pmats = np.zeros((t + 1, k, k))
    winners = np.zeros(t + 1, np.int64)
    s = 1
    for length, p in seq.segments:
        pmats[s:s + length] = p
        winners[s:s + length] = int(np.argmax(p.sum(axis=1)))
        s += length
    return (pmats, winners, k)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {BACKEND}")

    for k, t in ((5, 2000), (8, 8000)):
        print(f"\neviction scan over all intervals, K={k}, t={t}:")
        case = eviction_case(k, t, rng)
        a = bench("loop backend", scan_evictions, case, args.repeat)
        b = bench("numpy backend", scan_evictions_numpy, case, args.repeat)
        print(f"  speedup (numpy / loop): {b / a:8.2f}x")

    for k, t in ((4, 1500), (6, 3000)):
        print(f"\nphase scan, K={k}, T={t}:")
        case = phase_case(k, t, rng)
        a = bench("loop backend", phase_scan, case, args.repeat)
        b = bench("numpy backend", phase_scan_numpy, case, args.repeat)
        print(f"  speedup (numpy / loop): {b / a:8.2f}x")

    for k, t in ((4, 5000),):
        print(f"\napproximate winner phases, K={k}, T={t}:")
        case = approx_case(k, t, rng)
        a = bench("loop backend", approx_winner_phases, case, args.repeat)
        b = bench("numpy backend", approx_winner_numpy, case, args.repeat)
        print(f"  speedup (numpy / loop): {b / a:8.2f}x")


if __name__ == "__main__":
    main()
