"""Hot numerical kernels with two interchangeable backends.

Each kernel has a plain-loop implementation (compiled with numba when
available) and a vectorized numpy implementation. The environment variable
NSDUEL_NO_NUMBA=1 forces the numpy backend; the benchmark script imports
both directly to compare them.
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_ENV_FLAG = "NSDUEL_NO_NUMBA"

_disabled = os.environ.get(NUMBA_ENV_FLAG, "").strip().lower() in {"1", "true", "yes"}
try:
    if _disabled:
        raise ImportError("numba disabled by environment flag")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


# ---------------------------------------------------------------------------
# eviction scan
# ---------------------------------------------------------------------------

def _scan_evictions_loop(prefix, last_inactive, eta_inv, t, lo, cand_mask,
                         mult, coef_len, coef_var, k):
    """Check all intervals [s1, t] with s1 in [lo, t] for eviction triggers.

    prefix[a, s] holds the running sum of gap estimates for arm a up to
    round s (prefix[a, 0] = 0). An arm or comparator is only considered on
    intervals throughout which it was in the play set, i.e. when
    last_inactive[arm] < s1. For each evicted candidate the reported
    interval is the shortest triggering one (largest s1).
    """
    n_arms = prefix.shape[0]
    evict = np.zeros(n_arms, np.bool_)
    s1_out = np.zeros(n_arms, np.int64)
    stat_out = np.zeros(n_arms, np.float64)
    thr_out = np.zeros(n_arms, np.float64)
    run_sum = 0.0
    run_max = 0.0
    for s1 in range(t, lo - 1, -1):
        run_sum += eta_inv[s1]
        if eta_inv[s1] > run_max:
            run_max = eta_inv[s1]
        length = float(t - s1)
        f = coef_len * length ** (2.0 / 3.0)
        alt = math.sqrt(coef_var * run_sum) + k * run_max
        if alt > f:
            f = alt
        thr = mult * f
        best = -np.inf
        for a in range(n_arms):
            if last_inactive[a] < s1:
                v = prefix[a, t] - prefix[a, s1 - 1]
                if v > best:
                    best = v
        if best == -np.inf:
            continue
        for a in range(n_arms):
            if cand_mask[a] and not evict[a] and last_inactive[a] < s1:
                stat = best - (prefix[a, t] - prefix[a, s1 - 1])
                if stat >= thr:
                    evict[a] = True
                    s1_out[a] = s1
                    stat_out[a] = stat
                    thr_out[a] = thr
    return evict, s1_out, stat_out, thr_out


def scan_evictions_numpy(prefix, last_inactive, eta_inv, t, lo, cand_mask,
                         mult, coef_len, coef_var, k):
    n_arms = prefix.shape[0]
    s1 = np.arange(lo, t + 1)
    rev = eta_inv[lo:t + 1][::-1]
    run_sum = np.cumsum(rev)[::-1]
    run_max = np.maximum.accumulate(rev)[::-1]
    length = (t - s1).astype(np.float64)
    f = np.maximum(coef_len * length ** (2.0 / 3.0),
                   np.sqrt(coef_var * run_sum) + k * run_max)
    thr = mult * f
    sums = prefix[:, t][:, None] - prefix[:, s1 - 1]
    elig = last_inactive[:, None] < s1[None, :]
    best = np.where(elig, sums, -np.inf).max(axis=0)
    stat = best[None, :] - sums
    hit = ((stat >= thr[None, :]) & elig & cand_mask[:, None]
           & np.isfinite(best)[None, :])
    evict = hit.any(axis=1)
    s1_out = np.zeros(n_arms, np.int64)
    stat_out = np.zeros(n_arms, np.float64)
    thr_out = np.zeros(n_arms, np.float64)
    for a in np.flatnonzero(evict):
        col = int(np.flatnonzero(hit[a]).max())  # largest s1 = shortest interval
        s1_out[a] = s1[col]
        stat_out[a] = stat[a, col]
        thr_out[a] = thr[col]
    return evict, s1_out, stat_out, thr_out


# ---------------------------------------------------------------------------
# significant-shift phase detection
# ---------------------------------------------------------------------------

def _phase_scan_loop(prefix, coef):
    """Phase boundaries of the significant-shift recursion.

    prefix has shape (n_w, K, T + 1): running sums per weight and arm of the
    per-round gap to the round winner. An arm becomes flagged in the current
    phase once some interval [s1, s2] with s2 > s1 inside the phase has
    gap sum >= coef * (s2 - s1)^(2/3) for some weight. A boundary is
    committed at the first round where every arm is flagged.
    """
    n_w, n_arms, t1 = prefix.shape
    horizon = t1 - 1
    taus = np.zeros(horizon + 1, np.int64)
    n_taus = 0
    start = 1
    flags = np.zeros(n_arms, np.bool_)
    for t in range(1, horizon + 1):
        for a in range(n_arms):
            if flags[a]:
                continue
            sig = False
            for w in range(n_w):
                for s1 in range(start, t):
                    if (prefix[w, a, t] - prefix[w, a, s1 - 1]
                            >= coef * float(t - s1) ** (2.0 / 3.0)):
                        sig = True
                        break
                if sig:
                    break
            if sig:
                flags[a] = True
        if t > start:
            all_flagged = True
            for a in range(n_arms):
                if not flags[a]:
                    all_flagged = False
                    break
            if all_flagged:
                taus[n_taus] = t
                n_taus += 1
                start = t
                for a in range(n_arms):
                    flags[a] = False
    return taus[:n_taus]


def phase_scan_numpy(prefix, coef):
    n_w, n_arms, t1 = prefix.shape
    horizon = t1 - 1
    taus = []
    start = 1
    flags = np.zeros(n_arms, np.bool_)
    for t in range(1, horizon + 1):
        for a in range(n_arms):
            if flags[a]:
                continue
            s1 = np.arange(start, t)
            if s1.size == 0:
                continue
            thr = coef * (t - s1).astype(np.float64) ** (2.0 / 3.0)
            sums = prefix[:, a, t][:, None] - prefix[:, a, s1 - 1]
            if np.any(sums >= thr[None, :]):
                flags[a] = True
        if t > start and flags.all():
            taus.append(t)
            start = t
            flags[:] = False
    return np.asarray(taus, dtype=np.int64)


# ---------------------------------------------------------------------------
# approximate winner phase detection
# ---------------------------------------------------------------------------

def _approx_winner_loop(pmats, winners, k):
    """Phase boundaries and witnesses for approximate winner changes.

    pmats has shape (T + 1, K, K) (index 0 unused); winners[t] is the
    identifiable winner at round t. A candidate arm stays feasible for the
    current phase anchored at zeta while its preference row tracks the
    winner's row within (K^2 / (s - zeta))^(1/3) at every elapsed round s.
    A new phase opens at the first round with no feasible candidate; the
    witness is the smallest arm feasible through the previous round.
    """
    horizon = pmats.shape[0] - 1
    n_arms = pmats.shape[1]
    zetas = np.zeros(horizon + 1, np.int64)
    wits = np.zeros(horizon + 1, np.int64)
    n_out = 0
    zeta = 1
    feasible = np.ones(n_arms, np.bool_)
    for t in range(1, horizon + 1):
        if t <= zeta:
            continue
        tol = (float(k * k) / float(t - zeta)) ** (1.0 / 3.0)
        win = winners[t]
        witness = -1  # smallest arm feasible through the previous round
        any_left = False
        for cand in range(n_arms):
            if not feasible[cand]:
                continue
            if witness < 0:
                witness = cand
            ok = True
            for a in range(n_arms):
                d = pmats[t, win, a] - pmats[t, cand, a]
                if d < 0.0:
                    d = -d
                if d > tol:
                    ok = False
                    break
            feasible[cand] = ok
            if ok:
                any_left = True
        if not any_left:
            zetas[n_out] = t
            wits[n_out] = witness
            n_out += 1
            zeta = t
            for cand in range(n_arms):
                feasible[cand] = True
    return zetas[:n_out], wits[:n_out]


def approx_winner_numpy(pmats, winners, k):
    horizon = pmats.shape[0] - 1
    n_arms = pmats.shape[1]
    zetas = []
    wits = []
    zeta = 1
    feasible = np.ones(n_arms, np.bool_)
    for t in range(1, horizon + 1):
        if t <= zeta:
            continue
        tol = (float(k * k) / float(t - zeta)) ** (1.0 / 3.0)
        win = int(winners[t])
        dev = np.abs(pmats[t, win][None, :] - pmats[t]).max(axis=1)
        prev = feasible.copy()
        feasible &= dev <= tol
        if not feasible.any():
            zetas.append(t)
            wits.append(int(np.flatnonzero(prev).min()))
            zeta = t
            feasible[:] = True
    return (np.asarray(zetas, dtype=np.int64), np.asarray(wits, dtype=np.int64))


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    scan_evictions = njit(cache=True)(_scan_evictions_loop)
    phase_scan = njit(cache=True)(_phase_scan_loop)
    _approx_winner_jit = njit(cache=True)(_approx_winner_loop)

    def approx_winner_phases(pmats, winners, k):
        return _approx_winner_jit(pmats, winners, k)
else:
    scan_evictions = scan_evictions_numpy
    phase_scan = phase_scan_numpy
    approx_winner_phases = approx_winner_numpy

BACKEND = "numba" if HAVE_NUMBA else "numpy"
