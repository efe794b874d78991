"""Base dueling-bandit learner: play distribution, gap estimator, evictions.

The learner keeps a soft-eliminated candidate set, plays an explore/exploit
mixture over it, builds importance-weighted estimates of weighted-Borda gaps,
and evicts arms whose estimated gap over some trailing interval crosses a
time-dependent threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import scan_evictions

# eviction threshold multiplier is evict_const * log(horizon); the theory
# value mirrors the concentration bound constant, the empirical value is
# calibrated for signal at simulation scale
THEORY_EVICT_CONST = 10.0 * (math.e - 1.0)
EMPIRICAL_EVICT_CONST = 0.4
PRESETS = {"theory": THEORY_EVICT_CONST, "empirical": EMPIRICAL_EVICT_CONST}


@dataclass
class Specification:
    """Weight family and schedule constants for the learner.

    kind "fixed": a single known weight; exploration rate K^(1/3) t^(-1/3),
    interval thresholds scale with K^(1/3) and variance constant K.
    kind "unknown": all K point masses; exploration rate K^(2/3) t^(-1/3),
    thresholds scale with K^(2/3) and variance constant K^2.
    """

    kind: str
    weights: np.ndarray  # (n_w, K), each row on the simplex
    evict_const: float = THEORY_EVICT_CONST
    k: int = field(init=False)
    n_w: int = field(init=False)
    gamma_coef: float = field(init=False)
    coef_len: float = field(init=False)
    coef_var: float = field(init=False)
    explore_mix: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "unknown"):
            raise ValueError(f"unknown specification kind {self.kind!r}")
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        self.n_w, self.k = self.weights.shape
        k = float(self.k)
        if self.kind == "fixed":
            self.gamma_coef = k ** (1.0 / 3.0)
            self.coef_len = k ** (1.0 / 3.0)
            self.coef_var = k
        else:
            self.gamma_coef = k ** (2.0 / 3.0)
            self.coef_len = k ** (2.0 / 3.0)
            self.coef_var = k * k
        # uniform mixture over the weight family, used for exploration
        self.explore_mix = self.weights.mean(axis=0)

    @classmethod
    def fixed(cls, w: np.ndarray, evict_const: float = THEORY_EVICT_CONST) -> "Specification":
        w = np.asarray(w, dtype=np.float64)
        return cls("fixed", w[None, :], evict_const)

    @classmethod
    def unknown(cls, k: int, evict_const: float = THEORY_EVICT_CONST) -> "Specification":
        return cls("unknown", np.eye(k), evict_const)

    def learning_rate(self, elapsed: int) -> float:
        """Exploration probability after `elapsed` rounds of this instance."""
        if elapsed <= 0:
            return 1.0
        return min(self.gamma_coef * float(elapsed) ** (-1.0 / 3.0), 1.0)


@dataclass
class BaseAlgState:
    """One base-learner instance on the replay stack."""

    t_start: int
    m0: int
    active: np.ndarray  # (K,) bool

    def expired(self, t: int) -> bool:
        return t > self.t_start + self.m0


def play_distribution(spec: Specification, active: np.ndarray, eta: float) -> np.ndarray:
    """(1 - eta) uniform over the active set plus eta times the explore mixture.

    Guarantees q[a] >= eta * explore_mix[a] for every arm.
    """
    n_active = int(active.sum())
    if n_active == 0:
        raise ValueError("active set is empty; restart handling must intervene")
    q = np.where(active, (1.0 - eta) / n_active, 0.0)
    q = q + eta * spec.explore_mix
    return q


def sample_pair(q: np.ndarray, u: np.ndarray) -> tuple[int, int]:
    """Two i.i.d. draws from q via inverse transform; self-duels allowed."""
    cum = np.cumsum(q)
    i = int(np.searchsorted(cum, u[0] * cum[-1], side="right"))
    j = int(np.searchsorted(cum, u[1] * cum[-1], side="right"))
    k = q.size - 1
    return min(i, k), min(j, k)


def estimate_wbs(weights: np.ndarray, q: np.ndarray, i: int, j: int, o: int) -> np.ndarray:
    """Importance-weighted weighted-Borda gap estimates, shape (n_w, K).

    Row a is nonzero only when a == i: weights[:, j] * (o - 1/2) / (q_i q_j).
    Unbiased for the gap-form score of every arm under any q positive on
    the played pair.
    """
    if q[i] <= 0.0 or q[j] <= 0.0:
        raise ValueError("played a pair with zero play probability")
    est = np.zeros_like(weights)
    est[:, i] = weights[:, j] * (o - 0.5) / (q[i] * q[j])
    return est


def eviction_threshold(spec: Specification, eta_inv: np.ndarray, s1: int, s2: int,
                       horizon: int) -> float:
    """Full eviction threshold C log(T) F([s1, s2]) for inspection and tests."""
    seg = eta_inv[s1:s2 + 1]
    f = max(
        spec.coef_len * float(s2 - s1) ** (2.0 / 3.0),
        math.sqrt(spec.coef_var * float(seg.sum())) + spec.k * float(seg.max()),
    )
    return spec.evict_const * math.log(horizon) * f


@dataclass
class EvictionRecord:
    round: int
    arm: int
    s1: int
    s2: int
    weight_index: int
    statistic: float
    threshold: float
    scope: str  # "local" or "global"
    depth: int


def run_eviction_scan(spec: Specification, prefix: np.ndarray,
                      last_inactive: np.ndarray, eta_inv: np.ndarray, t: int,
                      lo: int, cand_mask: np.ndarray, mult: float, scope: str,
                      depth: int, out: list[EvictionRecord]) -> None:
    """Scan all intervals ending at t; clears evicted arms from cand_mask."""
    for wi in range(spec.n_w):
        evict, s1s, stats, thrs = scan_evictions(
            prefix[wi], last_inactive, eta_inv, t, lo, cand_mask, mult,
            spec.coef_len, spec.coef_var, spec.k,
        )
        for a in np.flatnonzero(evict):
            a = int(a)
            out.append(EvictionRecord(
                round=t, arm=a, s1=int(s1s[a]), s2=t, weight_index=wi,
                statistic=float(stats[a]), threshold=float(thrs[a]),
                scope=scope, depth=depth,
            ))
            cand_mask[a] = False
