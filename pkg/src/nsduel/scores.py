"""Borda and weighted-Borda scores, winners, and regret accounting."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .preferences import ATOL, NoCondorcetWinnerError, condorcet_winner

# cumulative Condorcet regret is undefined on rounds without a Condorcet
# winner; those rounds carry this sentinel in the ledger
NO_WINNER = float("nan")


def uniform_weight(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def point_mass(k: int, a: int) -> np.ndarray:
    w = np.zeros(k)
    w[a] = 1.0
    return w


def validate_weight(w: np.ndarray, k: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("weight must be a vector")
    if k is not None and w.size != k:
        raise ValueError(f"weight has {w.size} entries, expected {k}")
    if w.min() < -ATOL or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weight must be a probability vector over the arms")
    return w


def parse_weight_spec(spec: str, k: int) -> np.ndarray:
    """Parse 'uniform', 'point:IDX', or a comma-separated probability vector."""
    if spec == "uniform":
        return uniform_weight(k)
    if spec.startswith("point:"):
        a = int(spec.split(":", 1)[1])
        if not 0 <= a < k:
            raise ValueError(f"point mass index {a} outside 0..{k - 1}")
        return point_mass(k, a)
    parts = [float(x) for x in spec.split(",")]
    return validate_weight(np.array(parts), k)


def simplex_grid(k: int, step: float) -> np.ndarray:
    """All probability vectors over k arms with entries on a step grid."""
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-12:
        raise ValueError("step must divide 1 exactly")
    out: list[list[int]] = []

    def rec(prefix: list[int], remaining: int) -> None:
        if len(prefix) == k - 1:
            out.append(prefix + [remaining])
            return
        for c in range(remaining + 1):
            rec(prefix + [c], remaining - c)

    rec([], n)
    return np.asarray(out, dtype=np.float64) * step


def borda_score(p: np.ndarray) -> np.ndarray:
    """b(a) = (1/K) sum_a' P[a, a'], self-duel included."""
    return p.mean(axis=1)


def borda_winner(p: np.ndarray) -> int:
    return int(np.argmax(borda_score(p)))


def weighted_borda_gap(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gap-form weighted score: sum_a' (P[a, a'] - 1/2) * w[a'].

    The uniform weight recovers the Borda score minus 1/2; a point mass on
    arm x recovers (P[a, x] - 1/2).
    """
    return (p - 0.5) @ w


def weighted_winner(p: np.ndarray, w: np.ndarray) -> int:
    return int(np.argmax(weighted_borda_gap(p, w)))


def borda_regret_inc(p: np.ndarray, i: int, j: int) -> float:
    b = borda_score(p)
    return float(b.max() - 0.5 * (b[i] + b[j]))


def condorcet_regret_inc(p: np.ndarray, i: int, j: int) -> float:
    c = condorcet_winner(p)
    if c is None:
        raise NoCondorcetWinnerError("no Condorcet winner at this round")
    return float(0.5 * (p[c, i] + p[c, j] - 1.0))


def weighted_regret_inc(p: np.ndarray, w: np.ndarray, i: int, j: int) -> float:
    s = weighted_borda_gap(p, w)
    return float(s.max() - 0.5 * (s[i] + s[j]))


@dataclass
class RegretLedger:
    """Per-round duel log with Borda and Condorcet regret accumulators.

    Rounds are 1-indexed; index 0 of each array is unused padding.
    """

    horizon: int
    t_arr: np.ndarray = field(init=False)
    i_arr: np.ndarray = field(init=False)
    j_arr: np.ndarray = field(init=False)
    o_arr: np.ndarray = field(init=False)
    borda_inc: np.ndarray = field(init=False)
    condorcet_inc: np.ndarray = field(init=False)
    cum_borda: np.ndarray = field(init=False)
    cum_condorcet: np.ndarray = field(init=False)
    episode: np.ndarray = field(init=False)
    depth: np.ndarray = field(init=False)
    active_set_size: np.ndarray = field(init=False)
    rounds_without_cw: int = 0
    _filled: int = 0

    def __post_init__(self) -> None:
        n = self.horizon + 1
        self.t_arr = np.arange(n)
        self.i_arr = np.zeros(n, dtype=np.int64)
        self.j_arr = np.zeros(n, dtype=np.int64)
        self.o_arr = np.zeros(n, dtype=np.int64)
        self.borda_inc = np.zeros(n)
        self.condorcet_inc = np.full(n, NO_WINNER)
        self.cum_borda = np.zeros(n)
        self.cum_condorcet = np.zeros(n)
        self.episode = np.zeros(n, dtype=np.int64)
        self.depth = np.zeros(n, dtype=np.int64)
        self.active_set_size = np.zeros(n, dtype=np.int64)

    def update(self, t: int, p: np.ndarray, i: int, j: int, o: int,
               episode: int, depth: int, active_set_size: int) -> None:
        if t != self._filled + 1:
            raise ValueError(f"ledger rounds must be recorded in order, got {t}")
        self.i_arr[t] = i
        self.j_arr[t] = j
        self.o_arr[t] = o
        b = borda_regret_inc(p, i, j)
        self.borda_inc[t] = b
        self.cum_borda[t] = self.cum_borda[t - 1] + b
        try:
            c = condorcet_regret_inc(p, i, j)
        except NoCondorcetWinnerError:
            c = NO_WINNER
            self.rounds_without_cw += 1
        self.condorcet_inc[t] = c
        # cumulative Condorcet regret skips rounds with no winner
        self.cum_condorcet[t] = self.cum_condorcet[t - 1] + (0.0 if np.isnan(c) else c)
        self.episode[t] = episode
        self.depth[t] = depth
        self.active_set_size[t] = active_set_size
        self._filled = t

    def final_borda_regret(self) -> float:
        return float(self.cum_borda[self._filled])

    def final_condorcet_regret(self) -> float:
        return float(self.cum_condorcet[self._filled])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,i,j,o,borda_inc,condorcet_inc,cum_borda,cum_condorcet,"
                  "episode,depth,active_set_size\n")
        for t in range(1, self._filled + 1):
            c = self.condorcet_inc[t]
            cs = "nan" if np.isnan(c) else repr(float(c))
            buf.write(
                f"{t},{self.i_arr[t]},{self.j_arr[t]},{self.o_arr[t]},"
                f"{float(self.borda_inc[t])!r},{cs},{float(self.cum_borda[t])!r},"
                f"{float(self.cum_condorcet[t])!r},{self.episode[t]},{self.depth[t]},"
                f"{self.active_set_size[t]}\n"
            )
        return buf.getvalue()
