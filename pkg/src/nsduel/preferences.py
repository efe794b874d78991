"""Preference matrices, structural conditions, and environment generators.

A preference matrix P is a K x K float64 array where P[i, j] is the
probability that arm i wins a duel against arm j. Rounds are 1-indexed;
arms are 0-indexed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .rng import keyed_uniform

ATOL = 1e-9
MAX_ORDER_SEARCH_K = 10


class PreferenceMatrixError(ValueError):
    """Raised when an array is not a valid preference matrix."""


class NoCondorcetWinnerError(ValueError):
    """Raised when an operation requires a Condorcet winner and none exists."""


def validate_preference_matrix(p: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Check shape, range, skew-consistency and diagonal; return as float64."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise PreferenceMatrixError(f"expected a square matrix, got shape {p.shape}")
    if p.shape[0] < 2:
        raise PreferenceMatrixError("need at least two arms")
    if not np.all(np.isfinite(p)):
        raise PreferenceMatrixError("matrix contains non-finite entries")
    if p.min() < -atol or p.max() > 1.0 + atol:
        raise PreferenceMatrixError("entries must lie in [0, 1]")
    if not np.allclose(p + p.T, 1.0, atol=atol):
        raise PreferenceMatrixError("P[i, j] + P[j, i] must equal 1 for all pairs")
    if not np.allclose(np.diag(p), 0.5, atol=atol):
        raise PreferenceMatrixError("diagonal entries must equal 1/2")
    return p


def condorcet_winner(p: np.ndarray, atol: float = ATOL) -> int | None:
    """Smallest arm beating every other arm with probability >= 1/2, or None."""
    k = p.shape[0]
    for a in range(k):
        if np.all(p[a] >= 0.5 - atol):
            return a
    return None


def gic_winner_set(p: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Arms that maximize P[., a'] simultaneously for every column a'.

    Non-empty exactly when the generalized identifiability condition holds.
    Ties within a column keep all maximizing arms.
    """
    k = p.shape[0]
    ok = np.ones(k, dtype=bool)
    for col in range(k):
        ok &= p[:, col] >= p[:, col].max() - atol
    return np.flatnonzero(ok)


def check_gic(p: np.ndarray, atol: float = ATOL) -> bool:
    return gic_winner_set(p, atol).size > 0


def _order_search(p: np.ndarray, feasible_append, atol: float) -> list[int] | None:
    """Depth-first search for a total order of the arms.

    feasible_append(order, c) decides whether arm c may be appended to the
    partial order. Returns a full order or None.
    """
    k = p.shape[0]
    if k > MAX_ORDER_SEARCH_K:
        raise ValueError(f"order search supports at most {MAX_ORDER_SEARCH_K} arms, got {k}")
    order: list[int] = []
    used = [False] * k

    def rec() -> bool:
        if len(order) == k:
            return True
        for c in range(k):
            if used[c] or not feasible_append(order, c):
                continue
            used[c] = True
            order.append(c)
            if rec():
                return True
            order.pop()
            used[c] = False
        return False

    return list(order) if rec() else None


def check_sst(p: np.ndarray, atol: float = ATOL) -> tuple[bool, list[int] | None]:
    """Strong stochastic transitivity.

    Searches for a total order such that P[i, k'] >= max(P[i, j], P[j, k'])
    whenever i precedes-or-equals j precedes-or-equals k' in the order
    (index repeats included, which forces P[i, j] >= 1/2 along the order).
    Returns (holds, witnessing order or None).
    """

    def feasible(order: list[int], c: int) -> bool:
        for pi, i in enumerate(order):
            if p[i, c] < 0.5 - atol:
                return False
            for j in order[pi:]:
                if p[i, c] < max(p[i, j], p[j, c]) - atol:
                    return False
        return True

    order = _order_search(p, feasible, atol)
    return (order is not None), order


def check_sti(p: np.ndarray, atol: float = ATOL) -> tuple[bool, list[int] | None]:
    """Stochastic triangle inequality.

    Searches for a total order with P[i, k'] <= P[i, j] + P[j, k'] for all
    order-respecting triples. Returns (holds, witnessing order or None).
    """

    def feasible(order: list[int], c: int) -> bool:
        for pi, i in enumerate(order):
            for j in order[pi:]:
                if p[i, c] > p[i, j] + p[j, c] + atol:
                    return False
        return True

    order = _order_search(p, feasible, atol)
    return (order is not None), order


@dataclass
class PreferenceSequence:
    """Piecewise-constant sequence of preference matrices over rounds 1..horizon."""

    segments: list[tuple[int, np.ndarray]]
    k: int = field(init=False)
    horizon: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("sequence needs at least one segment")
        mats = []
        lens = []
        for length, p in self.segments:
            if length < 1:
                raise ValueError("segment lengths must be positive")
            mats.append(validate_preference_matrix(p))
            lens.append(int(length))
        k = mats[0].shape[0]
        for m in mats:
            if m.shape[0] != k:
                raise ValueError("all segments must have the same number of arms")
        self.segments = list(zip(lens, mats))
        self.k = k
        self.horizon = sum(lens)
        # boundaries[i] = first round of segment i (1-indexed)
        self._starts = np.cumsum([1] + lens[:-1])
        self._ends = np.cumsum(lens)

    def segment_index(self, t: int) -> int:
        if t < 1 or t > self.horizon:
            raise ValueError(f"round {t} outside 1..{self.horizon}")
        return int(np.searchsorted(self._ends, t))

    def matrix_at(self, t: int) -> np.ndarray:
        return self.segments[self.segment_index(t)][1]

    def change_points(self) -> list[int]:
        """First round of every segment after the first."""
        return [int(s) for s in self._starts[1:]]

    def num_changes(self) -> int:
        """Rounds t >= 2 whose matrix differs from the previous round's."""
        n = 0
        for i in range(1, len(self.segments)):
            if not np.array_equal(self.segments[i][1], self.segments[i - 1][1]):
                n += 1
        return n

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "horizon": self.horizon,
                "segments": [
                    {"len": length, "matrix": [float(x) for x in p.ravel()]}
                    for length, p in self.segments
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PreferenceSequence":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid environment file: {exc}") from exc
        for key in ("k", "horizon", "segments"):
            if key not in obj:
                raise ValueError(f"environment file missing key {key!r}")
        k = int(obj["k"])
        segs = []
        for idx, seg in enumerate(obj["segments"]):
            if "len" not in seg or "matrix" not in seg:
                raise ValueError(f"segments[{idx}] must have 'len' and 'matrix'")
            flat = np.asarray(seg["matrix"], dtype=np.float64)
            if flat.size != k * k:
                raise ValueError(
                    f"segments[{idx}].matrix has {flat.size} entries, expected {k * k}"
                )
            segs.append((int(seg["len"]), flat.reshape(k, k)))
        seq = cls(segs)
        if seq.horizon != int(obj["horizon"]):
            raise ValueError(
                f"declared horizon {obj['horizon']} != sum of segment lengths {seq.horizon}"
            )
        return seq


def sample_duel(seq: PreferenceSequence, env_key: np.ndarray, t: int, i: int, j: int) -> int:
    """Outcome of a duel between arms i and j at round t; 1 means i wins.

    Deterministic given (stream key, t, i, j): the uniform is addressed by
    counter, not drawn from a shared sequential stream.
    """
    p = seq.matrix_at(t)[i, j]
    u = keyed_uniform(env_key, (t, i, j))
    return 1 if u < p else 0


# ---------------------------------------------------------------------------
# environment generators
# ---------------------------------------------------------------------------

def gen_stationary(p: np.ndarray, horizon: int) -> PreferenceSequence:
    return PreferenceSequence([(horizon, p)])


def gen_piecewise(segments: list[tuple[int, np.ndarray]]) -> PreferenceSequence:
    return PreferenceSequence(segments)


def borda_hardness_matrix(k: int, epsilon: float = 0.0, winner_arm: int = 0,
                          env_index: int = 0) -> np.ndarray:
    """Hard instances for Borda-style lower bounds.

    The base instance (env_index 0) splits the arms into a good half
    G = {0..k/2-1} and a bad half; every good arm beats every bad arm with
    probability 0.9 and all other duels are fair. Instance env_index != 0
    additionally lets winner_arm beat the bad half with 0.9 + epsilon,
    making it the unique best arm with margin epsilon.
    """
    if k % 2 != 0:
        raise ValueError("borda hardness instances require an even number of arms")
    if not 0.0 <= epsilon < 0.05:
        raise ValueError("epsilon must lie in [0, 0.05)")
    half = k // 2
    p = np.full((k, k), 0.5)
    p[:half, half:] = 0.9
    p[half:, :half] = 0.1
    if env_index != 0:
        if not 0 <= winner_arm < half:
            raise ValueError("winner_arm must be a good arm (index < k/2)")
        p[winner_arm, half:] = 0.9 + epsilon
        p[half:, winner_arm] = 0.1 - epsilon
    return validate_preference_matrix(p)


def gen_borda_hardness(k: int, horizon: int, epsilon: float = 0.0,
                       winner_arm: int = 0, env_index: int = 0) -> PreferenceSequence:
    return gen_stationary(borda_hardness_matrix(k, epsilon, winner_arm, env_index), horizon)


def conflict_3x3_matrix() -> np.ndarray:
    """3-arm instance whose Condorcet and Borda winners disagree."""
    return validate_preference_matrix(
        np.array(
            [
                [1 / 2, 3 / 5, 3 / 5],
                [2 / 5, 1 / 2, 1.0],
                [2 / 5, 0.0, 1 / 2],
            ]
        )
    )


def gen_conflict_3x3(horizon: int) -> PreferenceSequence:
    return gen_stationary(conflict_3x3_matrix(), horizon)


def gic_pair_matrices(epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Two near-identical 3-arm instances with disjoint identifiable winners."""
    if not 0.0 < epsilon < 0.05:
        raise ValueError("epsilon must lie in (0, 0.05)")
    p1 = np.array(
        [
            [0.5, 0.5, 0.9 + epsilon],
            [0.5, 0.5, 0.9],
            [0.1 - epsilon, 0.1, 0.5],
        ]
    )
    p2 = np.array(
        [
            [0.5, 0.5, 0.9],
            [0.5, 0.5, 0.9 + epsilon],
            [0.1, 0.1 - epsilon, 0.5],
        ]
    )
    return validate_preference_matrix(p1), validate_preference_matrix(p2)


def gen_gic_pair(epsilon: float, seg_len: int) -> PreferenceSequence:
    p1, p2 = gic_pair_matrices(epsilon)
    return PreferenceSequence([(seg_len, p1), (seg_len, p2)])


def gic_k_hardness_matrix(k: int, epsilon: float, a: int, a_prime: int) -> np.ndarray:
    """Base hardness instance with a single perturbed entry P[a, a'].

    Arm a must be good (first half) and a' bad (second half). The result
    satisfies the identifiability condition with unique winner a, and a is
    the weighted winner under the point mass on a' with margin epsilon.
    """
    p = borda_hardness_matrix(k, 0.0, 0, 0)
    half = k // 2
    if not (0 <= a < half and half <= a_prime < k):
        raise ValueError("need a good arm a and a bad arm a_prime")
    if not 0.0 < epsilon < 0.05:
        raise ValueError("epsilon must lie in (0, 0.05)")
    p[a, a_prime] = 0.9 + epsilon
    p[a_prime, a] = 0.1 - epsilon
    return validate_preference_matrix(p)


def gen_gic_k_hardness(k: int, horizon: int, epsilon: float, a: int,
                       a_prime: int) -> PreferenceSequence:
    return gen_stationary(gic_k_hardness_matrix(k, epsilon, a, a_prime), horizon)


def gen_winner_flip(k: int, horizon: int, strength: float = 0.9) -> PreferenceSequence:
    """Two equal segments; one arm beats the rest with `strength`, then another."""
    if horizon < 2:
        raise ValueError("horizon must be at least 2")

    def beats_all(w: int) -> np.ndarray:
        p = np.full((k, k), 0.5)
        p[w, :] = strength
        p[:, w] = 1.0 - strength
        p[w, w] = 0.5
        return validate_preference_matrix(p)

    first = horizon // 2
    return PreferenceSequence([(first, beats_all(0)), (horizon - first, beats_all(1))])


def random_matrix(k: int, rng: np.random.Generator) -> np.ndarray:
    """Random valid preference matrix."""
    p = rng.random((k, k))
    p = np.triu(p, 1)
    p = p + (1.0 - p.T) * (np.tri(k, k, -1))
    np.fill_diagonal(p, 0.5)
    return validate_preference_matrix(p)


def random_gic_matrix(k: int, rng: np.random.Generator) -> np.ndarray:
    """Random matrix forced to satisfy the identifiability condition.

    A designated winner's row is lifted to dominate every column.
    """
    p = random_matrix(k, rng)
    w = int(rng.integers(k))
    margin = 0.05 + 0.2 * rng.random()
    for col in range(k):
        if col == w:
            continue
        top = max(p[:, col].max(), 0.5)
        p[w, col] = min(top + margin, 1.0)
        p[col, w] = 1.0 - p[w, col]
    return validate_preference_matrix(p)


def gen_random_piecewise(k: int, seg_lens: list[int], rng: np.random.Generator,
                         gic: bool = False) -> PreferenceSequence:
    make = random_gic_matrix if gic else random_matrix
    return PreferenceSequence([(n, make(k, rng)) for n in seg_lens])
