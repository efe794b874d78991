"""Non-stationarity measures for preference sequences.

All phase recursions share one convention: an interval [s1, s2] only
counts when s2 > s1 (a single round has threshold 0 and would otherwise
be trivially "significant" for every arm), sums include both endpoints,
and thresholds use (s2 - s1)^(2/3).

Each measure has a fast incremental implementation and a deliberately
naive *_oracle twin used for cross-checking; the oracles recompute
everything from scratch with explicit loops.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._kernels import approx_winner_phases, phase_scan
from .preferences import PreferenceSequence, condorcet_winner, gic_winner_set
from .scores import borda_score, point_mass, uniform_weight, validate_weight, weighted_borda_gap

DEFAULT_LIMIT = 5000


class MeasureLimitError(ValueError):
    """Raised when a sequence is longer than the configured compute limit."""


class GICViolationError(ValueError):
    """Raised when a measure requiring identifiable winners meets a round without one."""


def _check_limit(seq: PreferenceSequence, limit: int) -> None:
    if seq.horizon > limit:
        raise MeasureLimitError(
            f"horizon {seq.horizon} exceeds limit {limit}; raise the limit explicitly "
            "to accept the quadratic-per-phase cost"
        )


def _borda_gap_prefix(seq: PreferenceSequence) -> np.ndarray:
    """(1, K, T+1) running sums of per-round Borda gap to the round winner."""
    out = np.zeros((1, seq.k, seq.horizon + 1))
    t = 1
    for length, p in seq.segments:
        b = borda_score(p)
        gap = b.max() - b
        out[0, :, t:t + length] = gap[:, None]
        t += length
    return np.cumsum(out, axis=2)


def _weighted_gap_prefix(seq: PreferenceSequence, weights: np.ndarray) -> np.ndarray:
    """(n_w, K, T+1) running sums of weighted gap to the weighted winner."""
    n_w = weights.shape[0]
    out = np.zeros((n_w, seq.k, seq.horizon + 1))
    t = 1
    for length, p in seq.segments:
        for wi in range(n_w):
            s = weighted_borda_gap(p, weights[wi])
            gap = s.max() - s
            out[wi, :, t:t + length] = gap[:, None]
        t += length
    return np.cumsum(out, axis=2)


def _phases_from_taus(taus: np.ndarray) -> list[int]:
    return [1] + [int(t) for t in taus]


def significant_borda_shifts(seq: PreferenceSequence,
                             limit: int = DEFAULT_LIMIT) -> list[int]:
    """Phase starts of the significant Borda winner switch recursion."""
    _check_limit(seq, limit)
    prefix = _borda_gap_prefix(seq)
    taus = phase_scan(prefix, float(seq.k) ** (1.0 / 3.0))
    return _phases_from_taus(taus)


def skw(seq: PreferenceSequence, w: np.ndarray,
        limit: int = DEFAULT_LIMIT) -> list[int]:
    """Phase starts of significant winner switches for a known weight."""
    _check_limit(seq, limit)
    w = validate_weight(w, seq.k)
    prefix = _weighted_gap_prefix(seq, w[None, :])
    taus = phase_scan(prefix, float(seq.k) ** (1.0 / 3.0))
    return _phases_from_taus(taus)


def suw(seq: PreferenceSequence, limit: int = DEFAULT_LIMIT) -> list[int]:
    """Phase starts of significant winner switches over all weights.

    The per-interval criterion maximizes the gap sum over the weight
    simplex; by linearity the maximum sits at a vertex, so only the K
    point masses need to be scanned.
    """
    _check_limit(seq, limit)
    weights = np.stack([point_mass(seq.k, a) for a in range(seq.k)])
    prefix = _weighted_gap_prefix(seq, weights)
    taus = phase_scan(prefix, float(seq.k) ** (2.0 / 3.0))
    return _phases_from_taus(taus)


def _identifiable_winners(seq: PreferenceSequence) -> np.ndarray:
    """Smallest identifiable winner per round; error if any round has none."""
    winners = np.zeros(seq.horizon + 1, np.int64)
    t = 1
    for idx, (length, p) in enumerate(seq.segments):
        ws = gic_winner_set(p)
        if ws.size == 0:
            raise GICViolationError(
                f"segment {idx} has no identifiable winner; "
                "approximate winner changes are undefined"
            )
        winners[t:t + length] = ws[0]
        t += length
    return winners


def approx_winner_changes(seq: PreferenceSequence,
                          limit: int = DEFAULT_LIMIT) -> tuple[list[int], list[int]]:
    """Approximate winner change points and a witnessing arm per closed phase.

    Requires an identifiable winner at every round. Returns (phase starts,
    witnesses); witnesses[i] tracked the winner's row throughout phase i.
    """
    _check_limit(seq, limit)
    winners = _identifiable_winners(seq)
    pmats = np.zeros((seq.horizon + 1, seq.k, seq.k))
    t = 1
    for length, p in seq.segments:
        pmats[t:t + length] = p
        t += length
    zetas, wits = approx_winner_phases(pmats, winners, seq.k)
    return _phases_from_taus(zetas), [int(x) for x in wits]


def total_variation(seq: PreferenceSequence) -> float:
    """Sum over rounds of the largest per-pair change in P from the previous round."""
    total = 0.0
    for i in range(1, len(seq.segments)):
        prev = seq.segments[i - 1][1]
        cur = seq.segments[i][1]
        total += float(np.abs(cur - prev).max())
    return total


def winner_switch_counts(seq: PreferenceSequence) -> tuple[int, int]:
    """Phase counts induced by changes in Condorcet and Borda winner identity.

    A stationary sequence yields (1, 1). Rounds without a Condorcet winner
    are treated as a distinct identity.
    """
    s_c = 1
    s_b = 1
    prev_c: object = None
    prev_b: object = None
    for idx, (_, p) in enumerate(seq.segments):
        c = condorcet_winner(p)
        b = int(np.argmax(borda_score(p)))
        if idx > 0:
            if c != prev_c:
                s_c += 1
            if b != prev_b:
                s_b += 1
        prev_c, prev_b = c, b
    return s_c, s_b


# ---------------------------------------------------------------------------
# brute-force oracles
# ---------------------------------------------------------------------------

ORACLE_LIMIT = 600


def _oracle_gaps(seq: PreferenceSequence, w: np.ndarray | None) -> list[list[float]]:
    """Per-round gap lists [arm][t], computed from scratch per round."""
    gaps: list[list[float]] = [[0.0] * (seq.horizon + 1) for _ in range(seq.k)]
    for t in range(1, seq.horizon + 1):
        p = seq.matrix_at(t)
        scores = []
        for a in range(seq.k):
            if w is None:
                scores.append(sum(p[a]) / seq.k)
            else:
                scores.append(sum((p[a, x] - 0.5) * w[x] for x in range(seq.k)))
        top = max(scores)
        for a in range(seq.k):
            gaps[a][t] = top - scores[a]
    return gaps


def _oracle_flag_round(gaps: list[float], start: int, horizon: int,
                       coef: float) -> int | None:
    """Earliest s2 such that some [s1, s2] within [start, horizon] crosses."""
    best: int | None = None
    for s1 in range(start, horizon + 1):
        acc = gaps[s1]
        for s2 in range(s1 + 1, horizon + 1):
            acc += gaps[s2]
            if acc >= coef * (s2 - s1) ** (2.0 / 3.0):
                if best is None or s2 < best:
                    best = s2
                break
    return best


def _oracle_phase_recursion(gap_sets: list[list[list[float]]], horizon: int,
                            coef: float) -> list[int]:
    """gap_sets[arm] is a list of per-round gap sequences (one per weight)."""
    phases = [1]
    start = 1
    while True:
        flag_rounds = []
        for per_arm in gap_sets:
            rounds = [
                r for g in per_arm
                if (r := _oracle_flag_round(g, start, horizon, coef)) is not None
            ]
            if not rounds:
                return phases
            flag_rounds.append(min(rounds))
        tau = max(flag_rounds)
        phases.append(tau)
        start = tau
    return phases


def sbs_oracle(seq: PreferenceSequence, limit: int = ORACLE_LIMIT) -> list[int]:
    _check_limit(seq, limit)
    gaps = _oracle_gaps(seq, None)
    return _oracle_phase_recursion([[gaps[a]] for a in range(seq.k)],
                                   seq.horizon, seq.k ** (1.0 / 3.0))


def skw_oracle(seq: PreferenceSequence, w: np.ndarray,
               limit: int = ORACLE_LIMIT) -> list[int]:
    _check_limit(seq, limit)
    gaps = _oracle_gaps(seq, validate_weight(w, seq.k))
    return _oracle_phase_recursion([[gaps[a]] for a in range(seq.k)],
                                   seq.horizon, seq.k ** (1.0 / 3.0))


def suw_oracle(seq: PreferenceSequence, limit: int = ORACLE_LIMIT) -> list[int]:
    _check_limit(seq, limit)
    per_w = [_oracle_gaps(seq, point_mass(seq.k, x)) for x in range(seq.k)]
    gap_sets = [[per_w[x][a] for x in range(seq.k)] for a in range(seq.k)]
    return _oracle_phase_recursion(gap_sets, seq.horizon, seq.k ** (2.0 / 3.0))


def approx_winner_oracle(seq: PreferenceSequence,
                         limit: int = ORACLE_LIMIT) -> tuple[list[int], list[int]]:
    _check_limit(seq, limit)
    k = seq.k
    winners = _identifiable_winners(seq)
    phases = [1]
    witnesses: list[int] = []
    zeta = 1
    while True:
        boundary = None
        last_feasible = list(range(k))
        for t in range(zeta + 1, seq.horizon + 1):
            feasible = []
            for cand in range(k):
                ok = True
                for s in range(zeta, t + 1):
                    if s == zeta:
                        continue  # infinite tolerance at the anchor round
                    p = seq.matrix_at(s)
                    tol = (k * k / (s - zeta)) ** (1.0 / 3.0)
                    w = winners[s]
                    if any(abs(p[w, a] - p[cand, a]) > tol for a in range(k)):
                        ok = False
                        break
                if ok:
                    feasible.append(cand)
            if not feasible:
                boundary = t
                break
            last_feasible = feasible
        if boundary is None:
            return phases, witnesses
        phases.append(boundary)
        witnesses.append(last_feasible[0])
        zeta = boundary


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------

@dataclass
class MeasureReport:
    k: int
    horizon: int
    num_changes: int
    total_variation: float
    condorcet_switch_phases: int
    borda_switch_phases: int
    sbs_phases: list[int] | None = None
    skw_phases: list[int] | None = None
    skw_weight: list[float] | None = None
    suw_phases: list[int] | None = None
    approx_phases: list[int] | None = None
    approx_witnesses: list[int] | None = None
    oracle: bool = False
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def compute_report(seq: PreferenceSequence, *, sbs: bool = False,
                   skw_weight: np.ndarray | None = None, want_suw: bool = False,
                   approx: bool = False, oracle: bool = False,
                   limit: int = DEFAULT_LIMIT) -> MeasureReport:
    s_c, s_b = winner_switch_counts(seq)
    report = MeasureReport(
        k=seq.k,
        horizon=seq.horizon,
        num_changes=seq.num_changes(),
        total_variation=total_variation(seq),
        condorcet_switch_phases=s_c,
        borda_switch_phases=s_b,
        oracle=oracle,
    )
    if sbs:
        report.sbs_phases = (sbs_oracle(seq, limit) if oracle
                             else significant_borda_shifts(seq, limit))
    if skw_weight is not None:
        report.skw_weight = [float(x) for x in skw_weight]
        report.skw_phases = (skw_oracle(seq, skw_weight, limit) if oracle
                             else skw(seq, skw_weight, limit))
    if want_suw:
        report.suw_phases = suw_oracle(seq, limit) if oracle else suw(seq, limit)
    if approx:
        try:
            phases, wits = (approx_winner_oracle(seq, limit) if oracle
                            else approx_winner_changes(seq, limit))
            report.approx_phases = phases
            report.approx_witnesses = wits
        except GICViolationError as exc:
            report.notes["approx"] = str(exc)
    return report
