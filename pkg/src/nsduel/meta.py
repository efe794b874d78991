"""Episode and replay orchestration around the base learner.

A run is a sequence of episodes. Each episode starts with a fresh global
candidate set and a randomized schedule of replay instances at dyadic
durations. Replays stack on top of the root instance; the newest instance
plays the round. When the global candidate set empties, the episode ends
and everything restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .learner import (BaseAlgState, EvictionRecord, Specification,
                      estimate_wbs, play_distribution, run_eviction_scan,
                      sample_pair)
from .preferences import PreferenceSequence, sample_duel
from .rng import STREAM_ACTION, STREAM_ENV, STREAM_REPLAY, stream_generator, stream_key
from .scores import RegretLedger


def dyadic_durations(horizon: int) -> list[int]:
    """Replay durations 2, 4, ..., 2^ceil(log2 T)."""
    top = max(1, math.ceil(math.log2(horizon)))
    return [2 ** e for e in range(1, top + 1)]


@dataclass
class ReplaySchedule:
    """Bernoulli replay activations for one episode.

    bits[mi, s] decides whether a replay of duration durations[mi] starts
    at round s. Activation probability min(1, m^(-1/3) (s - t_start)^(-2/3))
    for rounds s in (t_start, horizon].
    """

    t_start: int
    horizon: int
    durations: list[int]
    bits: np.ndarray  # (n_durations, horizon + 1) bool

    @classmethod
    def sample(cls, t_start: int, horizon: int, seed: int,
               episode: int) -> "ReplaySchedule":
        """Draw activation bits from streams keyed by (seed, episode, duration).

        Each bit is addressed by its position in the keyed stream, so its
        value does not depend on when (or whether) other bits are read.
        """
        durations = dyadic_durations(horizon)
        bits = np.zeros((len(durations), horizon + 1), dtype=bool)
        s = np.arange(t_start + 1, horizon + 1)
        for mi, m in enumerate(durations):
            p = np.minimum(1.0, m ** (-1.0 / 3.0)
                           * (s - t_start).astype(np.float64) ** (-2.0 / 3.0))
            if s.size:
                rng = stream_generator(seed, STREAM_REPLAY, episode, m)
                bits[mi, s] = rng.random(s.size) < p
        return cls(t_start, horizon, durations, bits)

    def duration_at(self, t: int) -> int | None:
        """Longest scheduled replay duration at round t, if any."""
        hits = np.flatnonzero(self.bits[:, t])
        if hits.size == 0:
            return None
        return self.durations[int(hits.max())]


@dataclass
class EpisodeRecord:
    index: int
    t_start: int
    t_end: int
    cause: str  # "restart", "forced", or "horizon"
    replays_spawned: int
    arms_left_global: int


@dataclass
class RunResult:
    ledger: RegretLedger
    episodes: list[EpisodeRecord]
    evictions: list[EvictionRecord]
    seed: int
    spec_kind: str
    trace: list[dict] = field(default_factory=list)


def run_meta(seq: PreferenceSequence, spec: Specification, seed: int, *,
             replays: bool = True, forced_restarts: list[int] | None = None,
             trace: bool = False) -> RunResult:
    """Simulate one full run over the sequence.

    replays=False gives the plain base learner (still restarting when the
    global set empties). forced_restarts lists rounds at which a new
    episode is forced to begin regardless of the global set, used by the
    oracle-restart baseline.
    """
    horizon, k = seq.horizon, seq.k
    if spec.k != k:
        raise ValueError(f"specification is for {spec.k} arms, environment has {k}")
    env_key = stream_key(seed, STREAM_ENV)
    act_rng = stream_generator(seed, STREAM_ACTION)
    forced = set(forced_restarts or [])

    ledger = RegretLedger(horizon)
    episodes: list[EpisodeRecord] = []
    evictions: list[EvictionRecord] = []
    trace_rows: list[dict] = []

    prefix = np.zeros((spec.n_w, k, horizon + 1))
    eta_inv = np.zeros(horizon + 1)
    last_inactive = np.zeros(k, dtype=np.int64)
    mult = spec.evict_const * math.log(horizon)

    t = 1
    episode = 0
    while t <= horizon:
        t_l = t
        a_global = np.ones(k, dtype=bool)
        sched = (ReplaySchedule.sample(t_l, horizon, seed, episode)
                 if replays else None)
        stack = [BaseAlgState(t_start=t_l, m0=horizon + 1 - t_l,
                              active=np.ones(k, dtype=bool))]
        replays_spawned = 0
        cause = "horizon"
        while t <= horizon:
            if t in forced and t > t_l:
                cause = "forced"
                break
            # drop expired or exhausted instances, newest first
            while len(stack) > 1 and (stack[-1].expired(t)
                                      or not stack[-1].active.any()):
                stack.pop()
            if sched is not None and t > t_l:
                m = sched.duration_at(t)
                if m is not None:
                    stack.append(BaseAlgState(t_start=t, m0=m,
                                              active=np.ones(k, dtype=bool)))
                    replays_spawned += 1
            inst = stack[-1]
            depth = len(stack) - 1
            eta = spec.learning_rate(t - inst.t_start)
            eta_inv[t] = 1.0 / eta
            q = play_distribution(spec, inst.active, eta)
            i, j = sample_pair(q, act_rng.random(2))
            o = sample_duel(seq, env_key, t, i, j)

            prefix[:, :, t] = prefix[:, :, t - 1]
            if inst.active[i]:
                prefix[:, i, t] += spec.weights[:, j] * (o - 0.5) / (q[i] * q[j])
            inactive = ~inst.active
            if inactive.any():
                last_inactive[inactive] = t

            ledger.update(t, seq.matrix_at(t), i, j, o, episode, depth,
                          int(inst.active.sum()))
            if trace:
                trace_rows.append({
                    "t": t, "episode": episode, "stack_depth": depth,
                    "active_tstart": inst.t_start, "eta": eta,
                    "i": i, "j": j, "o": o,
                })

            run_eviction_scan(spec, prefix, last_inactive, eta_inv, t,
                              inst.t_start, inst.active, mult, "local", depth,
                              evictions)
            run_eviction_scan(spec, prefix, last_inactive, eta_inv, t,
                              t_l, a_global, mult, "global", depth, evictions)
            t += 1
            if not a_global.any():
                cause = "restart"
                break
        episodes.append(EpisodeRecord(
            index=episode, t_start=t_l, t_end=t - 1, cause=cause,
            replays_spawned=replays_spawned,
            arms_left_global=int(a_global.sum())))
        episode += 1
    return RunResult(ledger=ledger, episodes=episodes, evictions=evictions,
                     seed=seed, spec_kind=spec.kind, trace=trace_rows)


def run_uniform_baseline(seq: PreferenceSequence, seed: int) -> RunResult:
    """Both duel arms drawn uniformly at random every round."""
    horizon, k = seq.horizon, seq.k
    env_key = stream_key(seed, STREAM_ENV)
    act_rng = stream_generator(seed, STREAM_ACTION)
    ledger = RegretLedger(horizon)
    q = np.full(k, 1.0 / k)
    for t in range(1, horizon + 1):
        i, j = sample_pair(q, act_rng.random(2))
        o = sample_duel(seq, env_key, t, i, j)
        ledger.update(t, seq.matrix_at(t), i, j, o, 0, 0, k)
    return RunResult(ledger=ledger, episodes=[EpisodeRecord(0, 1, horizon,
                     "horizon", 0, k)], evictions=[], seed=seed,
                     spec_kind="uniform-baseline")


def run_oracle_restart(seq: PreferenceSequence, spec: Specification,
                       seed: int) -> RunResult:
    """Fresh base learner at every ground-truth segment boundary, no replays."""
    return run_meta(seq, spec, seed, replays=False,
                    forced_restarts=seq.change_points())
