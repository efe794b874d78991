"""Experiment configuration, orchestration, summaries, and plotting."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import measures
from .learner import PRESETS, Specification
from .meta import RunResult, run_meta, run_oracle_restart, run_uniform_baseline
from .preferences import (PreferenceSequence, gen_borda_hardness,
                          gen_conflict_3x3, gen_gic_pair, gen_stationary,
                          gen_winner_flip)
from .scores import parse_weight_spec

try:
    import jsonschema
except ImportError:  # pragma: no cover - jsonschema is a hard dependency
    jsonschema = None


class ConfigError(ValueError):
    """Invalid experiment configuration."""


ALGORITHMS = ("metabosse", "bosse-only", "oracle-restart", "uniform")

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "environment": {"type": "object"},
        "algorithm": {"enum": list(ALGORITHMS)},
        "spec": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["fixed", "unknown"]},
                "weight": {"type": "string"},
            },
        },
        "preset": {"enum": ["theory", "empirical"]},
        "evict_const": {"type": ["number", "null"]},
        "horizons": {"type": "array", "items": {"type": "integer", "minimum": 1},
                     "minItems": 1},
        "reps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "trace": {"type": "boolean"},
        "svg": {"type": "boolean"},
        "out": {"type": ["string", "null"]},
        "measure_limit": {"type": "integer", "minimum": 1},
    },
    "required": ["environment", "algorithm"],
}

DEFAULTS = {
    "spec": {"kind": "fixed", "weight": "uniform"},
    "preset": "theory",
    "evict_const": None,
    "horizons": [1000],
    "reps": 1,
    "seed": 0,
    "workers": 1,
    "trace": False,
    "svg": False,
    "out": None,
    "measure_limit": measures.DEFAULT_LIMIT,
}


def validate_config(cfg: dict) -> dict:
    if jsonschema is not None:
        validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
        errors = sorted(validator.iter_errors(cfg), key=lambda e: e.json_path)
        if errors:
            msgs = "; ".join(f"{e.json_path}: {e.message}" for e in errors[:5])
            raise ConfigError(f"invalid config: {msgs}")
    merged = dict(DEFAULTS)
    merged.update(cfg)
    spec = dict(DEFAULTS["spec"])
    spec.update(cfg.get("spec", {}))
    merged["spec"] = spec
    return merged


def build_env(env_cfg: dict, horizon: int) -> PreferenceSequence:
    """Construct the preference sequence described by an environment block."""
    kind = env_cfg.get("kind")
    if kind is None:
        raise ConfigError("environment.kind is required")
    try:
        if kind == "file":
            with open(env_cfg["path"], "r", encoding="utf-8") as fh:
                seq = PreferenceSequence.from_json(fh.read())
            if horizon and seq.horizon != horizon:
                raise ConfigError(
                    f"environment file horizon {seq.horizon} != requested {horizon}")
            return seq
        if kind == "stationary":
            return gen_stationary(np.asarray(env_cfg["matrix"], dtype=float), horizon)
        if kind == "winner-beats-all":
            k = int(env_cfg["k"])
            strength = float(env_cfg.get("strength", 0.7))
            p = np.full((k, k), 0.5)
            p[0, 1:] = strength
            p[1:, 0] = 1.0 - strength
            return gen_stationary(p, horizon)
        if kind == "winner-flip":
            return gen_winner_flip(int(env_cfg["k"]), horizon,
                                   float(env_cfg.get("strength", 0.9)))
        if kind == "borda-hardness":
            return gen_borda_hardness(int(env_cfg["k"]), horizon,
                                      float(env_cfg.get("epsilon", 0.0)),
                                      int(env_cfg.get("winner_arm", 0)),
                                      int(env_cfg.get("env_index", 0)))
        if kind == "conflict":
            return gen_conflict_3x3(horizon)
        if kind == "gic-pair":
            return gen_gic_pair(float(env_cfg.get("epsilon", 0.01)), horizon // 2)
        if kind == "segments":
            return PreferenceSequence(
                [(int(s["len"]), np.asarray(s["matrix"], dtype=float).reshape(
                    int(env_cfg["k"]), int(env_cfg["k"])))
                 for s in env_cfg["segments"]])
    except KeyError as exc:
        raise ConfigError(f"environment.{exc.args[0]} is required for kind {kind!r}")
    raise ConfigError(f"unknown environment kind {kind!r}")


def make_spec(cfg: dict, k: int) -> Specification | None:
    if cfg["algorithm"] == "uniform":
        return None
    c = cfg["evict_const"]
    if c is None:
        c = PRESETS[cfg["preset"]]
    if cfg["spec"]["kind"] == "unknown":
        return Specification.unknown(k, c)
    w = parse_weight_spec(cfg["spec"]["weight"], k)
    return Specification.fixed(w, c)


def rep_seed(master_seed: int, horizon: int, rep: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(horizon, rep))
    return int(ss.generate_state(1, np.uint64)[0])


def run_replication(cfg: dict, horizon: int, rep: int) -> RunResult:
    seq = build_env(cfg["environment"], horizon)
    spec = make_spec(cfg, seq.k)
    seed = rep_seed(cfg["seed"], horizon, rep)
    algo = cfg["algorithm"]
    if algo == "uniform":
        return run_uniform_baseline(seq, seed)
    if algo == "oracle-restart":
        return run_oracle_restart(seq, spec, seed)
    if algo == "bosse-only":
        return run_meta(seq, spec, seed, replays=False, trace=cfg["trace"])
    return run_meta(seq, spec, seed, trace=cfg["trace"])


def _worker(payload: tuple[str, int, int]) -> tuple[int, dict]:
    cfg_json, horizon, rep = payload
    cfg = json.loads(cfg_json)
    result = run_replication(cfg, horizon, rep)
    return rep, _summarize_result(result, keep_curve=True)


def _summarize_result(result: RunResult, keep_curve: bool = False) -> dict:
    led = result.ledger
    out = {
        "seed": result.seed,
        "final_borda": led.final_borda_regret(),
        "final_condorcet": led.final_condorcet_regret(),
        "rounds_without_cw": led.rounds_without_cw,
        "restart_rounds": [e.t_end + 1 for e in result.episodes
                           if e.cause in ("restart", "forced")],
        "episodes": [{"index": e.index, "t_start": e.t_start, "t_end": e.t_end,
                      "cause": e.cause, "replays": e.replays_spawned,
                      "arms_left": e.arms_left_global} for e in result.episodes],
        "evictions": len(result.evictions),
        "csv": led.to_csv(),
        "trace": result.trace,
    }
    if keep_curve:
        out["cum_borda"] = [float(x) for x in led.cum_borda[1:]]
    return out


def run_experiment(cfg: dict) -> dict:
    """Execute all (horizon, replication) cells and build the summary."""
    cfg = validate_config(cfg)
    started = time.time()
    cfg_json = json.dumps(cfg, sort_keys=True)
    cells = [(h, r) for h in cfg["horizons"] for r in range(cfg["reps"])]
    results: dict[tuple[int, int], dict] = {}
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            for (h, r), (rep, summ) in zip(
                    cells, pool.map(_worker, [(cfg_json, h, r) for h, r in cells])):
                results[(h, rep)] = summ
    else:
        for h, r in cells:
            results[(h, r)] = _worker((cfg_json, h, r))[1]

    per_horizon = {}
    for h in cfg["horizons"]:
        reps = [results[(h, r)] for r in range(cfg["reps"])]
        borda = np.array([x["final_borda"] for x in reps])
        cond = np.array([x["final_condorcet"] for x in reps])
        per_horizon[str(h)] = {
            "mean_borda": float(borda.mean()),
            "std_borda": float(borda.std()),
            "mean_condorcet": float(cond.mean()),
            "std_condorcet": float(cond.std()),
            "final_borda": [float(x) for x in borda],
            "restart_rounds": [x["restart_rounds"] for x in reps],
            "n_episodes": [len(x["episodes"]) for x in reps],
        }

    summary = {
        "config": cfg,
        "per_horizon": per_horizon,
        "wall_clock_s": round(time.time() - started, 3),
    }
    if len(cfg["horizons"]) >= 3:
        hs = sorted(cfg["horizons"])
        means = [per_horizon[str(h)]["mean_borda"] for h in hs]
        slope, stderr, intercept = fit_power_law(hs, means)
        summary["slope_fit"] = {"slope": slope, "stderr": stderr,
                                "intercept": intercept}
    env0 = build_env(cfg["environment"], cfg["horizons"][0])
    if env0.horizon <= cfg["measure_limit"]:
        summary["environment_measures"] = json.loads(
            measures.compute_report(env0, sbs=True,
                                    limit=cfg["measure_limit"]).to_json())
    _write_outputs(cfg, results, summary)
    return summary


def _write_outputs(cfg: dict, results: dict, summary: dict) -> None:
    out = cfg["out"]
    if out is None:
        return
    os.makedirs(out, exist_ok=True)
    # wall-clock time is reported to the caller but kept out of the file so
    # that identical (config, seed) runs produce byte-identical outputs
    stable = {k: v for k, v in summary.items() if k != "wall_clock_s"}
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(stable, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for (h, r), summ in sorted(results.items()):
        with open(os.path.join(out, f"ledger_h{h}_rep{r:03d}.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write(summ["csv"])
        if cfg["trace"] and summ["trace"]:
            with open(os.path.join(out, f"trace_h{h}_rep{r:03d}.jsonl"), "w",
                      encoding="utf-8") as fh:
                for row in summ["trace"]:
                    fh.write(json.dumps(row, sort_keys=True))
                    fh.write("\n")
    if cfg["svg"]:
        _write_svg(cfg, results, summary, out)


def _write_svg(cfg: dict, results: dict, summary: dict, out: str) -> None:
    if len(cfg["horizons"]) > 1:
        hs = sorted(cfg["horizons"])
        means = [summary["per_horizon"][str(h)]["mean_borda"] for h in hs]
        stds = [summary["per_horizon"][str(h)]["std_borda"] for h in hs]
        xs = [math.log(h) for h in hs]
        path = os.path.join(out, "regret_vs_horizon.svg")
        svg_line_plot(path, xs, [math.log(max(m, 1e-12)) for m in means],
                      band=None, x_label="log T", y_label="log mean final regret",
                      title="final Borda regret vs horizon (log-log)")
    else:
        h = cfg["horizons"][0]
        curves = np.array([results[(h, r)]["cum_borda"] for r in range(cfg["reps"])])
        mean = curves.mean(axis=0)
        std = curves.std(axis=0)
        step = max(1, h // 512)
        idx = np.arange(0, h, step)
        path = os.path.join(out, f"regret_h{h}.svg")
        svg_line_plot(path, (idx + 1).tolist(), mean[idx].tolist(),
                      band=(np.maximum(mean - std, 0)[idx].tolist(),
                            (mean + std)[idx].tolist()),
                      x_label="t", y_label="cumulative Borda regret",
                      title=f"mean regret over {cfg['reps']} reps, T={h}")


def svg_line_plot(path: str, xs: list[float], ys: list[float], *,
                  band: tuple[list[float], list[float]] | None,
                  x_label: str, y_label: str, title: str,
                  width: int = 640, height: int = 420) -> None:
    """Minimal hand-written SVG line plot with an optional band."""
    margin = 60
    x0, x1 = min(xs), max(xs)
    all_y = list(ys) + (list(band[0]) + list(band[1]) if band else [])
    y0, y1 = min(all_y), max(all_y)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x: float) -> float:
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y: float) -> float:
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    def pts(px: list[float], py: list[float]) -> str:
        return " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(px, py))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>',
        f'<text x="16" y="{height / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {height / 2:.0f})">{y_label}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    if band is not None:
        lo, hi = band
        poly = pts(xs, hi) + " " + pts(list(reversed(xs)), list(reversed(lo)))
        parts.append(f'<polygon points="{poly}" fill="steelblue" opacity="0.25"/>')
    parts.append(f'<polyline points="{pts(xs, ys)}" fill="none" '
                 f'stroke="steelblue" stroke-width="1.5"/>')
    for lab, (vx, vy) in (("min", (x0, y0)), ("max", (x1, y1))):
        parts.append(f'<text x="{margin}" y="{sy(vy):.0f}" font-family="sans-serif" '
                     f'font-size="10" text-anchor="end">{vy:.3g}</text>')
        parts.append(f'<text x="{sx(vx):.0f}" y="{height - margin + 14}" '
                     f'font-family="sans-serif" font-size="10" '
                     f'text-anchor="middle">{vx:.3g}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


def fit_power_law(horizons: list[int], values: list[float]) -> tuple[float, float, float]:
    """Least-squares slope of log(value) vs log(horizon) with standard error."""
    if len(horizons) < 3:
        raise ValueError("need at least 3 horizons for a slope fit")
    if any(v <= 0 for v in values):
        raise ValueError("regret values must be positive for a log-log fit")
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    n = x.size
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    sigma2 = float((resid ** 2).sum() / max(n - 2, 1))
    stderr = math.sqrt(sigma2 / sxx)
    return slope, stderr, intercept


@dataclass
class SelfCheckResult:
    name: str
    ok: bool
    detail: str


def selfcheck() -> list[SelfCheckResult]:
    """Fast internal consistency checks for the installed artifact."""
    from ._kernels import BACKEND, scan_evictions, scan_evictions_numpy
    from .learner import estimate_wbs
    from .preferences import gen_random_piecewise
    from .scores import uniform_weight, weighted_borda_gap

    checks: list[SelfCheckResult] = []
    rng = np.random.default_rng(7)

    # determinism of a small run
    cfg = validate_config({
        "environment": {"kind": "winner-flip", "k": 3},
        "algorithm": "metabosse", "preset": "empirical",
        "horizons": [300], "reps": 1, "seed": 11,
    })
    a = run_replication(cfg, 300, 0).ledger.to_csv()
    b = run_replication(cfg, 300, 0).ledger.to_csv()
    checks.append(SelfCheckResult("determinism", a == b,
                                  "identical seed reproduces identical ledger"))

    # estimator unbiasedness by exhaustive enumeration
    from .preferences import random_matrix
    p = random_matrix(4, rng)
    q = rng.random(4) + 0.05
    q /= q.sum()
    w = uniform_weight(4)[None, :]
    expect = np.zeros(4)
    for i in range(4):
        for j in range(4):
            for o in (0, 1):
                pr = q[i] * q[j] * (p[i, j] if o else 1.0 - p[i, j])
                expect += pr * estimate_wbs(w, q, i, j, o)[0]
    target = weighted_borda_gap(p, w[0])
    err = float(np.abs(expect - target).max())
    checks.append(SelfCheckResult("estimator-unbiased", err < 1e-12,
                                  f"max enumeration error {err:.2e}"))

    # kernel backends agree
    prefix = np.cumsum(rng.normal(size=(3, 41)), axis=1)
    prefix[:, 0] = 0.0
    eta_inv = 1.0 + rng.random(41)
    last_inactive = np.zeros(3, dtype=np.int64)
    cand = np.ones(3, dtype=bool)
    args = (prefix, last_inactive, eta_inv, 40, 1, cand, 0.5, 3 ** (1 / 3), 3.0, 3)
    ev1 = scan_evictions(*(a.copy() if isinstance(a, np.ndarray) else a for a in args))
    ev2 = scan_evictions_numpy(*(a.copy() if isinstance(a, np.ndarray) else a
                                 for a in args))
    same = bool(np.array_equal(ev1[0], ev2[0]) and np.array_equal(ev1[1], ev2[1]))
    checks.append(SelfCheckResult("kernel-backends", same,
                                  f"active backend {BACKEND}"))

    # measures match oracle on a small random instance
    seq = gen_random_piecewise(3, [40, 40], np.random.default_rng(3))
    ok = (measures.significant_borda_shifts(seq) == measures.sbs_oracle(seq)
          and measures.suw(seq) == measures.suw_oracle(seq))
    checks.append(SelfCheckResult("measure-oracle", ok,
                                  "phase lists match brute force"))
    return checks
