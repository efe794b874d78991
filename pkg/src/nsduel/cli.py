"""Command-line interface.

Subcommands: run, sweep, measure, env, selfcheck.
Exit codes: 0 ok, 1 config error, 2 runtime error, 3 selfcheck failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, measures
from .preferences import PreferenceSequence
from .scores import parse_weight_spec


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--horizon", type=int, action="append",
                   help="horizon; repeat for sweeps")
    p.add_argument("--reps", type=int, help="replications per horizon")
    p.add_argument("--preset", choices=["theory", "empirical"],
                   help="eviction constant preset")
    p.add_argument("--trace", action="store_true", help="write per-round traces")
    p.add_argument("--out", help="output directory")
    p.add_argument("--svg", action="store_true", help="write SVG plots")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--algo", choices=list(harness.ALGORITHMS), help="algorithm")
    p.add_argument("--env-file", help="environment file (overrides config)")


def _load_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    if args.env_file:
        cfg["environment"] = {"kind": "file", "path": args.env_file}
    if args.algo:
        cfg["algorithm"] = args.algo
    for name in ("seed", "reps", "preset", "out", "workers"):
        val = getattr(args, name)
        if val is not None:
            cfg[name] = val
    if args.horizon:
        cfg["horizons"] = args.horizon
    if args.trace:
        cfg["trace"] = True
    if args.svg:
        cfg["svg"] = True
    cfg.setdefault("algorithm", "metabosse")
    if "environment" not in cfg:
        raise harness.ConfigError(
            "no environment given; use --config or --env-file")
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    summary = harness.run_experiment(cfg)
    print(json.dumps({k: v for k, v in summary.items() if k != "config"},
                     indent=2, sort_keys=True))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if len(cfg.get("horizons", [])) < 3:
        raise harness.ConfigError("sweep needs at least 3 --horizon values")
    summary = harness.run_experiment(cfg)
    print(json.dumps({"slope_fit": summary.get("slope_fit"),
                      "per_horizon": {h: {"mean_borda": v["mean_borda"]}
                                      for h, v in summary["per_horizon"].items()}},
                     indent=2, sort_keys=True))
    return 0


def cmd_measure(args: argparse.Namespace) -> int:
    with open(args.env_file_pos, "r", encoding="utf-8") as fh:
        seq = PreferenceSequence.from_json(fh.read())
    weight = parse_weight_spec(args.skw, seq.k) if args.skw else None
    report = measures.compute_report(
        seq, sbs=args.sbs, skw_weight=weight, want_suw=args.suw,
        approx=args.approx, oracle=args.oracle, limit=args.limit)
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    print(text)
    return 0


def cmd_env(args: argparse.Namespace) -> int:
    env_cfg = {"kind": args.kind}
    if args.k is not None:
        env_cfg["k"] = args.k
    if args.strength is not None:
        env_cfg["strength"] = args.strength
    if args.epsilon is not None:
        env_cfg["epsilon"] = args.epsilon
    if args.winner_arm is not None:
        env_cfg["winner_arm"] = args.winner_arm
    if args.env_index is not None:
        env_cfg["env_index"] = args.env_index
    seq = harness.build_env(env_cfg, args.horizon_pos)
    text = seq.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
        print(f"wrote {args.out} (k={seq.k}, horizon={seq.horizon}, "
              f"{len(seq.segments)} segments)")
    else:
        print(text)
    return 0


def cmd_selfcheck(args: argparse.Namespace) -> int:
    checks = harness.selfcheck()
    ok = True
    for c in checks:
        status = "PASS" if c.ok else "FAIL"
        print(f"[{status}] {c.name}: {c.detail}")
        ok = ok and c.ok
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nsduel",
        description="Non-stationary dueling bandit simulation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment at one horizon")
    _add_common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run over several horizons and fit a slope")
    _add_common(p_sweep)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_meas = sub.add_parser("measure", help="non-stationarity measures of an env file")
    p_meas.add_argument("env_file_pos", metavar="ENV_FILE")
    p_meas.add_argument("--sbs", action="store_true")
    p_meas.add_argument("--skw", metavar="WEIGHT",
                        help="'uniform', 'point:IDX', or comma floats")
    p_meas.add_argument("--suw", action="store_true")
    p_meas.add_argument("--approx", action="store_true")
    p_meas.add_argument("--oracle", action="store_true",
                        help="use the brute-force oracles")
    p_meas.add_argument("--limit", type=int, default=measures.DEFAULT_LIMIT)
    p_meas.add_argument("--out")
    p_meas.set_defaults(fn=cmd_measure)

    p_env = sub.add_parser("env", help="generate an environment file")
    p_env.add_argument("kind", choices=["winner-beats-all", "winner-flip",
                                        "borda-hardness", "conflict", "gic-pair"])
    p_env.add_argument("horizon_pos", metavar="HORIZON", type=int)
    p_env.add_argument("--k", type=int)
    p_env.add_argument("--strength", type=float)
    p_env.add_argument("--epsilon", type=float)
    p_env.add_argument("--winner-arm", type=int, dest="winner_arm")
    p_env.add_argument("--env-index", type=int, dest="env_index")
    p_env.add_argument("--out")
    p_env.set_defaults(fn=cmd_env)

    p_check = sub.add_parser("selfcheck", help="fast internal consistency checks")
    p_check.set_defaults(fn=cmd_selfcheck)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
