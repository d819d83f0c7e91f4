"""``offload-sim`` command-line driver."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from .config import ConfigError, load_and_validate
from .metrics import aggregate, fmt
from .profiles import PROVENANCE, builtin_profiles
from .sweep import repetitions, run_tasks, sweep, write_outputs

log = logging.getLogger("offload_sim")


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _strings(text: str) -> List[str]:
    return [x for x in text.replace(",", " ").split() if x]


def _flatten(groups) -> list:
    return [x for g in groups for x in g]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offload-sim", description="Offloading simulator for hybrid edge clouds.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario for its configured repetitions")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="master seed (overrides the config)")
    r.add_argument("--reps", type=int, help="repetitions (overrides the config)")
    r.add_argument("--out", default="out", help="output directory for the CSVs (default: out)")

    s = sub.add_parser("sweep", help="run a lambda x deadline x strategy grid")
    s.add_argument("config")
    s.add_argument("--lambda", dest="lambdas", type=_floats, nargs="+", required=True)
    s.add_argument("--deadline", dest="deadlines", type=_floats, nargs="+", required=True)
    s.add_argument("--strategy", dest="strategies", type=_strings, nargs="+", required=True)
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int, help="master seed (overrides the config)")
    s.add_argument("--out", default="out")

    v = sub.add_parser("validate", help="check a config file and print the resolved scenario")
    v.add_argument("config")

    sub.add_parser("profiles", help="list the built-in device profiles")
    return p


def _load(path):
    try:
        return load_and_validate(path)
    except FileNotFoundError:
        raise ConfigError([f"{path}: no such file"]) from None


def _summary(runs) -> str:
    lines = []
    if len(runs) >= 2:
        agg = aggregate(runs)
        for name in ("energy_per_job", "mean_completion_time", "qos", "offload_ratio", "mean_relative_estimation_error"):
            s = agg[name]
            lines.append(f"  {name:32s} {fmt(s.mean):>10s} +/- {fmt(s.half_width)}")
    else:
        r = runs[0]
        for name in ("energy_per_job", "mean_completion_time", "qos", "offload_ratio"):
            lines.append(f"  {name:32s} {fmt(getattr(r, name)):>10s}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    cfg = _load(args.config)
    runs = run_tasks(repetitions(cfg, args.reps, args.seed))
    out = write_outputs(args.out, runs)
    print(f"{cfg.name}: {cfg.strategy}, lambda={fmt(cfg.lam)}, d={fmt(cfg.deadline)}, {len(runs)} runs")
    print(_summary(runs))
    print(f"wrote {out}/runs.csv, flows.csv, shares.csv")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    runs = sweep(
        cfg,
        _flatten(args.lambdas),
        _flatten(args.deadlines),
        _flatten(args.strategies),
        reps=args.reps,
        master_seed=args.seed,
    )
    out = write_outputs(args.out, runs)
    print(f"{len(runs)} runs; wrote {out}/runs.csv, flows.csv, shares.csv")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    mode = "femtocloud" if cfg.fc_mode else "mobile edge cloud"
    print(f"{args.config}: ok ({mode}, {len(cfg.hosts)} hosts, strategy {cfg.strategy})")
    return 0


def cmd_profiles(args) -> int:
    print(f"{'name':14s}{'role':>10s}{'idle W':>8s}{'comp W':>8s}{'up W':>7s}{'down W':>8s}"
          f"{'TE s':>8s}{'up Mb/s':>9s}{'dn Mb/s':>9s}  source")
    for name, p in builtin_profiles().items():
        print(
            f"{name:14s}{p.role.value:>10s}{p.p_idle:8.2f}{p.p_compute:8.2f}{p.p_upload:7.2f}{p.p_download:8.2f}"
            f"{p.exec_time_mean:8.3f}{p.uplink_bw / 1e6:9.0f}{p.downlink_bw / 1e6:9.0f}  {PROVENANCE[name]}"
        )
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate, "profiles": cmd_profiles}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
