"""Command-line entry point: ``nomafl {allocate,sweep,train,oracle-check}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import seeding
from .allocation import ORACLE_LIMIT
from .harness.config import ConfigError, ScenarioConfig, load_scenario
from .harness.experiments import build_channel, make_allocator, run_allocation_sweep, run_fl_experiment, sweep_snapshot
from .harness.metrics import to_csv, to_jsonl, write_metrics

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _config(args) -> ScenarioConfig:
    cfg = load_scenario(args.config) if args.config else ScenarioConfig()
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.allocators:
        changes["allocators"] = tuple(a.strip() for a in args.allocators.split(",") if a.strip())
    return cfg.replace(**changes) if changes else cfg


def _emit_table(table, args):
    if args.out:
        write_metrics(table, args.out, args.format)
    else:
        sys.stdout.write(to_csv(table) if args.format == "csv" else to_jsonl(table))


def _selection_json(name, res) -> dict:
    a = res.allocation
    return {
        "allocator": name,
        "m_t": res.m_t,
        "joining_ratio": res.joining_ratio,
        "selected": list(res.selected),
        "received": a.received.tolist(),
        "transmit": a.transmit.tolist(),
        "surplus": a.surplus.tolist(),
        "decoded": res.decode().decoded.tolist(),
    }


def cmd_allocate(args, cfg):
    snap = build_channel(cfg, 0).next_snapshot()
    names = cfg.allocators if args.allocators else (cfg.allocator,)
    out = {
        "slot": snap.slot,
        "noise_power": snap.noise_power,
        "gamma": cfg.gamma,
        "p_r_max": dict(zip(map(str, snap.ids), snap.p_r_max.tolist())),
        "results": [_selection_json(n, make_allocator(n, cfg)(snap)) for n in names],
    }
    text = json.dumps(out, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args, cfg):
    table = run_allocation_sweep(cfg)
    _emit_table(table, args)
    for (name, n), s in table.summary().items():
        print(f"{name:8s} N={n:3d}  mean m_t={s['mean_m_t']:7.3f}  std={s['std_m_t']:6.3f}  outage={s['outage']:.2f}", file=sys.stderr)


def cmd_train(args, cfg):
    table = run_fl_experiment(cfg)
    _emit_table(table, args)


def cmd_oracle_check(args, cfg):
    rng = seeding.stream(cfg.master_seed, seeding.SWEEP, 0, 0, 1)
    nfl = make_allocator("nfl", cfg)
    oracle = make_allocator("oracle", cfg)
    equal = worse = 0
    for i in range(args.instances):
        n = int(rng.integers(1, args.max_n + 1))
        snap = sweep_snapshot(cfg, i, n)
        a, b = nfl(snap).m_t, oracle(snap).m_t
        if a > b:
            worse += 1
        equal += a == b
    rate = equal / args.instances
    print(f"instances={args.instances} optimal_rate={rate:.4f} dominance_violations={worse}")
    if worse:
        raise RuntimeError(f"{worse} instances where the greedy allocator beat the oracle")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario file (key = value lines)")
    common.add_argument("--seed", type=int, metavar="U64", help="override master_seed")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("--allocators", metavar="LIST", help="comma-separated, e.g. nfl,oma,fullset")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nomafl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("allocate", parents=[common], help="allocate one channel snapshot").set_defaults(func=cmd_allocate)
    sub.add_parser("sweep", parents=[common], help="connected vehicles versus network size").set_defaults(func=cmd_sweep)
    sub.add_parser("train", parents=[common], help="federated training traces").set_defaults(func=cmd_train)
    oc = sub.add_parser("oracle-check", parents=[common], help="compare greedy selection with the exhaustive oracle")
    oc.add_argument("--instances", type=int, default=500)
    oc.add_argument("--max-n", type=int, default=6)
    oc.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if getattr(args, "max_n", 1) > ORACLE_LIMIT:
            raise ConfigError(f"--max-n must be <= {ORACLE_LIMIT}", "max_n")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
