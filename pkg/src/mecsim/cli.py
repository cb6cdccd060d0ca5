"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 config error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import hfl
from .domain import ConfigError, Policy, validate_config
from .engine import compare_policies, run
from .io import IoFailure, atomic_write, distance_table_csv, dump_json, gnuplot_script, load_config, read_trace, write_bundle

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 0, 2, 3, 4

POLICY_NAMES = [p.value for p in Policy]


class UsageError(Exception):
    pass


class ConflictingPolicy(UsageError):
    pass


class MissingConfig(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mecsim", description="Slotted mobile-edge-computing offloading simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one policy and write an output bundle")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--policy", action="append", choices=POLICY_NAMES)
    p.add_argument("--slots", type=int)
    p.add_argument("--out", default="out")

    p = sub.add_parser("compare", help="run several policies on identical sample paths")
    p.add_argument("--config", required=True)
    p.add_argument("--policies", required=True, help="comma-separated, e.g. daee,local,offload")
    p.add_argument("--seed", type=int)
    p.add_argument("--slots", type=int)
    p.add_argument("--out", default="out")

    report = sub.add_parser("report", help="derive tables and plot scripts from outputs")
    rsub = report.add_subparsers(dest="report_command", required=True, parser_class=_Parser)
    p = rsub.add_parser("distance-table", help="device-server distances, one row per slot")
    p.add_argument("--trace", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p = rsub.add_parser("gnuplot", help="gnuplot script plotting a distance table")
    p.add_argument("--table", required=True)
    p.add_argument("--png", default="distances.png")
    p.add_argument("--out", help="write script here instead of stdout")

    h = sub.add_parser("hfl", help="hierarchical federated learning demos")
    hsub = h.add_subparsers(dest="hfl_command", required=True, parser_class=_Parser)
    p = hsub.add_parser("demo-vote", help="data-weighted protocol version vote")
    p.add_argument("--counts", default="A=5,B=3,C=2")
    p.add_argument("--versions", default="A=2,B=3,C=5")
    p = hsub.add_parser("round", help="run hierarchical rounds on synthetic quadratic clients")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write JSON here instead of stdout")
    return parser


def _label_map(text: str, flag: str) -> dict[str, int]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise UsageError(f"{flag}: expected NAME=INT pairs, got {item!r}")
        try:
            out[name] = int(value)
        except ValueError:
            raise UsageError(f"{flag}: {value!r} is not an integer") from None
    if not out:
        raise UsageError(f"{flag}: empty list")
    return out


def _require_file(path: str) -> None:
    if not Path(path).is_file():
        raise MissingConfig(f"config file not found: {path}")


def _sim_config(args):
    _require_file(args.config)
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = validate_config({**cfg.to_dict(), "seed": args.seed})
    if args.slots is not None:
        cfg = validate_config({**cfg.to_dict(), "n_slots": args.slots})
    return cfg


def cmd_run(args) -> int:
    cfg = _sim_config(args)
    if args.policy:
        if len(set(args.policy)) > 1:
            raise ConflictingPolicy(f"--policy given with different values: {', '.join(args.policy)}")
        cfg = replace(cfg, policy=Policy(args.policy[0]))
    trace, summary = run(cfg)
    write_bundle(args.out, cfg, trace, summary)
    print(f"{summary.policy}: {len(trace)} records, energy {summary.total_energy_j:.3f} J, "
          f"miss rate {summary.deadline_miss_rate:.4f} -> {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    names = [s.strip() for s in args.policies.split(",") if s.strip()]
    if not names:
        raise UsageError("--policies: empty list")
    bad = [n for n in names if n not in POLICY_NAMES]
    if bad:
        raise UsageError(f"--policies: unknown policy {bad[0]!r} (choose from {', '.join(POLICY_NAMES)})")
    if len(set(names)) != len(names):
        raise ConflictingPolicy("--policies lists the same policy twice")
    cfg = _sim_config(args)
    summaries = compare_policies(cfg, names)
    out = Path(args.out)
    atomic_write(out / "compare.json", dump_json({k: s.to_dict() for k, s in summaries.items()}))
    atomic_write(out / "config_echo.json", dump_json(cfg.to_dict()))
    print(f"{'policy':<10} {'energy_j':>12} {'miss_rate':>10} {'mean_q_bits':>14}")
    for name, s in summaries.items():
        mean_q = sum(s.mean_queue_bits) / len(s.mean_queue_bits)
        print(f"{name:<10} {s.total_energy_j:>12.3f} {s.deadline_miss_rate:>10.4f} {mean_q:>14.1f}")
    return EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def cmd_report(args) -> int:
    if args.report_command == "distance-table":
        if args.steps is not None and args.steps < 0:
            raise UsageError("--steps must be >= 0")
        _emit(distance_table_csv(read_trace(args.trace), args.steps), args.out)
    else:
        try:
            with open(args.table, encoding="utf-8") as fh:
                header = fh.readline().strip().split(",")
        except OSError as exc:
            raise IoFailure(f"cannot read table {args.table}: {exc.strerror}") from exc
        _emit(gnuplot_script(args.table, len(header) - 1, args.png), args.out)
    return EXIT_OK


_HFL_DEFAULTS = {"dim": 2, "eta": 0.1, "local_steps": 5, "rounds": 10, "seed": 0,
                 "clusters": [[20, 30], [10, 40]], "center_spread": 3.0, "noise": 1.0}


def _hfl_config(path: str) -> dict[str, Any]:
    _require_file(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("hfl config must be a JSON object")
    raw.pop("schema", None)
    unknown = sorted(set(raw) - set(_HFL_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown hfl config keys: {', '.join(unknown)}")
    cfg = {**_HFL_DEFAULTS, **raw}
    if not (isinstance(cfg["clusters"], list) and cfg["clusters"]
            and all(isinstance(c, list) and c and all(isinstance(n, int) and n >= 1 for n in c)
                    for c in cfg["clusters"])):
        raise ConfigError("clusters must be a non-empty list of non-empty lists of positive counts")
    if not (isinstance(cfg["eta"], (int, float)) and cfg["eta"] > 0):
        raise ConfigError(f"eta={cfg['eta']!r} out of range (expected > 0)")
    for key in ("dim", "local_steps", "rounds", "seed"):
        if not (isinstance(cfg[key], int) and cfg[key] >= (1 if key == "dim" else 0)):
            raise ConfigError(f"{key}={cfg[key]!r} out of range")
    return cfg


def cmd_hfl(args) -> int:
    if args.hfl_command == "demo-vote":
        counts = _label_map(args.counts, "--counts")
        versions = _label_map(args.versions, "--versions")
        try:
            choices = hfl.scenario_choices(counts, versions)
            winner = hfl.vote_protocol_version(choices)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for c in choices:
            print(f"device {c.device}: version {c.version}, {c.data_count} data points")
        for version, weight in hfl.version_weights(choices).items():
            print(f"v{version}: weight {weight}")
        print(f"winner: v{winner}")
        return EXIT_OK

    cfg = _hfl_config(args.config)
    rng = np.random.default_rng(cfg["seed"])
    dim = cfg["dim"]
    clusters, all_data = [], []
    for counts in cfg["clusters"]:
        center = rng.normal(0.0, cfg["center_spread"], dim)
        cluster = []
        for n in counts:
            data = center + rng.normal(0.0, cfg["noise"], (n, dim))
            all_data.append(data)
            cluster.append(hfl.make_client(data, np.zeros(dim)))
        clusters.append(cluster)
    optimum = np.concatenate(all_data).mean(axis=0)
    history = hfl.run_rounds(clusters, np.zeros(dim), cfg["eta"], cfg["local_steps"], cfg["rounds"])
    result = {
        "optimum": optimum.tolist(),
        "rounds": [{"round": k, "model": w.tolist(), "distance_to_optimum": float(np.linalg.norm(w - optimum))}
                   for k, w in enumerate(history)],
    }
    _emit(dump_json(result), args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "report": cmd_report, "hfl": cmd_hfl}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mecsim: usage error: {exc} (see mecsim --help)", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"mecsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoFailure as exc:
        print(f"mecsim: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
