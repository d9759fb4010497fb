"""Command-line entry point for running benchmark sweeps."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .bench import parse_config_text, run_experiment, write_outputs
from .presets import PRESETS, preset_text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwave-chanest",
        description="Monte-Carlo benchmarks for sparse wideband hybrid-array "
                    "channel estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a config file or a named preset")
    run.add_argument("config", help="path to a config file, or a preset name")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--trials", type=int, default=None, help="override trials per sweep point")
    run.add_argument("--out-dir", default=".", help="directory for result files")
    run.add_argument("--threads", type=int, default=1, help="worker processes")
    run.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="results serialization")

    sub.add_parser("list-presets", help="list shipped benchmark presets")

    describe = sub.add_parser("describe", help="print the config of a preset")
    describe.add_argument("preset")
    return parser


def _resolve_config(token: str) -> str:
    if os.path.exists(token):
        with open(token) as fh:
            return fh.read()
    if token in PRESETS:
        return preset_text(token)
    raise ValueError(f"'{token}' is neither a config file nor a preset "
                     f"(presets: {', '.join(PRESETS)})")


def _cmd_run(args) -> int:
    spec = parse_config_text(_resolve_config(args.config))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        spec = replace(spec, **overrides)
    result = run_experiment(spec, threads=args.threads)
    paths = write_outputs(result, args.out_dir, fmt=args.format)
    print(f"{spec.name}: {len(result.points)} sweep points x {spec.trials} trials "
          f"-> {len(result.trials)} rows in {result.wall_time_s:.1f}s")
    print(f"results:  {paths['results']}")
    print(f"manifest: {paths['manifest']}")
    return 0


def _cmd_list() -> int:
    width = max(len(name) for name in PRESETS)
    for name, summary in PRESETS.items():
        print(f"{name.ljust(width)}  {summary}")
    return 0


def _cmd_describe(args) -> int:
    sys.stdout.write(preset_text(args.preset))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list-presets":
            return _cmd_list()
        return _cmd_describe(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
