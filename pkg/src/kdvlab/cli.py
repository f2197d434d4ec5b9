"""Command-line entry point: validate, run, report, sweep."""
from __future__ import annotations

import argparse
import glob
import json
import sys

from .config import load_config, validate
from .errors import ConfigError
from .runner import RunSummary, report, run, sweep


def _load(path: str, args):
    with open(path) as fh:
        raw = json.load(fh)
    if args.out:
        raw["output_dir"] = args.out
    if args.seed is not None:
        raw["seed"] = args.seed
        if raw.get("initial_data", {}).get("kind") == "random_bandlimited":
            raw["initial_data"]["seed"] = args.seed
    if args.threads:
        raw["threads"] = args.threads
    return validate(raw)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kdvlab",
        description="Spectral diagnostics and solvers for KdV-type flows",
    )
    parser.add_argument("--config", help="path to a JSON run configuration")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--threads", type=int, help="worker threads for sweeps")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("validate", help="check a config and print the normalized form")
    sub.add_parser("run", help="execute one experiment")
    p_rep = sub.add_parser("report", help="aggregate summary JSON files")
    p_rep.add_argument("summaries", nargs="*", help="summary.json paths or globs")
    p_sw = sub.add_parser("sweep", help="run a config across parameter values")
    p_sw.add_argument("--param", required=True, help="dotted config key to vary")
    p_sw.add_argument("--values", required=True,
                      help="comma-separated values (JSON scalars)")
    args = parser.parse_args(argv)

    if args.verb in ("validate", "run", "sweep") and not args.config:
        parser.error(f"{args.verb} requires --config")

    if args.verb == "validate":
        try:
            cfg = _load(args.config, args)
        except ConfigError as exc:
            for fieldname, msg in exc.errors:
                print(f"error: {fieldname}: {msg}", file=sys.stderr)
            return 2
        print(cfg.canonical_json())
        return 0

    if args.verb == "run":
        try:
            cfg = _load(args.config, args)
        except ConfigError as exc:
            for fieldname, msg in exc.errors:
                print(f"error: {fieldname}: {msg}", file=sys.stderr)
            return 2
        summary = run(cfg)
        text, _, status = report([summary])
        print(text)
        return status

    if args.verb == "report":
        paths = []
        for pattern in args.summaries:
            hits = glob.glob(pattern)
            paths.extend(hits if hits else [pattern])
        if not paths:
            print("error: no summaries given", file=sys.stderr)
            return 2
        summaries = [RunSummary.load(p) for p in paths]
        text, index, status = report(summaries)
        print(text)
        print(json.dumps(index, indent=1, sort_keys=True))
        return status

    if args.verb == "sweep":
        try:
            cfg = _load(args.config, args)
        except ConfigError as exc:
            for fieldname, msg in exc.errors:
                print(f"error: {fieldname}: {msg}", file=sys.stderr)
            return 2
        values = [json.loads(v) for v in args.values.split(",")]
        summaries = sweep(cfg, args.param, values, threads=args.threads)
        text, _, status = report(summaries)
        print(text)
        return status

    return 2


if __name__ == "__main__":
    sys.exit(main())
