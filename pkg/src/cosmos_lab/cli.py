"""Command-line entry point: ``cosmos-lab <subcommand> [options]``.

Exit status: 0 success, 1 a check failed (grad-check), 2 configuration or
usage error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .accountant import memory_report, report_csv, report_text
from .errors import ConfigError
from .runner import (EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, expand_sweep, grad_check,
                     param_names, parse_config, probe_csv, probe_ns5, records_csv, summary_csv,
                     sweep, train, write_atomic)

EXIT_CHECK_FAILED = 1


def _load_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc


def _emit(text: str, out_dir, filename: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
    else:
        write_atomic(Path(out_dir) / filename, text)


def _options(args, keys) -> dict:
    """Merge an optional JSON config with explicit flags (flags win)."""
    opts = {}
    if args.config is not None:
        doc = _load_json(args.config)
        if not isinstance(doc, dict):
            raise ConfigError("expected a JSON object", args.config)
        for key, value in doc.items():
            if key not in keys:
                raise ConfigError("unknown key", key)
            opts[key] = value
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def cmd_run(args) -> int:
    if args.config is None:
        raise ConfigError("run needs --config PATH")
    doc = _load_json(args.config)
    if isinstance(doc, dict) and args.seed is not None:
        doc = {**doc, "seed": args.seed}
    cfg = parse_config(json.dumps(doc))
    out = args.out if args.out is not None else cfg.out
    result = train(cfg)
    _emit(records_csv(result.records, param_names(cfg)), out, "records.csv")
    if out is not None:
        write_atomic(Path(out) / "config.json", json.dumps(cfg.to_dict(), indent=2) + "\n")
    if result.diverged:
        print(f"diverged at step {result.records[-1].step}", file=sys.stderr)
        return EXIT_DIVERGED
    print(f"final_loss {result.final_loss:.17g}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config is None:
        raise ConfigError("sweep needs --config PATH")
    doc = _load_json(args.config)
    if args.seed is not None:
        if isinstance(doc, dict) and "grid" in doc:
            doc = {**doc, "base": {**doc.get("base", {}), "seed": args.seed}}
        elif isinstance(doc, list):
            doc = [{**d, "seed": args.seed} if isinstance(d, dict) else d for d in doc]
    rows = sweep(expand_sweep(doc), args.out, jobs=args.jobs)
    sys.stdout.write(summary_csv(rows))
    return EXIT_DIVERGED if any(r["status"] != "ok" for r in rows) else EXIT_OK


def cmd_probe(args) -> int:
    opts = _options(args, ("rows", "cols", "samples", "seed", "ensemble"))
    rows = probe_ns5(**opts)
    _emit(probe_csv(rows), args.out, "probe_ns5.csv")
    worst = min(r["alignment"] for r in rows)
    print(f"min_alignment {worst:.17g}", file=sys.stderr)
    return EXIT_OK


def cmd_memory(args) -> int:
    opts = _options(args, ("d", "r"))
    d = opts.get("d", 768)
    r = opts.get("r", max(1, round(0.05 * d)))
    rows = memory_report(d, r)
    if args.out is not None:
        write_atomic(Path(args.out) / "memory.csv", report_csv(rows))
        write_atomic(Path(args.out) / "memory.txt", report_text(rows))
    else:
        sys.stdout.write(report_csv(rows) if args.format == "csv" else report_text(rows))
    return EXIT_OK


GRAD_CHECK_COLUMNS = ("problem", "point", "rel_error", "tol", "passed")


def cmd_grad_check(args) -> int:
    opts = _options(args, ("points", "seed", "h"))
    rows = grad_check(**opts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRAD_CHECK_COLUMNS)
    for row in rows:
        writer.writerow([row["problem"], row["point"], format(row["rel_error"], ".17g"),
                         row["tol"], str(row["passed"]).lower()])
    _emit(buf.getvalue(), args.out, "grad_check.csv")
    failed = sum(not r["passed"] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} points passed", file=sys.stderr)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: stdout)")
    common.add_argument("--seed", metavar="N", type=int, help="override the config seed")

    parser = argparse.ArgumentParser(prog="cosmos-lab",
                                     description="Matrix-optimizer lab: runs, sweeps and probes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="train one configuration")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="run a grid of configurations")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("probe-ns5", parents=[common], help="compare ns5 with the exact sign")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--ensemble", choices=("gaussian", "orthogonal"))
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("memory", parents=[common], help="optimizer-state memory table")
    p.add_argument("--d", type=int, help="model width (default 768)")
    p.add_argument("--r", type=int, help="subspace rank (default round(0.05 d))")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_memory)

    p = sub.add_parser("grad-check", parents=[common], help="finite-difference gradient suite")
    p.add_argument("--points", type=int, help="seeded points per problem (default 10)")
    p.add_argument("--h", type=float, help="central-difference step (default 1e-5)")
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
