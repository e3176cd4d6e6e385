"""Command-line entry point: ``hammerff run | validate | export-figures``.

Exit codes: 0 success, 2 validation or configuration failure, 3 runtime failure
(including a method that could not be completed).
"""
from __future__ import annotations

import argparse
import sys

from .errors import HammerffError
from .experiment import (METHODS, OUTPUT_DIR_ENV, export_figures, load_config, resolve_output_dir,
                         run_experiment, summary_table, validate, write_outputs)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3


def _methods(text):
    ms = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in ms if m not in METHODS]
    if bad or not ms:
        raise argparse.ArgumentTypeError(f"choose a comma-separated subset of {', '.join(METHODS)}")
    return ms


def build_parser():
    p = argparse.ArgumentParser(prog="hammerff", description=__doc__.splitlines()[0])
    p.add_argument("--quiet", action="store_true", help="only print errors")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train, identify and benchmark")
    run.add_argument("config")
    run.add_argument("--output-dir", help=f"overrides ${OUTPUT_DIR_ENV} and the config value")
    run.add_argument("--seed", type=int)
    run.add_argument("--methods", type=_methods, help=f"comma-separated subset of {','.join(METHODS)}")
    run.add_argument("--parallel", action="store_true", help="run methods in separate processes")
    run.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    val = sub.add_parser("validate", help="static checks on a config")
    val.add_argument("config")
    val.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    exp = sub.add_parser("export-figures", help="plot-ready CSVs from a report")
    exp.add_argument("report")
    exp.add_argument("--output-dir")
    exp.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return p


def _print_checks(checks, quiet):
    for c in checks:
        if not quiet or c.status == "fail":
            print(f"[{c.status.upper():4}] {c.name}: {c.detail}")


def cmd_validate(args):
    try:
        cfg = load_config(args.config)
    except HammerffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    checks = validate(cfg)
    _print_checks(checks, args.quiet)
    return EXIT_OK if all(c.ok for c in checks) else EXIT_INVALID


def cmd_run(args):
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(seed=args.seed, methods=args.methods)
    except HammerffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    checks = validate(cfg)
    if not all(c.ok for c in checks):
        _print_checks(checks, quiet=True)
        return EXIT_INVALID
    out_dir = resolve_output_dir(args.output_dir, cfg)
    log = (lambda m: None) if args.quiet else (lambda m: print(m, file=sys.stderr))
    try:
        report, meta, optim = run_experiment(cfg, parallel=args.parallel, log=log)
        write_outputs(report, meta, optim, out_dir)
    except (HammerffError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        print(summary_table(report), end="")
        print(f"outputs in {out_dir}")
    failed = [m for m, r in report["methods"].items() if r["status"] != "ok"]
    for m in failed:
        print(f"error: method {m} failed: {report['methods'][m]['reason']}", file=sys.stderr)
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_export(args):
    try:
        man = export_figures(args.report, args.output_dir)
    except HammerffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not args.quiet:
        for f in man["files"]:
            print(f"wrote {f}")
        for s in man["skipped"]:
            print(f"skipped {s['bundle']}: {s['reason']}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    return {"run": cmd_run, "validate": cmd_validate, "export-figures": cmd_export}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
