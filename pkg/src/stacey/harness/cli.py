"""Command-line entry point.

    stacey run <config>
    stacey sweep <config> --grid "optimizer.p=2,3;optimizer.eta=0.1,0.01"
    stacey verify <suite>
    stacey export <glob> --channels loss,stationarity --out plot.csv

Exit codes: 0 success, 1 check failure, 2 config error, 3 divergence.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys

from ..errors import ConfigError
from .config import load_config
from .export import export_plot_data, load_records
from .runner import record_path, run_experiment
from .suites import SUITES, run_suite
from .sweep import parse_grid, sweep, write_summary

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output
    records = run_experiment(cfg, out_dir=out)
    for rec in records:
        final = rec.channel("loss")
        status = "DIVERGED" if rec.diverged else f"final loss {final[-1]:.6g}"
        where = f" -> {record_path(out, rec)}" if out else ""
        print(f"seed {rec.seed}: {status}{where}")
    return EXIT_DIVERGED if any(r.diverged for r in records) else EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    grid = parse_grid(args.grid or "")
    out = args.out or cfg.output
    rows = sweep(grid, cfg, out_dir=out)
    if out is None:
        write_summary(rows, "/dev/stdout")
    else:
        print(f"{len(rows)} cells -> {out}/summary.csv")
    return EXIT_OK


def _cmd_verify(args) -> int:
    verdict = run_suite(args.suite)
    text = json.dumps(verdict, indent=2, default=float)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if verdict["passed"] else EXIT_CHECK


def _cmd_export(args) -> int:
    paths = sorted(glob.glob(args.pattern))
    if not paths:
        print(f"no files match {args.pattern!r}", file=sys.stderr)
        return EXIT_CONFIG
    records = load_records(paths)
    channels = [c.strip() for c in args.channels.split(",") if c.strip()]
    out = export_plot_data(records, channels, args.out)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stacey", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every seed of a config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides run.output)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="grid sweep over config keys")
    p.add_argument("config")
    p.add_argument("--grid", default="", help='e.g. "optimizer.p=2,3;optimizer.eta=0.1,0.01"')
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help=f"one of {', '.join(SUITES + ('all',))}")
    p.add_argument("--out", help="also write the JSON verdict here")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("export", help="long-format CSV of run channels")
    p.add_argument("pattern", help="glob of run CSV files")
    p.add_argument("--channels", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
