"""Command line entry point: ``specpert run|sweep|fit|check|demo``."""
import argparse
import csv
import json
import os
import sys
from importlib import resources

import numpy as np

from ..asymptotics import estimate_exponent, fit_two_term
from ..errors import CONFIG_INVALID, SpecPertError
from .config import load_config
from .runner import run_config, sweep

DEMOS = ("diagonal", "two_sequence", "brownian", "bridge", "violating")
FORMATS = {"json": ["json"], "csv": ["csv"], "both": ["csv", "json"]}


def demo_path(name):
    stem = os.path.basename(name)
    if stem.endswith(".json"):
        stem = stem[:-5]
    if stem.startswith("demo_"):
        stem = stem[5:]
    if stem not in DEMOS:
        raise SpecPertError(CONFIG_INVALID, f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return str(resources.files("specpert.runner").joinpath("demos", f"demo_{stem}.json"))


def read_values(path):
    """Last column of every numeric row; a non-numeric first row is taken as a header."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[-1].strip():
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                if i == 0:
                    continue
                raise SpecPertError(CONFIG_INVALID, f"{path}:{i + 1}: not a number: {row[-1]!r}") from None
    return np.asarray(values)


def _window(text):
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("window must be 'n_min,n_max'") from None
    return lo, hi


def _print_report(report, out):
    for c in report.checks:
        state = "PASS" if c["passed"] else "FAIL"
        extra = f" error={c['error']['code']}" if "error" in c else ""
        print(f"[{state}] {c['check_name']}{extra}", file=out)
    if report.verdict is not None:
        print(f"verdict preserved={report.verdict['preserved']}", file=out)
    if report.error is not None:
        print(f"error {report.error['code']}: {report.error['message']}", file=out)
    print(f"exit {report.exit_code}", file=out)


def _cmd_run(args, only=None):
    cfg = load_config(args.config)
    report = run_config(cfg, args.out, only=only, seed=args.seed, formats=FORMATS.get(args.format),
                        workers=args.workers)
    _print_report(report, sys.stdout)
    return report.exit_code


def _cmd_check(args):
    only = [s.strip() for s in args.only.split(",") if s.strip()] if args.only else None
    return _cmd_run(args, only)


def _cmd_demo(args):
    args.config = demo_path(args.name)
    return _cmd_run(args)


def _cmd_sweep(args):
    reports, summary = sweep(args.config, out_dir=args.out, workers=args.workers, seed=args.seed,
                             formats=FORMATS.get(args.format))
    for i, r in enumerate(reports):
        print(f"point {i}: exit {r.exit_code}, {r.passed_count}/{len(r.checks)} checks passed")
    print(f"summary {summary}")
    codes = [r.exit_code for r in reports]
    return 2 if 2 in codes else (1 if 1 in codes else 0)


def _cmd_fit(args):
    values = read_values(args.csv)
    exponent = args.exponent if args.exponent is not None else estimate_exponent(values)
    fit = fit_two_term(values, exponent, args.window)
    text = json.dumps(fit.to_dict(), sort_keys=True, indent=2)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "fit.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--workers", type=int, default=1, help="parallel workers for sweeps and homotopy")
    common.add_argument("--seed", type=int, help="override random seeds in the config")
    common.add_argument("--format", choices=sorted(FORMATS), help="report formats to write")

    parser = argparse.ArgumentParser(prog="specpert", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("run", parents=[common], help="run one experiment config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("sweep", parents=[common], help="run a sigma/delta/N grid")
    p.add_argument("config")
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("check", parents=[common], help="run selected checks of a config")
    p.add_argument("config")
    p.add_argument("--only", help="comma-separated check names")
    p.set_defaults(func=_cmd_check)
    p = sub.add_parser("demo", parents=[common], help=f"run a bundled demo: {', '.join(DEMOS)}")
    p.add_argument("name")
    p.set_defaults(func=_cmd_demo)
    p = sub.add_parser("fit", parents=[common], help="two-term fit of a column of values")
    p.add_argument("csv")
    p.add_argument("--exponent", type=float)
    p.add_argument("--window", type=_window)
    p.set_defaults(func=_cmd_fit)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecPertError as exc:
        print(f"error {exc.code}: {exc.message}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error IO: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
