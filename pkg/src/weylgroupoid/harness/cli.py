"""Command line entry point: ``weylgroupoid {list-examples,run,crosscheck,plot}``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..geometry import EXAMPLE_NAMES, make_example
from .config import CATALOGUE, ConfigError, load_config
from .experiments import crosscheck, run_experiment
from .plotting import plot_records

log = logging.getLogger("weylgroupoid")

CROSSCHECK_TOL = 1e-6


def _list_examples(args) -> int:
    for name in EXAMPLE_NAMES:
        m = make_example(name)
        print(f"{name:26s} family={m.family:15s} fiber_dim={m.fiber_dim} sign={m.default_sign:+d}")
    print("\nobservables:", ", ".join(sorted(CATALOGUE)))
    return 0


def _run(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output
    rec = run_experiment(cfg, out)
    for key, fit in rec.fits.items():
        d = fit["dirac"]
        order = "n/a" if d is None else f"{d['order']:.3f} (residual {d['residual']:.3f})"
        print(f"{key}: dirac order {order}; checks {rec.checks[key]}")
    print(f"wrote {out}/records.csv")
    return 0


def _crosscheck(args) -> int:
    cfg = load_config(args.config)
    rows = crosscheck(cfg)
    worst = 0.0
    print(f"{'f_id':10s} {'hbar':>8s} {'transformation':>16s} {'pair':>16s} {'rel. diff':>10s}")
    for r in rows:
        worst = max(worst, r["relative_difference"])
        print(f"{r['f_id']:10s} {r['hbar']:8.4g} {r['transformation_norm']:16.10g} {r['pair_norm']:16.10g} "
              f"{r['relative_difference']:10.2e}")
    ok = worst < CROSSCHECK_TOL
    print(f"max relative difference {worst:.2e}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _plot(args) -> int:
    for p in plot_records(args.records, args.out):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weylgroupoid", description="Strict Weyl quantization experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list-examples", help="list shipped groupoid examples").set_defaults(func=_list_examples)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="output directory (default: config 'output')")
    r.set_defaults(func=_run)
    c = sub.add_parser("crosscheck", help="compare translation-groupoid and pair-groupoid norms")
    c.add_argument("--config", required=True)
    c.set_defaults(func=_crosscheck)
    pl = sub.add_parser("plot", help="render SVG plots from a records CSV")
    pl.add_argument("--records", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
