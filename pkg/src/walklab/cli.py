"""Command line entry point: ``walklab run | list | plot``.

Exit codes: 0 all criteria passed, 1 statistical failure, 2 usage or
configuration error, 3 identity violation.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, build_config, load_config
from .embedding import IdentityViolation
from .experiments import list_experiments, run_experiment
from .plot import emit_plot

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_IDENTITY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="walklab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment")
    run.add_argument("--config", help="flat key = value file")
    run.add_argument("--seed", type=int)
    run.add_argument("--replicas", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    sub.add_parser("list", help="list the experiment catalog")
    plot = sub.add_parser("plot", help="render a CSV to SVG")
    plot.add_argument("csv")
    plot.add_argument("--spec", default="")
    plot.add_argument("--output")
    return ap


def _run(args) -> int:
    values = load_config(args.config) if args.config else {}
    cfg = build_config(args.experiment, values, seed=args.seed, replicas=args.replicas,
                       out=args.out, workers=args.workers)
    report = run_experiment(cfg)
    for c in report.checks:
        tag = f"[{c.criterion}]" if c.criterion else "[diag]"
        print(f"{c.decision.upper():4} {tag:6} {c.name}: estimate={c.estimate:.6g} "
              f"reference={c.reference:.6g} ({c.tolerance})")
    s = report.summary()
    print(f"{report.experiment}: {'PASS' if s['passed'] else 'FAIL'} "
          f"({s['n_checks'] - s['n_failed']}/{s['n_checks']} checks) -> {cfg.out}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, exp in list_experiments().items():
                crit = ",".join(map(str, exp.criteria))
                print(f"{name:22} criteria {crit:8} {exp.description}")
            return EXIT_PASS
        if args.command == "plot":
            print(emit_plot(args.csv, args.spec, args.output))
            return EXIT_PASS
        return _run(args)
    except IdentityViolation as exc:
        print(f"identity violation: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
