"""Command-line driver: ``sdriesz {check,simulate,scan,place} --input FILE``.

Exit codes: 0 when every requested stage passes, 2 when a certificate fails
or is inconclusive, 1 for usage and description errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .exceptions import DescriptionError
from .harness import emit_csv, load_description, report_json, run_pipeline

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

COMMAND_STAGES = {
    "check": ("build", "assumptions", "epsilon_c", "tau_star", "unit_circle",
              "power_bound", "decay", "trajectory"),
    "scan": ("build", "assumptions", "epsilon_c", "tau_star", "unit_circle"),
    "simulate": ("build", "assumptions", "epsilon_c", "tau_star", "trajectory"),
    "place": ("build",),
}
_HELP = {
    "check": "run the full certificate pipeline",
    "scan": "continuous and discrete margin scans and the sampling-period search",
    "simulate": "sampled-data trajectory (period from --tau or half the admissible maximum)",
    "place": "feedback synthesis only",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tau(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("tau must lie in (0, 1)")
    return v


def _seed(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sdriesz", description="Sampled-data strong-stability certificates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMAND_STAGES:
        c = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        c.add_argument("--input", required=True, type=Path, help="system description (JSON)")
        c.add_argument("--out", type=Path, default=None,
                       help="directory for report.json and CSV series (default: report to stdout)")
        c.add_argument("--tau", type=_tau, default=None, help="override the evaluation period")
        c.add_argument("--seed", type=_seed, default=None, help="override the description seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        desc = load_description(args.input)
    except OSError as exc:
        print(f"sdriesz: cannot read {args.input}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except DescriptionError as exc:
        print(f"sdriesz: invalid description {args.input}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_pipeline(desc, COMMAND_STAGES[args.command], tau=args.tau, seed=args.seed)
    report["command"] = args.command
    text = report_json(report)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(text, encoding="utf-8")
        for which in sorted(report["series"]):
            emit_csv(report, which, args.out / f"{which}.csv")
    verdict = report["verdict"]
    status = "pass" if verdict["all_certificates_pass"] else "FAIL (" + ", ".join(verdict["failed"]) + ")"
    print(f"sdriesz {args.command}: {status}", file=sys.stderr)
    return EXIT_OK if verdict["all_certificates_pass"] else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
