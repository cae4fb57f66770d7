"""Command-line entry point: ``shorent {trace,table1,table2,dist,success}``."""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import harness
from .circuit import DEFAULT_MAX_QUBITS, InvalidInstanceError
from .entanglement import AnalyticsOptions, SubsetMode
from .qstate import NumericalError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

ANALYTICS = ("entropy", "subsets", "negativity", "eof", "pattern")


def _moduli(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _analytics(text: str) -> list[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    bad = [n for n in names if n not in ANALYTICS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown analytics {bad}; choose from {', '.join(ANALYTICS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shorent", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="run one circuit with analytics at every checkpoint")
    p.add_argument("--modulus", "-N", type=int, required=True)
    p.add_argument("--base", "-x", type=int, help="coprime base; omit to sweep every coprime")
    p.add_argument("--fine-iqft", action="store_true", help="also checkpoint after each IQFT gate")
    p.add_argument("--subset-mode", default="all", help="all | sample:COUNT")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--analytics",
        type=_analytics,
        default=list(ANALYTICS),
        help="comma-separated subset of " + ",".join(ANALYTICS),
    )
    p.add_argument("--eof-pairs", choices=("all", "cross"), default="all")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path)
    p.add_argument("--max-qubits", type=int, default=DEFAULT_MAX_QUBITS)

    p = sub.add_parser("table1", help="subset entropies and negativity for N=21, x=2")
    p.add_argument("--out", type=Path)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("table2", help="mean one-qubit entropy decrease across the IQFT")
    p.add_argument("--moduli", type=_moduli, default=list(harness.TABLE2_MODULI))
    p.add_argument("--out", type=Path)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("dist", help="exact measurement distribution and peak summary")
    p.add_argument("--modulus", "-N", type=int, required=True)
    p.add_argument("--base", "-x", type=int, required=True)
    p.add_argument("--out", type=Path)
    p.add_argument("--max-qubits", type=int, default=DEFAULT_MAX_QUBITS)

    p = sub.add_parser("success", help="exact per-trial success probability for every coprime")
    p.add_argument("--modulus", "-N", type=int, required=True)
    p.add_argument("--out", type=Path)
    p.add_argument("--workers", type=int)
    return parser


def _emit(result, out: Path | None) -> None:
    # stdout gets the human table; files get csv or json by extension
    if out is None:
        text = result.render()
    elif harness.format_for(out) == "json":
        text = result.to_json()
    else:
        text = result.to_csv()
    harness.write_output(text, out)


def _trace(args) -> None:
    chosen = set(args.analytics)
    mode = SubsetMode.parse(args.subset_mode, args.seed)
    options = AnalyticsOptions(**{name: name in chosen for name in ANALYTICS}, mode=mode, eof_pairs=args.eof_pairs)
    config = harness.ExperimentConfig(
        N=args.modulus,
        x=args.base,
        fine_iqft=args.fine_iqft,
        mode=mode,
        analytics=options,
        seed=args.seed,
        fmt=args.format,
        out=args.out,
        max_qubits=args.max_qubits,
    )
    traces = harness.run_traces(config)
    harness.write_output(harness.export_traces(traces, config), args.out)


def run(args) -> None:
    if args.command == "trace":
        _trace(args)
    elif args.command == "table1":
        _emit(harness.table1_experiment(workers=args.workers), args.out)
    elif args.command == "table2":
        _emit(harness.table2_experiment(args.moduli, workers=args.workers), args.out)
    elif args.command == "dist":
        _emit(harness.distribution_experiment(args.modulus, args.base, args.max_qubits), args.out)
    elif args.command == "success":
        _emit(harness.success_stats(args.modulus, workers=args.workers), args.out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            run(args)
    except NumericalError as exc:
        print(f"shorent: numerical check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInstanceError, ValueError) as exc:
        print(f"shorent: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
