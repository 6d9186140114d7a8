"""Command-line entry point: run a config of benchmark experiments and
write the comparison table.

Exit codes: 0 when every run reached the objective target, 2 when some
run stopped on its horizon or budget instead, 1 on configuration or I/O
errors.
"""

import argparse
import sys
from dataclasses import replace

from .experiments import DEFAULT_SCAN_CAP, compare_methods, load_experiment


def _parse_order(text):
    return text if text == "exact" else int(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qoc",
        description="Gradient-flow synthesis of quantum gate controls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiments in a config file")
    run.add_argument("config", help="path to the experiment config")
    run.add_argument("--out", default="results.csv", metavar="PATH",
                     help="CSV output path (default: results.csv)")
    run.add_argument("--json", default=None, metavar="PATH",
                     help="JSON mirror path (default: CSV path with .json suffix)")
    run.add_argument("--parallel", type=int, default=1, metavar="N",
                     help="run up to N experiments in parallel processes")
    run.add_argument("--order-override", default=None, metavar="M",
                     help="force every run to correction order M (integer or 'exact')")
    run.add_argument("--scan-cap", type=float, default=DEFAULT_SCAN_CAP, metavar="S",
                     help=f"largest horizon the scan may reach (default: {DEFAULT_SCAN_CAP:g})")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        specs = load_experiment(args.config)
        if args.order_override is not None:
            order = _parse_order(args.order_override)
            specs = [replace(spec, order=order) for spec in specs]
        records = compare_methods(specs, args.out, json_path=args.json,
                                  parallel=args.parallel, scan_cap=args.scan_cap)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for r in records:
        print(f"{r.gate} T={r.t_final:g} L={r.n_slices} order={r.order}: "
              f"S={r.s_reported:g} J={r.final_j:.3e} ({r.stop_reason})")
    print(f"wrote {args.out}")
    return 0 if all(r.stop_reason == "j_reached" for r in records) else 2


if __name__ == "__main__":
    sys.exit(main())
