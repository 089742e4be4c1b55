#!/usr/bin/env python3
"""Sweep the convergence-control parameter at a fixed probe point.

Writes one CSV row per hbar with a value column per truncation order,
so the widening of the flat region with order is visible side by side:

    python scripts/hcurve_sweep.py --preset 4.2 --alpha 0.5 \\
        --orders 4 8 12 --out hcurve.csv
"""

import argparse
import csv
import sys

from hatmfp.engine import HatmConfig, h_curve
from hatmfp.fokker_planck import PRESET_IDS, load_problem, preset


def main() -> None:
    parser = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=PRESET_IDS)
    source.add_argument("--problem", help="problem definition JSON file")
    parser.add_argument("--alpha", type=float, default=0.75)
    parser.add_argument("--orders", type=int, nargs="+", default=[4, 8])
    parser.add_argument(
        "--probe",
        type=float,
        nargs=3,
        metavar=("X", "Y", "T"),
        default=(1.0, 0.0, 0.3),
    )
    parser.add_argument("--h-min", type=float, default=-2.0)
    parser.add_argument("--h-max", type=float, default=-0.05)
    parser.add_argument("--h-count", type=int, default=40)
    parser.add_argument("--out", help="CSV path (default: stdout)")
    args = parser.parse_args()

    problem = preset(args.preset) if args.preset else load_problem(args.problem)
    step = (args.h_max - args.h_min) / max(args.h_count - 1, 1)
    h_values = [args.h_min + i * step for i in range(args.h_count)]
    h_values = [h for h in h_values if h != 0.0]

    columns = []
    for order in args.orders:
        config = HatmConfig(alpha=args.alpha, hbar=-1.0, order=order)
        curve = h_curve(problem, config, tuple(args.probe), h_values)
        columns.append([v for _, v in curve])

    sink = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    writer = csv.writer(sink)
    writer.writerow(["hbar"] + [f"order_{n}" for n in args.orders])
    for i, h in enumerate(h_values):
        writer.writerow([repr(h)] + [repr(col[i]) for col in columns])
    if args.out:
        sink.close()
        print(f"wrote {len(h_values)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
