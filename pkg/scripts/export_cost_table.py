#!/usr/bin/env python3
"""Dump relative fine-tuning costs for every registry model as CSV.

By default each model is a single full fine-tune.  With --ref the table
becomes two-stage pipelines: the named reference trained first, then
each registry model, both for the full schedule.
"""

import argparse
import sys

from ftft.costs import MODEL_REGISTRY, CostError, cost_rows, write_cost_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ref", help="add this reference model as a first stage")
    ap.add_argument("--out", help="write CSV here instead of stdout")
    args = ap.parse_args()

    methods = {name: (name, args.ref) for name in sorted(MODEL_REGISTRY)}
    try:
        rows = cost_rows(methods)
    except CostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_cost_csv(rows, fh)
        print(f"wrote {args.out}")
    else:
        write_cost_csv(rows, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
