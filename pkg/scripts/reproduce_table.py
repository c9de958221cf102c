"""Recompute the experiment catalog plus the interferometer row.

    python3 scripts/reproduce_table.py [--csv out.csv]
"""

import argparse
import sys

from timedil.catalog import load_catalog, ordering_consistent, rank_catalog, report_csv, report_text


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--csv", metavar="PATH", help="also write the report as CSV")
    args = p.parse_args(argv)
    rows = rank_catalog(load_catalog(), include_interferometer=True)
    sys.stdout.write(report_text(rows))
    ok, bad = ordering_consistent(rows)
    print(f"\nordering among rows within a decade of the listed value: {'consistent' if ok else bad}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(report_csv(rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
