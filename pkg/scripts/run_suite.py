"""Run the seeded end-to-end suite and write its JSON report."""

import argparse
import sys

from shadowprice.schema import canonical
from shadowprice.suite import RunConfig, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pl-count", type=int, default=30)
    ap.add_argument("--planted-count", type=int, default=5)
    ap.add_argument("--out", help="output path (stdout if omitted)")
    args = ap.parse_args()
    cfg = RunConfig(args.seed, args.pl_count, args.planted_count)
    text = canonical(run_suite(cfg))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
