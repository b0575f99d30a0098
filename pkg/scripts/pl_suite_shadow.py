"""Shadow-price bounds over a random convex piecewise-linear suite.

For every active constraint, relaxation quotients are compared with the smallest
multiplier and tightening quotients with the largest one.
"""

import argparse

import numpy as np

from shadowprice.instances import SuiteConfig, pl_suite
from shadowprice.suite import pl_shadow_reports


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    reps = pl_shadow_reports(pl_suite(SuiteConfig(count=args.count, seed=args.seed)))
    margins = np.array([[c["worst_margin"] for c in r["checks"]] for r in reps])
    spread = np.array([r["lambda_max"] - r["lambda_ref"] for r in reps])
    print(f"{len(reps)} active constraints, {sum(r['verdict'] != 'PASS' for r in reps)} failures")
    print(f"worst relaxation margin {margins[:, 0].max():.2e}, worst tightening margin {margins[:, 1].max():.2e}")
    print(f"{int((spread > 1e-9).sum())} constraints with a nondegenerate multiplier interval")


if __name__ == "__main__":
    main()
