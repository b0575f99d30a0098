"""Planted minimisers of a max of two indefinite quadratics.

With local curvature q along the constraint normal the relaxation quotient is
lam - q db / (2 alpha^2): below lam for q > 0, above it by a margin linear in
db for q < 0. The table shows both cases.
"""

import numpy as np

from shadowprice.suite import planted_run


def main():
    rng = np.random.default_rng(0)
    for q in (0.5, -0.5):
        out = planted_run(rng, deltas=(1e-1, 1e-2, 1e-3, 1e-4), q=q)
        print(f"q = {q:+.1f}  lam = {out.lam_min:.6f}  regular = {out.regular}")
        for r in out.report["rows"]:
            print(f"  db {r['delta_b']:.0e}  quotient - lam {r['quotient'] - out.lam_min:+.3e}")


if __name__ == "__main__":
    main()
