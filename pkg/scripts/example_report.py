"""Golden example: min max(x, 2x) s.t. x >= 0.

Prints the multiplier interval and the perturbation table for both signs of db.
"""

from shadowprice.shadow import multipliers_at, verify_constraint
from shadowprice.solver import solve
from shadowprice.suite import example_problem


def main():
    p = example_problem()
    sol = solve(p)
    iv = multipliers_at(p, sol.x).ranges[0]
    print(f"x* = {sol.x[0]}  f* = {sol.value}  multipliers in [{iv.lo}, {iv.hi}]")
    rep = verify_constraint(p, 0, (1e-1, 1e-2, 1e-3, -1e-1, -1e-2, -1e-3))
    print(f"{'db':>8} {'f':>10} {'-df/db':>8}  verdict")
    for r in rep.rows:
        print(f"{r.delta_b:>8.0e} {r.value:>10.4f} {r.quotient:>8.4f}  {r.verdict}")
    print("overall:", "PASS" if rep.passed else "FAIL")


if __name__ == "__main__":
    main()
