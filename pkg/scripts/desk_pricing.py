"""Two-user desk scenario: clearing price by dual ascent against the multiplier interval."""

import numpy as np

from shadowprice.pricing import BALANCE, dual_ascent, scenario_to_problem, verify_capacity_shadow, welfare_max
from shadowprice.shadow import multipliers_at
from shadowprice.suite import desk_scenario


def main():
    sc = desk_scenario()
    res = dual_ascent(sc)
    W, x, s = welfare_max(sc)
    iv = multipliers_at(scenario_to_problem(sc), np.r_[x, s]).ranges[BALANCE]
    print(f"optimum x = {x}, s = {s}, welfare = {W}")
    print(f"price {res.price:.5f} after {res.iterations} iterations, residual {res.residual:.1e}, converged {res.converged}")
    print(f"balance multipliers in [{iv.lo}, {iv.hi}]")
    for it in (100, 1000, 5000):
        r = dual_ascent(sc, max_iter=it)
        print(f"  {it:>5} iterations: price {r.price:.5f}, allocations {np.round(r.allocations, 4)}")
    rep = verify_capacity_shadow(sc, price=res.price)
    print("capacity shadow check:", "PASS" if rep.passed else "FAIL")
    for r in rep.rows:
        print(f"  dL {r.delta_b:.0e}  welfare gain per unit {r.quotient:.4f}")


if __name__ == "__main__":
    main()
