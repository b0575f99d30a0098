import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowprice.errors import BaseUnsolved, InsufficientRows
from shadowprice.instances import SuiteConfig, pl_suite, random_convex_pl
from shadowprice.kkt import LinearConstraint
from shadowprice.nsfunc import Affine, Max
from shadowprice.shadow import (
    CSV_COLUMNS,
    multipliers_at,
    perturb_and_resolve,
    value_probe,
    verify_constraint,
    verify_lower_bound_tightening,
    verify_upper_bound,
)
from shadowprice.solver import Problem, solve, solve_oracle_grid

ex1 = Problem(Max([Affine([1.0]), Affine([2.0])]), [LinearConstraint([-1.0], 0.0)], 1)
# same objective with an extra constraint that is never active
ex1_slack = Problem(ex1.objective, [LinearConstraint([-1.0], 0.0), LinearConstraint([1.0], 5.0)], 1)


def test_example_single_relaxation():
    rep = perturb_and_resolve(ex1, 0, [0.1])
    row = rep.rows[0]
    assert row.value == pytest.approx(-0.1, abs=1e-15)
    assert row.delta_f == pytest.approx(-0.1, abs=1e-15)
    assert row.quotient == pytest.approx(1.0, abs=1e-12)


def test_inactive_constraint_has_no_effect():
    rep = perturb_and_resolve(ex1_slack, 1, [0.1, -0.1, 1e-3])
    assert all(r.delta_f == 0.0 for r in rep.rows)


def test_rows_sorted_by_magnitude():
    rep = perturb_and_resolve(ex1, 0, [1e-3, -0.1, 1e-2, 0.1])
    assert [r.delta_b for r in rep.rows] == [-0.1, 0.1, 1e-2, 1e-3]


def test_zero_delta_rejected():
    with pytest.raises(ValueError):
        perturb_and_resolve(ex1, 0, [0.0])


def test_unsolvable_base():
    p = Problem(Affine([1.0]), [LinearConstraint([1.0], -1.0)], 1, lower=[0.0], upper=[1.0])
    with pytest.raises(BaseUnsolved):
        perturb_and_resolve(p, 0, [0.1])


def test_infeasible_rows_recorded_not_fatal():
    p = Problem(Affine([1.0]), [LinearConstraint([-1.0], -0.5)], 1, lower=[0.0], upper=[1.0])
    rep = perturb_and_resolve(p, 0, [-1.0, -0.1])
    assert rep.rows[0].status == "infeasible" and rep.rows[1].ok


def test_upper_bound_verdicts():
    rep = perturb_and_resolve(ex1, 0, [1e-1, 1e-2, 1e-3])
    assert verify_upper_bound(rep, 1.0).passed
    assert not verify_upper_bound(rep.rows, 0.5).passed


def test_insufficient_rows():
    rep = perturb_and_resolve(ex1, 0, [1e-1, 1e-2])
    with pytest.raises(InsufficientRows):
        verify_upper_bound(rep, 1.0)
    with pytest.raises(InsufficientRows):
        verify_lower_bound_tightening(rep, 2.0)


def test_example_tightening():
    rep = perturb_and_resolve(ex1, 0, [-1e-1, -1e-2, -1e-3])
    assert rep.rows[0].value == pytest.approx(0.2) and rep.rows[0].quotient == pytest.approx(2.0)
    assert verify_lower_bound_tightening(rep, 2.0).passed
    assert not verify_lower_bound_tightening(rep, 2.5).passed


def test_slack_tightening_zero():
    rep = perturb_and_resolve(ex1_slack, 1, [-1e-1, -1e-2, -1e-3])
    assert all(r.quotient == 0.0 for r in rep.rows)
    assert verify_lower_bound_tightening(rep, 0.0).passed


def test_value_probe_example():
    (pr,) = value_probe(ex1, 0, [0.01])
    assert pr.right == pytest.approx(-1.0, abs=1e-12) and pr.left == pytest.approx(-2.0, abs=1e-12)


def test_value_probe_slack():
    (pr,) = value_probe(ex1_slack, 1, [0.01])
    assert pr.right == 0.0 and pr.left == 0.0


def test_value_probe_constant_below_breakpoint():
    p = pl_suite(SuiteConfig(count=1, seed=2))[0]
    i = int(np.flatnonzero(multipliers_at(p, solve(p).x).active[: len(p.constraints)])[0])
    a, b = value_probe(p, i, [1e-4, 1e-6])
    assert a.right == pytest.approx(b.right, abs=1e-7) and a.left == pytest.approx(b.left, abs=1e-7)


def test_rows_match_independent_resolve():
    for p in pl_suite(SuiteConfig(count=5, seed=4)):
        i = 0
        rep = perturb_and_resolve(p, i, [0.1, 0.01, -0.01])
        for r in rep.rows:
            ref = solve_oracle_grid(p.with_rhs(i, p.constraints[i].b + r.delta_b))
            assert r.value == pytest.approx(ref.value, abs=1e-9)


def test_verify_constraint_example():
    rep = verify_constraint(ex1, 0, [1e-1, 1e-2, 1e-3, -1e-1, -1e-2, -1e-3])
    assert rep.passed
    assert rep.lambda_ref == pytest.approx(1.0) and rep.lambda_max == pytest.approx(2.0)
    assert {r.quotient for r in rep.rows if r.delta_b > 0} == {1.0}
    assert {r.quotient for r in rep.rows if r.delta_b < 0} == {2.0}


def test_csv_report():
    rep = verify_constraint(ex1, 0, [1e-1, 1e-2, 1e-3])
    lines = rep.to_csv().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 3 + 1 and lines[-1] == ""
    assert lines[1] == "0.1,-0.1,-0.1,1.0,1.0,pass"
    assert "\r" not in rep.to_csv()


def test_multiplier_summary_example():
    m = multipliers_at(ex1, [0.0])
    d = m.to_dict()
    assert d["intervals"] == [{"lo": 1.0, "hi": 2.0}]
    assert d["min_multipliers"] == [1.0] and d["kkt_residual"] == 0.0


# --- properties


@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 0.5))
def test_relaxation_never_hurts(seed, db):
    rng = np.random.default_rng(seed)
    p = random_convex_pl(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    if not solve(p).ok:
        return
    for i in range(len(p.constraints)):
        (row,) = perturb_and_resolve(p, i, [db]).rows
        assert row.delta_f <= 1e-9


def test_any_multiplier_in_interval_bounds_quotient():
    rep = perturb_and_resolve(ex1, 0, [1e-1, 1e-2, 1e-3])
    for lam in np.linspace(1.0, 2.0, 5):
        assert verify_upper_bound(rep, lam).passed


def test_pl_tail_constant():
    for p in pl_suite(SuiteConfig(count=5, seed=9)):
        m = multipliers_at(p, solve(p).x)
        for i, f in enumerate(m.active[: len(p.constraints)]):
            if f:
                q = [r.quotient for r in perturb_and_resolve(p, i, [1e-3, 1e-4, 1e-5]).rows]
                assert max(q) - min(q) <= 1e-9 * max(1.0, abs(q[-1]))


def test_nonunique_spread_on_example():
    rep = perturb_and_resolve(ex1, 0, [1e-2, -1e-2])
    q = sorted(r.quotient for r in rep.rows)
    iv = multipliers_at(ex1, [0.0]).ranges[0]
    assert q[0] == pytest.approx(iv.lo) and q[1] == pytest.approx(iv.hi)
