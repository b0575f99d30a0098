import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from shadowprice.errors import DimensionTooLarge, NonConvexObjective, NotPiecewiseLinear, ProjectionFailure
from shadowprice.instances import SuiteConfig, pl_suite, random_convex_pl
from shadowprice.kkt import LinearConstraint
from shadowprice.lp import INFEASIBLE, OPTIMAL, UNBOUNDED
from shadowprice.nsfunc import Affine, Max, PwUni, Quadratic, Sum, evaluate
from shadowprice.schema import expr_to_json
from shadowprice.solver import Problem, project, solve, solve_oracle_grid, solve_pl_exact, solve_subgradient

ex1 = Problem(Max([Affine([1.0]), Affine([2.0])]), [LinearConstraint([-1.0], 0.0)], 1)


def test_example_exact():
    s = solve_pl_exact(ex1)
    assert s.status == OPTIMAL
    assert s.x[0] == 0.0 and s.value == 0.0
    assert s.active == (0,)


def test_example_grid():
    s = solve_oracle_grid(ex1, ranges=[(-2.0, 2.0)])
    assert s.x[0] == 0.0 and s.value == 0.0


def test_example_subgradient():
    s = solve_subgradient(ex1, seed=1)
    assert abs(s.value) <= 1e-4


def test_two_constraint_corner():
    p = Problem(
        Max([Affine([1.0, 0.0]), Affine([0.0, 1.0])]),
        [LinearConstraint([-1.0, 0.0], -1.0), LinearConstraint([0.0, -1.0], -1.0)],
        2,
    )
    s = solve_pl_exact(p)
    np.testing.assert_allclose(s.x, [1.0, 1.0], atol=1e-12)
    assert s.value == pytest.approx(1.0, abs=1e-12)


def test_abs_unconstrained_subgradient():
    p = Problem(Max([Affine([1.0]), Affine([-1.0])]), [], 1)
    assert solve_subgradient(p, seed=3).value <= 1e-4


def test_quadratic_max_vs_grid():
    obj = Max([Quadratic(np.diag([2.0, 1.0]), [1.0, -1.0]), Affine([1.0, 1.0], -0.5)])
    p = Problem(obj, [LinearConstraint([1.0, 1.0], -0.5)], 2, lower=[-3, -3], upper=[3, 3])
    g = solve_oracle_grid(p, refine=4)
    s = solve_subgradient(p, seed=0)
    assert s.value == pytest.approx(g.value, abs=1e-3)


def test_infeasible():
    p = Problem(Affine([1.0]), [LinearConstraint([1.0], -1.0)], 1, lower=[0.0], upper=[1.0])
    assert solve_pl_exact(p).status == INFEASIBLE
    assert solve_oracle_grid(p).status == INFEASIBLE


def test_unbounded_lp_path():
    p = Problem(Affine([1.0]), [LinearConstraint([1.0], 0.0)], 1)
    assert solve_pl_exact(p).status == UNBOUNDED


def test_path_preconditions():
    quad = Problem(Quadratic(np.eye(1), [0.0]), [], 1)
    with pytest.raises(NotPiecewiseLinear):
        solve_pl_exact(quad)
    with pytest.raises(NonConvexObjective):
        solve_subgradient(Problem(Quadratic(-np.eye(1), [0.0]), [], 1))
    with pytest.raises(DimensionTooLarge):
        solve_oracle_grid(Problem(Affine(np.ones(4)), [], 4, lower=-np.ones(4), upper=np.ones(4)))
    with pytest.raises(ValueError):
        solve(ex1, "newton")


def test_maximisation_of_concave_utility():
    u = PwUni(0, [1.0], [(0.0, 4.0), (2.0, 2.0)])
    p = Problem(Sum([(1.0, u), (1.0, Affine([-3.0]))]), [], 1, "max", [0.0], [2.0])
    s = solve_pl_exact(p)
    assert s.x[0] == pytest.approx(1.0) and s.value == pytest.approx(1.0)


def test_suite_exact_vs_grid():
    for p in pl_suite(SuiteConfig(count=10, seed=7)):
        assert solve_pl_exact(p).value == pytest.approx(solve_oracle_grid(p).value, abs=1e-6)


def test_suite_subgradient_sandwich():
    for p in pl_suite(SuiteConfig(count=4, seed=11, n_max=2)):
        ex = solve_pl_exact(p).value
        sg = solve_subgradient(p, seed=0).value
        assert ex - 1e-9 <= sg <= ex + 1e-3


def test_subgradient_deterministic():
    p = pl_suite(SuiteConfig(count=1, seed=3, n_max=2))[0]
    a, b = solve_subgradient(p, seed=5, max_iter=2000), solve_subgradient(p, seed=5, max_iter=2000)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


@given(st.integers(0, 2**32 - 1))
def test_solution_invariants(seed):
    rng = np.random.default_rng(seed)
    p = random_convex_pl(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    s = solve_pl_exact(p)
    if not s.ok:
        return
    assert p.max_violation(s.x) <= 1e-8
    assert s.value == pytest.approx(evaluate(p.objective, s.x), abs=1e-10)
    assert s.extra["lp_value"] == pytest.approx(s.value, abs=1e-9)
    # reference evaluator agrees with the library at the optimum
    assert oracles.eval_doc(expr_to_json(p.objective), list(s.x)) == pytest.approx(s.value, abs=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_projection_feasible_or_reported(seed):
    # the sweep cap can be hit on badly conditioned corners; that must be loud
    rng = np.random.default_rng(seed)
    n = 3
    cs = [LinearConstraint(rng.normal(size=n), rng.uniform(0.1, 1.0)) for _ in range(3)]
    y = rng.normal(size=n) * 3
    try:
        x = project(y, cs, -np.full(n, 2.0), np.full(n, 2.0))
    except ProjectionFailure:
        return
    assert all(c.slack(x) <= 1e-8 for c in cs)
    assert np.all(np.abs(x) <= 2.0 + 1e-8)


def test_projection_is_nearest_point(rng):
    minimize = pytest.importorskip("scipy.optimize").minimize
    for _ in range(10):
        cs = [LinearConstraint(rng.normal(size=2), rng.uniform(0.1, 1.0)) for _ in range(2)]
        y = rng.normal(size=2) * 3
        x = project(y, cs, -np.full(2, 2.0), np.full(2, 2.0))
        ref = minimize(
            lambda z: 0.5 * np.sum((z - y) ** 2),
            np.zeros(2),
            jac=lambda z: z - y,
            bounds=[(-2, 2)] * 2,
            constraints=[{"type": "ineq", "fun": lambda z, c=c: c.b - c.a @ z} for c in cs],
            method="SLSQP",
            options={"ftol": 1e-14},
        )
        np.testing.assert_allclose(x, ref.x, atol=1e-6)
