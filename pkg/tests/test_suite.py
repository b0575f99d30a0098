import numpy as np
import pytest

from shadowprice.suite import RunConfig, planted_run, run_suite


def test_planted_quotient_formula():
    # quotient = lam - q db / (2 alpha^2) exactly, for either sign of q
    for q in (0.4, -0.4):
        rng = np.random.default_rng(21)
        out = planted_run(rng, deltas=(1e-2, 1e-3, 1e-4), q=q)
        assert out.regular
        np.testing.assert_allclose(out.x_found, out.x_star, atol=1e-9)
        assert out.lam_min == pytest.approx(out.lam_planted, abs=1e-9)
        excess = np.array([r["quotient"] - out.lam_min for r in out.report["rows"]])
        dbs = np.array([r["delta_b"] for r in out.report["rows"]])
        slope = excess / dbs
        assert np.all(np.sign(excess) == -np.sign(q))
        np.testing.assert_allclose(slope, slope[0], rtol=1e-3)


def test_negative_curvature_fails_bound_only_at_first_order():
    rng = np.random.default_rng(5)
    out = planted_run(rng, deltas=(1e-2, 1e-3, 1e-4), q=-0.5)
    # the bound is violated, but by a margin shrinking linearly with db
    assert out.report["verdict"] == "FAIL"
    ex = [r["quotient"] - out.lam_min for r in out.report["rows"]]
    assert ex[0] > ex[1] > ex[2] > 0
    assert ex[1] / ex[0] == pytest.approx(0.1, rel=1e-2)


def test_small_run_shape():
    d = run_suite(RunConfig(seed=1, pl_count=3, planted_count=1))
    assert set(d) == {"config", "example", "pl_suite", "planted", "pricing"}
    assert d["example"]["shadow"]["verdict"] == "PASS"
    assert {r["instance"] for r in d["pl_suite"]} == {0, 1, 2}
    assert d["pricing"]["dual_ascent"]["converged"]
