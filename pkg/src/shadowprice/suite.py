"""Seeded end-to-end runs that produce JSON reports.

Everything here is deterministic given the config: the same seeds give
byte-identical output from :func:`run_suite` after :func:`schema.canonical`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .instances import SuiteConfig, planted_nonconvex, pl_suite
from .kkt import LinearConstraint
from .nsfunc import Affine, Max, regularity_check
from .pricing import ProviderSpec, QuadraticCost, Scenario, UserSpec, dual_ascent, verify_capacity_shadow
from .shadow import multipliers_at, perturb_and_resolve, verify_constraint, verify_upper_bound
from .solver import Problem, solve

SIGNED_DELTAS = (1e-1, 1e-2, 1e-3, 1e-4, -1e-1, -1e-2, -1e-3, -1e-4)
PLANTED_DELTAS = (1e-2, 1e-3, 1e-4)


def example_problem() -> Problem:
    """min max(x, 2x) subject to -x <= 0."""
    return Problem(Max([Affine([1.0]), Affine([2.0])]), [LinearConstraint([-1.0], 0.0)], 1)


def desk_scenario() -> Scenario:
    u1 = UserSpec.from_slopes("u1", [1.0], [4.0, 2.0], 2.0)
    u2 = UserSpec.from_slopes("u2", [1.0], [3.0, 1.0], 3.0)
    return Scenario((u1, u2), ProviderSpec(QuadraticCost(0.5, 0.0), 2.0))


def unit_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    D = rng.normal(size=(count, n))
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def pl_shadow_reports(problems, deltas=SIGNED_DELTAS, tail: int = 3, tol: float = 1e-6) -> list[dict]:
    """Both bounds for every active main constraint at each exact optimum."""
    out = []
    for k, p in enumerate(problems):
        sol = solve(p, "lp")
        ms = multipliers_at(p, sol.x)
        for i in range(len(p.constraints)):
            if not ms.active[i]:
                continue
            iv = ms.ranges[i]
            rep = verify_constraint(p, i, deltas, "lp", lam=iv.lo, lam_max=iv.hi, tail=tail, tol=tol)
            out.append({"instance": k, **rep.to_dict()})
    return out


@dataclass
class PlantedOutcome:
    x_star: np.ndarray
    x_found: np.ndarray
    lam_planted: float
    lam_min: float
    regular: bool
    regularity_violation: float
    report: dict

    @property
    def passed(self) -> bool:
        return self.regular and self.report["verdict"] == "PASS"

    def to_dict(self) -> dict:
        return {
            "x_star": [float(v) for v in self.x_star],
            "x_found": [float(v) for v in self.x_found],
            "lambda_planted": self.lam_planted,
            "lambda_min": self.lam_min,
            "regular": self.regular,
            "regularity_violation": self.regularity_violation,
            "report": self.report,
        }


def planted_run(
    rng: np.random.Generator, deltas=PLANTED_DELTAS, refine: int = 10, n_dirs: int = 64, q: float | None = None
) -> PlantedOutcome:
    """Grid-solve a planted nonconvex case, check regularity there, then the relaxation bound."""
    case = planted_nonconvex(rng, q)
    p = case.problem
    sol = solve(p, "grid", refine=refine)
    reg = regularity_check(p.objective, sol.x, unit_directions(rng, p.n, n_dirs))
    lam = multipliers_at(p, sol.x).ranges[0].lo
    rep = perturb_and_resolve(p, 0, deltas, "grid", refine=refine)
    verify_upper_bound(rep, lam, tail=len(deltas), tol=1e-6)
    return PlantedOutcome(case.x_star, sol.x, case.lam, lam, reg.passed, reg.max_violation, rep.to_dict())


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    pl_count: int = 30
    planted_count: int = 5


def run_suite(cfg: RunConfig = RunConfig()) -> dict:
    ex = example_problem()
    ex_rep = verify_constraint(ex, 0, (1e-1, 1e-2, 1e-3, -1e-1, -1e-2, -1e-3), tol=1e-9)
    problems = pl_suite(SuiteConfig(count=cfg.pl_count, seed=cfg.seed))
    rng = np.random.default_rng(cfg.seed)
    planted = [planted_run(rng).to_dict() for _ in range(cfg.planted_count)]
    desk = desk_scenario()
    price = dual_ascent(desk)
    cap = verify_capacity_shadow(desk, price=price.price)
    return {
        "config": asdict(cfg),
        "example": {"solution": solve(ex).to_dict(), "multipliers": multipliers_at(ex, [0.0]).to_dict(), "shadow": ex_rep.to_dict()},
        "pl_suite": pl_shadow_reports(problems),
        "planted": planted,
        "pricing": {"dual_ascent": price.to_dict(), "capacity_shadow": cap.to_dict()},
    }
