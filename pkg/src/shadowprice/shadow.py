"""Empirical shadow prices from constraint perturbations.

Relaxing ``a_i^T x <= b_i`` to ``b_i + db`` and re-solving gives the
difference quotient ``-df/db``. Any multiplier lam_i bounds this quotient from
above for small ``db > 0``; for ``db < 0`` the largest multiplier bounds it from
below. Limits are checked on the tail of a decreasing ``db`` sequence.

All values here are for the minimisation form of the problem.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BaseUnsolved, InsufficientRows
from .kkt import (
    active_flags,
    kkt_residual,
    multiplier_ranges,
    multiplier_vector,
)
from .nsfunc import subdifferential
from .solver import Problem, Solution, solve

DEFAULT_DELTAS = (1e-1, 1e-2, 1e-3, 1e-4)
CSV_COLUMNS = ("delta_b", "value", "delta_f", "quotient", "lambda_ref", "verdict")


@dataclass
class PerturbationRow:
    delta_b: float
    value: float | None
    delta_f: float | None
    quotient: float | None
    status: str = "optimal"
    verdict: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal" and self.quotient is not None and math.isfinite(self.quotient)


@dataclass
class Verdict:
    passed: bool
    kind: str
    lam: float
    tol: float
    checked: list[float]
    worst: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "kind": self.kind,
            "lambda": self.lam,
            "tol": self.tol,
            "checked_deltas": self.checked,
            "worst_margin": self.worst,
        }


@dataclass
class PerturbationReport:
    constraint: int
    base_value: float
    rows: list[PerturbationRow]
    method: str
    lambda_ref: float | None = None
    lambda_max: float | None = None
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def passed(self) -> bool | None:
        if not self.verdicts:
            return None
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "constraint": self.constraint,
            "method": self.method,
            "base_value": self.base_value,
            "lambda_ref": self.lambda_ref,
            "lambda_max": self.lambda_max,
            "verdict": None if self.passed is None else ("PASS" if self.passed else "FAIL"),
            "checks": [v.to_dict() for v in self.verdicts],
            "rows": [
                {
                    "delta_b": r.delta_b,
                    "value": r.value,
                    "delta_f": r.delta_f,
                    "quotient": r.quotient,
                    "status": r.status,
                    "verdict": r.verdict,
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            ref = self.lambda_ref if r.delta_b > 0 else self.lambda_max
            w.writerow([_fmt(r.delta_b), _fmt(r.value), _fmt(r.delta_f), _fmt(r.quotient), _fmt(ref), r.verdict])
        return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def min_value(p: Problem, sol: Solution) -> float:
    return sol.value if p.sense == "min" else -sol.value


def perturb_and_resolve(
    p: Problem, i: int, deltas: Sequence[float], method: str = "lp", **solver_kw
) -> PerturbationReport:
    """Re-solve with b_i replaced by b_i + db for each db; rows by decreasing |db|."""
    if not 0 <= i < len(p.constraints):
        raise IndexError(f"constraint index {i} out of range")
    if any(d == 0 for d in deltas):
        raise ValueError("perturbations must be nonzero")
    base = solve(p, method, **solver_kw)
    if not base.ok:
        raise BaseUnsolved(f"base problem status: {base.status}")
    f0 = min_value(p, base)
    b0 = p.constraints[i].b
    rows = []
    for db in sorted(deltas, key=lambda d: -abs(d)):
        sol = solve(p.with_rhs(i, b0 + db), method, **solver_kw)
        if not sol.ok:
            rows.append(PerturbationRow(db, None, None, None, status=sol.status))
            continue
        f = min_value(p, sol)
        df = f - f0
        rows.append(PerturbationRow(db, f, df, -df / db))
    return PerturbationReport(i, f0, rows, method)


def _rows(report_or_rows) -> list[PerturbationRow]:
    return report_or_rows.rows if isinstance(report_or_rows, PerturbationReport) else list(report_or_rows)


def _tail(rows: list[PerturbationRow], positive: bool, tail: int) -> list[PerturbationRow]:
    side = [r for r in rows if (r.delta_b > 0) == positive]
    side.sort(key=lambda r: abs(r.delta_b))
    chosen = side[:tail]
    if len(chosen) < tail or not all(r.ok for r in chosen):
        kind = "relaxation" if positive else "tightening"
        raise InsufficientRows(f"need {tail} solved {kind} rows, have {sum(r.ok for r in chosen)}")
    return chosen


def verify_upper_bound(report_or_rows, lam: float, tail: int = 3, tol: float = 1e-6) -> Verdict:
    """PASS iff -df/db <= lam + tol on the ``tail`` smallest positive db."""
    chosen = _tail(_rows(report_or_rows), True, tail)
    margins = [r.quotient - lam for r in chosen]
    for r, m in zip(chosen, margins):
        r.verdict = "pass" if m <= tol else "fail"
    v = Verdict(all(m <= tol for m in margins), "upper", lam, tol, [r.delta_b for r in chosen], max(margins))
    if isinstance(report_or_rows, PerturbationReport):
        report_or_rows.lambda_ref = lam
        report_or_rows.verdicts.append(v)
    return v


def verify_lower_bound_tightening(report_or_rows, lam_max: float, tail: int = 3, tol: float = 1e-6) -> Verdict:
    """PASS iff -df/db >= lam_max - tol on the ``tail`` smallest |db| with db < 0."""
    chosen = _tail(_rows(report_or_rows), False, tail)
    margins = [lam_max - r.quotient for r in chosen]
    for r, m in zip(chosen, margins):
        r.verdict = "pass" if m <= tol else "fail"
    v = Verdict(all(m <= tol for m in margins), "lower", lam_max, tol, [r.delta_b for r in chosen], max(margins))
    if isinstance(report_or_rows, PerturbationReport):
        report_or_rows.lambda_max = lam_max
        report_or_rows.verdicts.append(v)
    return v


@dataclass
class ValueProbe:
    base_level: float
    h: float
    right: float | None
    left: float | None


def value_probe(p: Problem, i: int, hs: Sequence[float], method: str = "lp", **solver_kw) -> list[ValueProbe]:
    """One-sided quotients of the optimal value as a function of b_i."""
    if any(h <= 0 for h in hs):
        raise ValueError("probe steps must be positive")
    base = solve(p, method, **solver_kw)
    if not base.ok:
        raise BaseUnsolved(f"base problem status: {base.status}")
    f0 = min_value(p, base)
    b0 = p.constraints[i].b
    out = []
    for h in hs:
        up = solve(p.with_rhs(i, b0 + h), method, **solver_kw)
        down = solve(p.with_rhs(i, b0 - h), method, **solver_kw)
        right = (min_value(p, up) - f0) / h if up.ok else None
        left = (f0 - min_value(p, down)) / h if down.ok else None
        out.append(ValueProbe(b0, h, right, left))
    return out


@dataclass
class MultiplierSummary:
    """Multipliers at a point, over main constraints followed by bound rows."""

    active: list[bool]
    min_sum: np.ndarray
    ranges: list
    residual: float
    n_main: int

    def to_dict(self) -> dict:
        m = self.n_main
        out = {
            "active": self.active[:m],
            "min_sum": [float(v) for v in self.min_sum[:m]],
            "intervals": [r.to_dict() for r in self.ranges[:m]],
            "min_multipliers": [r.lo for r in self.ranges[:m]],
            "kkt_residual": self.residual,
        }
        if len(self.active) > m:
            out["bounds"] = {
                "active": self.active[m:],
                "min_sum": [float(v) for v in self.min_sum[m:]],
                "intervals": [r.to_dict() for r in self.ranges[m:]],
            }
        return out


def multipliers_at(p: Problem, x) -> MultiplierSummary:
    """Multiplier set of the minimisation form at ``x``; bound rows are included."""
    q = p.as_min()
    cs = q.all_constraints()
    flags = active_flags(cs, x)
    sd = subdifferential(q.objective, x)
    vec = multiplier_vector(sd, cs, flags, "min-sum")
    ranges = multiplier_ranges(sd, cs, flags)
    return MultiplierSummary(flags, vec.values.copy(), ranges, kkt_residual(sd, cs, vec), len(p.constraints))


def verify_constraint(
    p: Problem,
    i: int,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    method: str = "lp",
    lam: float | None = None,
    lam_max: float | None = None,
    tail: int = 3,
    tol: float = 1e-6,
    **solver_kw,
) -> PerturbationReport:
    """Perturb constraint ``i`` and check both bounds against its multiplier range.

    Missing ``lam``/``lam_max`` default to the smallest/largest admissible lam_i
    at the base optimum. Each sign of ``db`` present in ``deltas`` is checked and
    needs at least ``tail`` rows.
    """
    report = perturb_and_resolve(p, i, deltas, method, **solver_kw)
    if lam is None or lam_max is None:
        base = solve(p, method, **solver_kw)
        rng = multipliers_at(p, base.x).ranges[i]
        lam = rng.lo if lam is None else lam
        lam_max = rng.hi if lam_max is None else lam_max
    report.lambda_ref, report.lambda_max = lam, lam_max
    if not report.rows:
        raise InsufficientRows("no perturbations given")
    if any(r.delta_b > 0 for r in report.rows):
        verify_upper_bound(report, lam, tail, tol)
    if any(r.delta_b < 0 for r in report.rows):
        verify_lower_bound_tightening(report, lam_max, tail, tol)
    return report
