"""Social-welfare electricity pricing by dual decomposition.

    max  sum_i U_i(x_i) - C(s)
    s.t. sum_i x_i <= s,   0 <= s <= L,   0 <= x_i <= cap_i

Introducing the supply ``s`` separates the problem: at a price ``lam`` on the
balance row ``sum_i x_i <= s`` every user maximises ``U_i(x) - lam x`` and the
provider maximises ``lam s - C(s)``. The price is updated by projected
subgradient steps ``lam <- max(0, lam + a_k (sum x - s))`` with
``a_k = alpha0 / sqrt(k + 1)``; allocations are reported as running averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, UnsupportedCost, UnsupportedScenario
from .kkt import LinearConstraint
from .nsfunc import PwUni, Quadratic, Sum, poly_der, poly_val
from .shadow import DEFAULT_DELTAS, PerturbationReport, PerturbationRow, perturb_and_resolve, verify_upper_bound
from .solver import Problem

TIE_TOL = 1e-12


def _pick(cands: list[float], objective) -> float:
    """Maximiser among candidates; ties go to the smallest one."""
    vals = [(float(objective(t)), t) for t in sorted(set(cands))]
    best = max(v for v, _ in vals)
    return min(t for v, t in vals if v >= best - TIE_TOL * (1.0 + abs(best)))


@dataclass(frozen=True, eq=False)
class UserSpec:
    """A load user with a concave piecewise-polynomial utility on [0, cap]."""

    id: str
    utility: PwUni
    cap: float

    def __post_init__(self):
        u = self.utility
        if not self.cap > 0:
            raise ValueError(f"user {self.id}: cap must be positive")
        if u.var != 0:
            raise ValueError("a user utility is univariate in coordinate 0")
        if abs(u.value_at(0.0)) > 1e-12:
            raise ValueError(f"user {self.id}: utility must vanish at 0")
        for i in range(len(u.breaks)):
            left, right = u.slopes_at_break(i)
            if right > left + 1e-12 * max(1.0, abs(left)):
                raise ValueError(f"user {self.id}: marginal utility increases at breakpoint {u.breaks[i]}")
        for k, (lo, hi) in enumerate(self.segments()):
            p = u.pieces[k]
            d2 = poly_der(poly_der(p))
            if max(poly_val(d2, lo), poly_val(d2, hi)) > 1e-12:
                raise ValueError(f"user {self.id}: piece {k} is not concave on [{lo}, {hi}]")

    @classmethod
    def from_slopes(cls, id: str, breaks: Sequence[float], slopes: Sequence[float], cap: float) -> "UserSpec":
        """Piecewise-linear utility through the origin with the given slopes."""
        breaks = [float(a) for a in breaks]
        if len(slopes) != len(breaks) + 1:
            raise ValueError("need one more slope than breakpoints")
        pieces, level, start = [], 0.0, 0.0
        for k, m in enumerate(slopes):
            pieces.append((level - m * start, float(m)))
            if k < len(breaks):
                level += m * (breaks[k] - start)
                start = breaks[k]
        return cls(str(id), PwUni(0, breaks, pieces), float(cap))

    def segments(self) -> list[tuple[float, float]]:
        """[lo, hi] of each piece intersected with [0, cap] (empty pieces included as points)."""
        ends = [-math.inf] + list(self.utility.breaks) + [math.inf]
        return [(min(max(ends[k], 0.0), self.cap), min(max(ends[k + 1], 0.0), self.cap)) for k in range(len(ends) - 1)]

    def U(self, x: float) -> float:
        return self.utility.value_at(x)

    def marginal_interval(self, x: float, eps: float = 1e-8) -> tuple[float, float]:
        """Superdifferential of U on [0, cap] at x (inf/-inf at the domain ends)."""
        u = self.utility
        k = u.piece_index(x)
        lo = hi = u.derivative_at(x, k)
        if k > 0 and abs(x - u.breaks[k - 1]) <= eps:
            hi = u.derivative_at(x, k - 1)
        if k < len(u.breaks) and abs(x - u.breaks[k]) <= eps:
            lo = u.derivative_at(x, k + 1)
        if x <= eps:
            hi = math.inf
        if x >= self.cap - eps:
            lo = -math.inf
        return lo, hi


@dataclass(frozen=True)
class QuadraticCost:
    c2: float = 0.0
    c1: float = 0.0

    def __post_init__(self):
        if self.c2 < 0 or self.c1 < 0:
            raise ValueError("quadratic cost coefficients must be nonnegative")

    def __call__(self, s):
        return self.c2 * s * s + self.c1 * s

    @property
    def is_zero(self) -> bool:
        return self.c2 == 0 and self.c1 == 0


@dataclass(frozen=True)
class PLCost:
    """Convex increasing piecewise-linear cost with C(0) = 0."""

    breaks: tuple[float, ...]
    slopes: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(a) for a in self.breaks))
        object.__setattr__(self, "slopes", tuple(float(m) for m in self.slopes))
        if len(self.slopes) != len(self.breaks) + 1:
            raise ValueError("need one more slope than breakpoints")
        if any(a <= 0 for a in self.breaks) or any(b <= a for a, b in zip(self.breaks, self.breaks[1:])):
            raise ValueError("cost breakpoints must be positive and increasing")
        if self.slopes[0] < 0 or any(b < a for a, b in zip(self.slopes, self.slopes[1:])):
            raise ValueError("cost slopes must be nonnegative and nondecreasing")

    def as_pwuni(self, var: int = 0) -> PwUni:
        pieces, level, start = [], 0.0, 0.0
        for k, m in enumerate(self.slopes):
            pieces.append((level - m * start, m))
            if k < len(self.breaks):
                level += m * (self.breaks[k] - start)
                start = self.breaks[k]
        return PwUni(var, self.breaks, pieces)

    def __call__(self, s):
        return self.as_pwuni().value_at(float(s))

    @property
    def is_zero(self) -> bool:
        return all(m == 0 for m in self.slopes)


@dataclass(frozen=True)
class ProviderSpec:
    cost: QuadraticCost | PLCost
    capacity: float

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError("capacity must be positive")


@dataclass(frozen=True)
class Scenario:
    users: tuple[UserSpec, ...]
    provider: ProviderSpec

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not self.users:
            raise ValueError("a scenario needs at least one user")

    @property
    def k(self) -> int:
        return len(self.users)

    def with_capacity(self, L: float) -> "Scenario":
        return replace(self, provider=replace(self.provider, capacity=L))


@dataclass
class PricingResult:
    price: float
    allocations: np.ndarray
    supply: float
    welfare: float
    iterations: int
    residual: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "price": float(self.price),
            "allocations": [float(v) for v in self.allocations],
            "supply": float(self.supply),
            "welfare": float(self.welfare),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "converged": bool(self.converged),
        }


def user_best_response(u: UserSpec, price: float) -> float:
    """argmax_{0 <= x <= cap} U(x) - price * x, smallest maximiser on ties."""
    if price < 0:
        raise ValueError("price must be nonnegative")
    cands = [0.0, u.cap]
    for k, (lo, hi) in enumerate(u.segments()):
        if hi <= lo:
            continue
        cands += [lo, hi]
        dp = list(poly_der(u.utility.pieces[k]))
        dp[0] -= price
        while len(dp) > 1 and dp[-1] == 0:
            dp.pop()
        if len(dp) > 1:
            for r in np.roots(dp[::-1]):
                if abs(r.imag) < 1e-12 and lo < r.real < hi:
                    cands.append(float(r.real))
    return _pick(cands, lambda t: u.U(t) - price * t)


def provider_best_response(pv: ProviderSpec, price: float) -> float:
    """argmax_{0 <= s <= L} price * s - C(s), smallest maximiser on ties."""
    if price < 0:
        raise ValueError("price must be nonnegative")
    C, L = pv.cost, pv.capacity
    if isinstance(C, QuadraticCost):
        if C.c2 > 0:
            return float(min(max((price - C.c1) / (2 * C.c2), 0.0), L))
        return L if price > C.c1 else 0.0
    cands = [0.0, L] + [a for a in C.breaks if a < L]
    return _pick(cands, lambda s: price * s - C(s))


def welfare(sc: Scenario, x: Sequence[float], s: float | None = None) -> float:
    """sum_i U_i(x_i) - C(s); with ``s`` omitted the coupled form s = sum x is used."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sc.k,):
        raise DomainError(f"expected {sc.k} allocations")
    for u, xi in zip(sc.users, x):
        if not -1e-12 <= xi <= u.cap + 1e-12:
            raise DomainError(f"allocation {xi} of user {u.id} outside [0, {u.cap}]")
    s = float(np.sum(x)) if s is None else float(s)
    if not -1e-12 <= s <= sc.provider.capacity + 1e-12:
        raise DomainError(f"supply {s} outside [0, {sc.provider.capacity}]")
    return float(sum(u.U(xi) for u, xi in zip(sc.users, x)) - sc.provider.cost(s))


def dual_value(sc: Scenario, price: float) -> float:
    """Lagrangian dual function at ``price`` (an upper bound on the welfare)."""
    x = [user_best_response(u, price) for u in sc.users]
    s = provider_best_response(sc.provider, price)
    return float(sum(u.U(xi) - price * xi for u, xi in zip(sc.users, x)) + price * s - sc.provider.cost(s))


def dual_ascent(
    sc: Scenario,
    alpha0: float = 1.0,
    max_iter: int = 20_000,
    tol_primal: float = 1e-4,
    tol_dual: float = 1e-6,
) -> PricingResult:
    lam = 0.0
    sum_x = np.zeros(sc.k)
    sum_s = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x = np.array([user_best_response(u, lam) for u in sc.users])
        s = provider_best_response(sc.provider, lam)
        sum_x += x
        sum_s += s
        new = max(0.0, lam + alpha0 / math.sqrt(it) * (float(x.sum()) - s))
        residual = abs(float(sum_x.sum()) - sum_s) / it
        step = abs(new - lam)
        lam = new
        if residual <= tol_primal and step <= tol_dual:
            converged = True
            break
    xbar, sbar = sum_x / it, sum_s / it
    return PricingResult(lam, xbar, sbar, welfare(sc, xbar, sbar), it, abs(float(xbar.sum()) - sbar), converged)


# ---------------------------------------------------------------------------
# the scenario as a linearly constrained minimisation problem

BALANCE, CAPACITY = 0, 1


def _cost_expr(pv: ProviderSpec, k: int):
    C = pv.cost
    if C.is_zero:
        return None
    if isinstance(C, QuadraticCost):
        Q = np.zeros((k + 1, k + 1))
        Q[k, k] = 2.0 * C.c2
        c = np.zeros(k + 1)
        c[k] = C.c1
        return Quadratic(Q, c)
    if isinstance(C, PLCost):
        return C.as_pwuni(var=k)
    raise UnsupportedCost(f"unsupported cost type {type(C).__name__}")


def scenario_to_problem(sc: Scenario) -> Problem:
    """Minimise -welfare over (x_1..x_k, s).

    Constraint 0 is the balance row ``sum x - s <= 0`` (its multiplier is the
    price); constraint 1 is the capacity row ``s <= L``.
    """
    k = sc.k
    terms = []
    for i, u in enumerate(sc.users):
        neg = [tuple(-c for c in p) for p in u.utility.pieces]
        terms.append((1.0, PwUni(i, u.utility.breaks, neg)))
    cost = _cost_expr(sc.provider, k)
    if cost is not None:
        terms.append((1.0, cost))
    a = np.ones(k + 1)
    a[k] = -1.0
    e = np.zeros(k + 1)
    e[k] = 1.0
    cs = [LinearConstraint(a, 0.0), LinearConstraint(e, sc.provider.capacity)]
    lower = np.zeros(k + 1)
    upper = np.array([u.cap for u in sc.users] + [np.inf])
    return Problem(Sum(terms), cs, k + 1, "min", lower, upper)


def _linear_segments(sc: Scenario):
    segs = []
    for i, u in enumerate(sc.users):
        for k, (lo, hi) in enumerate(u.segments()):
            p = u.utility.pieces[k]
            if any(c != 0 for c in p[2:]):
                raise UnsupportedScenario("the exact welfare solver needs piecewise-linear utilities")
            if hi > lo:
                segs.append((p[1] if len(p) > 1 else 0.0, hi - lo, i))
    segs.sort(key=lambda t: -t[0])  # stable: per-user order survives
    return segs


def welfare_max(sc: Scenario, capacity: float | None = None) -> tuple[float, np.ndarray, float]:
    """Exact welfare maximum for piecewise-linear utilities.

    Units are handed out in decreasing order of marginal utility, which reduces
    the problem to a concave one-dimensional maximisation over total supply.
    Returns ``(welfare, allocations, supply)``.
    """
    L = sc.provider.capacity if capacity is None else capacity
    segs = _linear_segments(sc)
    C = sc.provider.cost
    smax = min(L, sum(u.cap for u in sc.users))
    starts = np.concatenate([[0.0], np.cumsum([w for _, w, _ in segs])])
    cands = [0.0, smax] + [t for t in starts if t <= smax]
    for (m, _, _), a, b in zip(segs, starts[:-1], starts[1:]):
        b = min(b, smax)
        if a >= b:
            continue
        if isinstance(C, QuadraticCost) and C.c2 > 0:
            t = (m - C.c1) / (2 * C.c2)
            if a < t < b:
                cands.append(float(t))
        elif isinstance(C, PLCost):
            cands += [t for t in C.breaks if a < t < b]

    def fill(S):
        x = np.zeros(sc.k)
        util, left = 0.0, S
        for m, w, i in segs:
            take = min(w, left)
            if take <= 0:
                break
            x[i] += take
            util += m * take
            left -= take
        return x, util

    S = _pick(cands, lambda S: fill(S)[1] - C(S))
    x, util = fill(S)
    return float(util - C(S)), x, float(S)


def verify_capacity_shadow(
    sc: Scenario,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    price: float | None = None,
    tail: int = 3,
    tol: float = 1e-3,
) -> PerturbationReport:
    """Check that the welfare gain per unit of extra capacity stays below the price.

    Capacity is the constraint ``s <= L`` of :func:`scenario_to_problem`; values
    in the report are for the minimisation form (negated welfare).
    """
    if price is None:
        price = dual_ascent(sc).price
    if isinstance(sc.provider.cost, PLCost):
        report = perturb_and_resolve(scenario_to_problem(sc), CAPACITY, deltas, "lp")
    else:
        w0 = welfare_max(sc)[0]
        rows = []
        for dL in sorted(deltas, key=lambda d: -abs(d)):
            if dL == 0:
                raise ValueError("perturbations must be nonzero")
            if sc.provider.capacity + dL <= 0:
                rows.append(PerturbationRow(dL, None, None, None, status="infeasible"))
                continue
            w = welfare_max(sc, sc.provider.capacity + dL)[0]
            rows.append(PerturbationRow(dL, -w, -(w - w0), (w - w0) / dL))
        report = PerturbationReport(CAPACITY, -w0, rows, "welfare")
    verify_upper_bound(report, price, tail, tol)
    return report
