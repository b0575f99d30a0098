"""Lagrangian multiplier sets for linearly constrained nonsmooth problems.

At a point x* with subdifferential co{v_1..v_K} and constraints a_i^T x <= b_i,
a multiplier vector lam >= 0 is admissible when

    0 in co{v_k} + sum_i lam_i a_i,    lam_i = 0 for inactive i.

All multiplier questions below are small LPs over (theta in simplex, lam >= 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NoKktPoint, UnboundedMultipliers
from .lp import LpInstance, solve_lp
from .nsfunc import DEFAULT_TOL, Expr, GeneratorPolytope, Tolerances, as_point, dir_deriv

ACTIVE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """a^T x <= b."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.array(np.ravel(self.a), dtype=float)
        if not np.all(np.isfinite(a)) or not np.isfinite(self.b):
            raise ValueError("constraint coefficients must be finite")
        if not np.any(a != 0):
            raise ValueError("constraint normal must be nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def has_negative_components(self) -> bool:
        return bool(np.any(self.a < 0))

    def slack(self, x) -> float:
        """a^T x - b (nonpositive when satisfied)."""
        return float(self.a @ np.asarray(x, dtype=float) - self.b)

    def is_active(self, x, tol: float = ACTIVE_TOL) -> bool:
        return abs(self.slack(x)) <= tol * (1.0 + abs(self.b))

    def shifted(self, delta: float) -> "LinearConstraint":
        return LinearConstraint(self.a, self.b + delta)


def active_flags(cs: Sequence[LinearConstraint], x, tol: float = ACTIVE_TOL) -> list[bool]:
    return [c.is_active(x, tol) for c in cs]


@dataclass(frozen=True)
class MultiplierInterval:
    lo: float
    hi: float
    empty: bool = False

    def __post_init__(self):
        if not self.empty and not (0 <= self.lo <= self.hi < np.inf):
            raise ValueError(f"invalid multiplier interval [{self.lo}, {self.hi}]")

    def __contains__(self, lam) -> bool:
        return not self.empty and self.lo <= lam <= self.hi

    def to_dict(self) -> dict:
        if self.empty:
            return {"empty": True}
        return {"lo": self.lo, "hi": self.hi}


EMPTY_INTERVAL = MultiplierInterval(float("nan"), float("nan"), empty=True)


@dataclass(frozen=True, eq=False)
class MultiplierVector:
    values: np.ndarray
    active: tuple[bool, ...]

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "active", tuple(bool(f) for f in self.active))

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i):
        return float(self.values[i])


def _kkt_lp(V: np.ndarray, normals: np.ndarray, cost_lam: np.ndarray):
    """min cost_lam^T lam  s.t.  V^T theta + normals^T lam = 0, sum(theta) = 1."""
    K, n = V.shape
    r = normals.shape[0]
    A = np.zeros((n + 1, K + r))
    A[:n, :K] = V.T
    A[:n, K:] = normals.T
    A[n, :K] = 1.0
    b = np.zeros(n + 1)
    b[n] = 1.0
    c = np.concatenate([np.zeros(K), cost_lam])
    return solve_lp(LpInstance(c, A_eq=A, b_eq=b))


def _check_dims(subdiff: GeneratorPolytope, cs: Sequence[LinearConstraint]):
    for c in cs:
        if c.dim != subdiff.dim:
            raise DimensionMismatch(f"constraint has dimension {c.dim}, generators have {subdiff.dim}")


def multiplier_interval(subdiff: GeneratorPolytope, c: LinearConstraint, active: bool) -> MultiplierInterval:
    """Set of lam >= 0 with 0 in subdiff + lam * a, for a single constraint."""
    _check_dims(subdiff, [c])
    if not active:
        return MultiplierInterval(0.0, 0.0)
    V, normals = subdiff.generators, c.a[None, :]
    lo = _kkt_lp(V, normals, np.array([1.0]))
    if not lo.ok:
        return EMPTY_INTERVAL
    hi = _kkt_lp(V, normals, np.array([-1.0]))
    K = V.shape[0]
    return MultiplierInterval(float(lo.x[K]), float(hi.x[K]))


def _active_normals(cs, active) -> tuple[list[int], np.ndarray]:
    if len(active) != len(cs):
        raise DimensionMismatch("one activity flag per constraint is required")
    idx = [i for i, f in enumerate(active) if f]
    normals = np.array([cs[i].a for i in idx]).reshape(len(idx), -1)
    if idx and np.linalg.matrix_rank(normals) < len(idx):
        raise UnboundedMultipliers(
            f"active constraint normals {idx} are linearly dependent; multipliers are not determined"
        )
    return idx, normals


def multiplier_vector(
    subdiff: GeneratorPolytope,
    cs: Sequence[LinearConstraint],
    active: Sequence[bool],
    objective: str = "min-sum",
    component: int | None = None,
) -> MultiplierVector:
    """An admissible multiplier vector chosen by ``objective``.

    ``objective`` is ``"min-sum"`` (minimise sum lam_i), ``"min-component"`` or
    ``"max-component"`` (extremise lam_component). Inactive constraints get 0.
    """
    _check_dims(subdiff, cs)
    idx, normals = _active_normals(cs, active)
    normals = normals if idx else np.zeros((0, subdiff.dim))
    cost = np.zeros(len(idx))
    if objective == "min-sum":
        cost[:] = 1.0
    elif objective in ("min-component", "max-component"):
        if component is None or not 0 <= component < len(cs):
            raise ValueError("a valid constraint index is required for component objectives")
        if component in idx:
            cost[idx.index(component)] = 1.0 if objective == "min-component" else -1.0
    else:
        raise ValueError(f"unknown objective {objective!r}")
    res = _kkt_lp(subdiff.generators, normals, cost)
    if not res.ok:
        raise NoKktPoint(f"no admissible multipliers ({res.status})")
    lam = np.zeros(len(cs))
    K = subdiff.generators.shape[0]
    lam[idx] = np.maximum(res.x[K:], 0.0)
    return MultiplierVector(lam, tuple(active))


def multiplier_ranges(
    subdiff: GeneratorPolytope, cs: Sequence[LinearConstraint], active: Sequence[bool]
) -> list[MultiplierInterval]:
    """Per-constraint [min, max] of lam_i over the admissible multiplier set."""
    out = []
    for i in range(len(cs)):
        if not active[i]:
            out.append(MultiplierInterval(0.0, 0.0))
            continue
        lo = multiplier_vector(subdiff, cs, active, "min-component", i)[i]
        hi = multiplier_vector(subdiff, cs, active, "max-component", i)[i]
        out.append(MultiplierInterval(lo, max(lo, hi)))
    return out


def kkt_residual(subdiff: GeneratorPolytope, cs: Sequence[LinearConstraint], lam) -> float:
    """min over theta in the simplex of || V^T theta + sum_i lam_i a_i ||_inf."""
    _check_dims(subdiff, cs)
    lam = np.asarray(lam.values if isinstance(lam, MultiplierVector) else lam, dtype=float)
    if lam.shape[0] != len(cs):
        raise DimensionMismatch(f"{lam.shape[0]} multipliers for {len(cs)} constraints")
    V = subdiff.generators
    K, n = V.shape
    w = sum((l * c.a for l, c in zip(lam, cs)), np.zeros(n))
    # variables (theta, r): -r <= V^T theta + w <= r
    A_ub = np.zeros((2 * n, K + 1))
    A_ub[:n, :K] = V.T
    A_ub[n:, :K] = -V.T
    A_ub[:, K] = -1.0
    b_ub = np.concatenate([-w, w])
    A_eq = np.concatenate([np.ones(K), [0.0]])[None, :]
    c = np.zeros(K + 1)
    c[K] = 1.0
    res = solve_lp(LpInstance(c, A_eq=A_eq, b_eq=[1.0], A_ub=A_ub, b_ub=b_ub))
    return float(res.value)


def stationarity_inequality_check(
    expr: Expr,
    xstar,
    cs: Sequence[LinearConstraint],
    lam,
    dirs: Sequence,
    tol: Tolerances = DEFAULT_TOL,
) -> float:
    """min over d of f'(x*; d) + sum_i lam_i a_i^T d (nonnegative at a KKT point)."""
    if len(dirs) == 0:
        raise ValueError("need at least one direction")
    lam = np.asarray(lam.values if isinstance(lam, MultiplierVector) else lam, dtype=float)
    x = as_point(xstar)
    vals = []
    for d in dirs:
        d = as_point(d, x.shape[0])
        vals.append(dir_deriv(expr, x, d, tol) + sum(l * float(c.a @ d) for l, c in zip(lam, cs)))
    return float(min(vals))


def complementary_slackness_check(xstar, cs: Sequence[LinearConstraint], lam, tol: float = 1e-8) -> bool:
    lam = np.asarray(lam.values if isinstance(lam, MultiplierVector) else lam, dtype=float)
    return all(abs(l * c.slack(xstar)) <= tol * (1.0 + abs(c.b)) for l, c in zip(lam, cs))
