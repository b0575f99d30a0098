"""Solvers for min f(x) s.t. a_i^T x <= b_i (plus optional box bounds).

Three routes:

* :func:`solve_pl_exact` - epigraph LP for convex piecewise-linear trees,
* :func:`solve_subgradient` - projected subgradient for general convex trees,
* :func:`solve_oracle_grid` - brute-force enumeration for n <= 3, used as
  ground truth in tests (exact on piecewise-linear objectives).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lp
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    NonConvexObjective,
    NotPiecewiseLinear,
    ProjectionFailure,
)
from .kkt import ACTIVE_TOL, LinearConstraint
from .nsfunc import (
    Affine,
    Comp,
    Expr,
    Max,
    PwUni,
    Quadratic,
    Sum,
    as_point,
    evaluate,
    evaluate_batch,
    is_convex,
    is_piecewise_linear,
    negate,
    subdifferential,
)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True, eq=False)
class Problem:
    objective: Expr
    constraints: tuple[LinearConstraint, ...]
    n: int
    sense: str = "min"
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if self.objective.dim is not None and self.objective.dim != n:
            raise DimensionMismatch(f"objective has dimension {self.objective.dim}, problem has {n}")
        if self.objective.min_dim > n:
            raise DimensionMismatch("objective indexes past the problem dimension")
        cs = tuple(self.constraints)
        for c in cs:
            if c.dim != n:
                raise DimensionMismatch(f"constraint has dimension {c.dim}, problem has {n}")
        lo = np.full(n, -np.inf) if self.lower is None else np.array(self.lower, dtype=float)
        hi = np.full(n, np.inf) if self.upper is None else np.array(self.upper, dtype=float)
        if lo.shape != (n,) or hi.shape != (n,) or np.any(lo > hi):
            raise ValueError("bounds must have length n with lower <= upper")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "constraints", cs)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def has_bounds(self) -> bool:
        return bool(np.any(np.isfinite(self.lower)) or np.any(np.isfinite(self.upper)))

    def as_min(self) -> "Problem":
        """The equivalent minimisation problem (objective negated for 'max')."""
        if self.sense == "min":
            return self
        return Problem(negate(self.objective), self.constraints, self.n, "min", self.lower, self.upper)

    def bound_constraints(self) -> list[LinearConstraint]:
        out = []
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = 1.0
            if np.isfinite(self.lower[j]):
                out.append(LinearConstraint(-e, -self.lower[j]))
            if np.isfinite(self.upper[j]):
                out.append(LinearConstraint(e, self.upper[j]))
        return out

    def all_constraints(self) -> list[LinearConstraint]:
        """Main constraints followed by the finite bounds written as rows."""
        return list(self.constraints) + self.bound_constraints()

    def with_rhs(self, i: int, b: float) -> "Problem":
        cs = list(self.constraints)
        cs[i] = LinearConstraint(cs[i].a, b)
        return Problem(self.objective, cs, self.n, self.sense, self.lower, self.upper)

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        v = [0.0] + [c.slack(x) for c in self.constraints]
        v += list(self.lower - x) + list(x - self.upper)
        return float(max(v))


@dataclass
class Solution:
    x: np.ndarray | None
    value: float | None
    status: str
    active: tuple[int, ...] = ()
    method: str = ""
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "method": self.method,
            "x": None if self.x is None else [float(v) for v in self.x],
            "value": self.value,
            "active": list(self.active),
            "iterations": self.iterations,
        }


def _finish(p: Problem, x, status: str, method: str, iterations: int = 0) -> Solution:
    if x is None:
        return Solution(None, None, status, (), method, iterations)
    x = np.asarray(x, dtype=float)
    active = tuple(i for i, c in enumerate(p.constraints) if c.is_active(x, ACTIVE_TOL))
    return Solution(x, evaluate(p.objective, x), status, active, method, iterations)


# ---------------------------------------------------------------------------
# exact LP route


class _Epigraph:
    def __init__(self, n: int):
        self.nvar = n
        self.rows: list[tuple[dict[int, float], float]] = []  # coef . z <= rhs

    def new_var(self) -> int:
        self.nvar += 1
        return self.nvar - 1

    def _bound_below(self, t: int, coef: dict[int, float], const: float):
        row = dict(coef)
        row[t] = row.get(t, 0.0) - 1.0
        self.rows.append((row, -const))

    def lin(self, node: Expr) -> tuple[dict[int, float], float]:
        """Linear form in (x, t) that upper-bounds ``node`` and is tight at the LP optimum."""
        if isinstance(node, Affine):
            return {j: float(v) for j, v in enumerate(node.c) if v != 0}, node.d0
        if isinstance(node, (Sum, Comp)):
            if isinstance(node, Sum):
                parts, const = [(w, ch) for w, ch in node.terms], 0.0
            else:
                parts, const = [(c, ch) for c, _, ch in node.terms], node.c0
            coef: dict[int, float] = {}
            for w, ch in parts:
                cc, k = self.lin(ch)
                for j, v in cc.items():
                    coef[j] = coef.get(j, 0.0) + w * v
                const += w * k
            return coef, const
        if isinstance(node, Max):
            t = self.new_var()
            for ch in node.children():
                self._bound_below(t, *self.lin(ch))
            return {t: 1.0}, 0.0
        if isinstance(node, PwUni):
            # a convex piecewise-linear univariate function is the max of its pieces
            t = self.new_var()
            for p in node.pieces:
                slope = p[1] if len(p) > 1 else 0.0
                self._bound_below(t, {node.var: slope}, p[0])
            return {t: 1.0}, 0.0
        raise NotPiecewiseLinear(f"{type(node).__name__} nodes have no exact LP form")


def solve_pl_exact(p: Problem) -> Solution:
    q = p.as_min()
    obj = q.objective
    if not is_piecewise_linear(obj):
        raise NotPiecewiseLinear("objective contains non-affine pieces")
    if not is_convex(obj):
        raise NonConvexObjective("the epigraph reformulation needs a convex objective")
    epi = _Epigraph(p.n)
    coef, const = epi.lin(obj)
    N = epi.nvar
    c = np.zeros(N)
    for j, v in coef.items():
        c[j] += v
    rows = [(dict(enumerate(con.a)), con.b) for con in p.constraints] + epi.rows
    A_ub = np.zeros((len(rows), N))
    b_ub = np.zeros(len(rows))
    for r, (row, rhs) in enumerate(rows):
        for j, v in row.items():
            A_ub[r, j] += v
        b_ub[r] = rhs
    lower = np.concatenate([p.lower, np.full(N - p.n, -np.inf)])
    upper = np.concatenate([p.upper, np.full(N - p.n, np.inf)])
    res = lp.solve_lp(lp.LpInstance(c, lower=lower, upper=upper, A_ub=A_ub, b_ub=b_ub))
    if not res.ok:
        return _finish(p, None, res.status, "lp", res.iterations)
    sol = _finish(p, res.x[: p.n], OPTIMAL, "lp", res.iterations)
    sol.extra["lp_value"] = res.value + const
    return sol


# ---------------------------------------------------------------------------
# projected subgradient route


def _halfspace_proj(a: np.ndarray, b: float):
    aa = float(a @ a)

    def proj(x):
        s = float(a @ x) - b
        return x - (s / aa) * a if s > 0 else x

    return proj


def project(x, constraints: Sequence[LinearConstraint], lower, upper, max_sweeps: int = 100, tol: float = 1e-10):
    """Euclidean projection onto the polyhedron (Dykstra's cyclic scheme)."""
    sets = [_halfspace_proj(c.a, c.b) for c in constraints]
    if np.any(np.isfinite(lower)) or np.any(np.isfinite(upper)):
        sets.append(lambda z: np.clip(z, lower, upper))
    x = np.asarray(x, dtype=float)
    if not sets:
        return x.copy()
    if len(sets) == 1:
        return sets[0](x)
    incs = [np.zeros_like(x) for _ in sets]
    y = x.copy()
    for _ in range(max_sweeps):
        prev = y.copy()
        for i, P in enumerate(sets):
            z = P(y + incs[i])
            incs[i] = y + incs[i] - z
            y = z
        if np.linalg.norm(y - prev) <= tol * (1.0 + np.linalg.norm(y)):
            break
    viol = max([0.0] + [c.slack(y) for c in constraints] + list(lower - y) + list(y - upper))
    if viol > 1e-8:
        raise ProjectionFailure(f"Dykstra sweeps stopped with constraint violation {viol:.3e}")
    return y


def solve_subgradient(
    p: Problem,
    alpha0: float = 1.0,
    max_iter: int = 50_000,
    window: int = 500,
    rel_tol: float = 1e-9,
    seed: int = 0,
    x0=None,
) -> Solution:
    q = p.as_min()
    obj = q.objective
    if not is_convex(obj):
        raise NonConvexObjective("projected subgradient needs a convex objective (PSD quadratic leaves)")
    rng = np.random.default_rng(seed)
    start = rng.standard_normal(p.n) if x0 is None else as_point(x0, p.n)
    x = project(start, p.constraints, p.lower, p.upper)
    best_x, best_f = x.copy(), evaluate(obj, x)
    history = [best_f]
    status = ITERATION_LIMIT
    k = 0
    for k in range(max_iter):
        xi = subdifferential(obj, x).first()
        if not np.any(xi) and p.max_violation(x) <= 0:
            status = OPTIMAL
            break
        x = project(x - alpha0 / np.sqrt(k + 1.0) * xi, p.constraints, p.lower, p.upper)
        f = evaluate(obj, x)
        if f < best_f:
            best_x, best_f = x.copy(), f
        history.append(best_f)
        if k >= window and history[-window - 1] - best_f <= rel_tol * max(1.0, abs(best_f)):
            status = OPTIMAL
            break
    sol = _finish(p, best_x, status, "subgrad", k + 1)
    return sol


# ---------------------------------------------------------------------------
# brute-force oracle


def _affine_pieces(node: Expr, n: int, cap: int = 4096) -> list[tuple[np.ndarray, float]]:
    if isinstance(node, Affine):
        return [(node.c, node.d0)]
    if isinstance(node, Max):
        return [pc for ch in node.children() for pc in _affine_pieces(ch, n, cap)]
    if isinstance(node, (Sum, Comp)):
        if isinstance(node, Sum):
            parts, acc = [(w, ch) for w, ch in node.terms], [(np.zeros(n), 0.0)]
        else:
            parts, acc = [(c, ch) for c, _, ch in node.terms], [(np.zeros(n), node.c0)]
        for w, ch in parts:
            acc = [(g + w * g2, h + w * h2) for g, h in acc for g2, h2 in _affine_pieces(ch, n, cap)]
            if len(acc) > cap:
                raise DimensionTooLarge("too many affine pieces for the oracle")
        return acc
    if isinstance(node, PwUni):
        out = []
        for pc in node.pieces:
            g = np.zeros(n)
            g[node.var] = pc[1] if len(pc) > 1 else 0.0
            out.append((g, pc[0]))
        return out
    return []


def pl_kinks(expr: Expr, n: int) -> list[tuple[np.ndarray, float]]:
    """Hyperplanes g^T x = h containing every kink of a piecewise-linear tree."""
    out = []
    for ch in expr.children():
        out += pl_kinks(ch, n)
    if isinstance(expr, Max):
        sets = [_affine_pieces(ch, n) for ch in expr.children()]
        for i, j in itertools.combinations(range(len(sets)), 2):
            for g1, h1 in sets[i]:
                for g2, h2 in sets[j]:
                    out.append((g1 - g2, h2 - h1))
    elif isinstance(expr, PwUni):
        for a in expr.breaks:
            g = np.zeros(n)
            g[expr.var] = 1.0
            out.append((g, a))
    return [(g, h) for g, h in out if np.any(np.abs(g) > 1e-14)]


def _vertices(planes: list[tuple[np.ndarray, float]], n: int) -> np.ndarray:
    if len(planes) < n:
        return np.zeros((0, n))
    G = np.array([g for g, _ in planes])
    H = np.array([h for _, h in planes])
    combos = np.array(list(itertools.combinations(range(len(planes)), n)))
    M = G[combos]
    rhs = H[combos]
    scale = np.max(np.abs(M), axis=(1, 2)) ** n
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-10 * scale
    if not np.any(ok):
        return np.zeros((0, n))
    return np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]


def _feasible_mask(p: Problem, X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    mask = np.all((X >= lo - 1e-12 * (1 + np.abs(lo))) & (X <= hi + 1e-12 * (1 + np.abs(hi))), axis=1)
    for c in p.constraints:
        mask &= X @ c.a <= c.b + 1e-12 * (1.0 + abs(c.b))
    return mask


def solve_oracle_grid(
    p: Problem,
    ranges: Sequence[tuple[float, float]] | None = None,
    points: int | None = None,
    refine: int = 0,
) -> Solution:
    """Exhaustive search over a grid plus structural candidate points.

    Candidates are the grid points, every vertex of the arrangement formed by
    the constraint, box and (for piecewise-linear trees) kink hyperplanes, and
    the projections of the grid points onto each constraint hyperplane. With
    ``refine > 0`` the search is repeated on boxes shrunk around the incumbent.
    """
    n = p.n
    if n > 3:
        raise DimensionTooLarge(f"the grid oracle handles n <= 3, got {n}")
    points = points or (201 if n <= 2 else 61)
    if not 2 <= points <= 201:
        raise ValueError("points per axis must lie in [2, 201]")
    q = p.as_min()
    if ranges is None:
        ranges = list(zip(p.lower, p.upper))
    box_lo = np.maximum(np.array([r[0] for r in ranges], dtype=float), p.lower)
    box_hi = np.minimum(np.array([r[1] for r in ranges], dtype=float), p.upper)
    if not (np.all(np.isfinite(box_lo)) and np.all(np.isfinite(box_hi))):
        raise ValueError("the grid oracle needs finite per-axis ranges")
    if np.any(box_lo > box_hi):
        return _finish(p, None, INFEASIBLE, "grid")
    kinks = pl_kinks(q.objective, n) if is_piecewise_linear(q.objective) else []

    lo, hi = box_lo.copy(), box_hi.copy()
    best_x, best_f = None, np.inf
    for _ in range(refine + 1):
        axes = [np.linspace(lo[j], hi[j], points) for j in range(n)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        planes = [(c.a, c.b) for c in p.constraints] + kinks
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            planes += [(e, lo[j]), (e, hi[j])]
        cands = [grid, _vertices(planes, n)]
        for c in p.constraints:
            proj = grid - np.outer((grid @ c.a - c.b) / (c.a @ c.a), c.a)
            cands.append(proj)
        X = np.vstack(cands + ([best_x[None, :]] if best_x is not None else []))
        X = X[_feasible_mask(p, X, np.maximum(lo, box_lo), np.minimum(hi, box_hi))]
        if X.shape[0] == 0:
            if best_x is None:
                return _finish(p, None, INFEASIBLE, "grid")
            break
        vals = evaluate_batch(q.objective, X)
        k = int(np.argmin(vals))
        if vals[k] < best_f:
            best_x, best_f = X[k].copy(), float(vals[k])
        step = (hi - lo) / (points - 1)
        lo = np.maximum(best_x - 2 * step, box_lo)
        hi = np.minimum(best_x + 2 * step, box_hi)
    return _finish(p, best_x, OPTIMAL, "grid")


METHODS = ("lp", "subgrad", "grid")


def solve(p: Problem, method: str = "lp", **kw) -> Solution:
    if method in ("lp", "exact"):
        return solve_pl_exact(p)
    if method == "subgrad":
        return solve_subgradient(p, **kw)
    if method == "grid":
        return solve_oracle_grid(p, **kw)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
