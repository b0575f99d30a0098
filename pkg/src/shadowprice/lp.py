"""Dense two-phase simplex for small linear programs.

    minimize    c^T x
    subject to  A_eq x  = b_eq
                A_ub x <= b_ub
                lower <= x <= upper        (entries may be infinite)

Bounds are removed by shifting/splitting variables, inequality rows get slack
columns, and the resulting standard form ``A z = b, z >= 0`` is solved on a
full tableau. Dantzig pricing is used until 500 consecutive non-improving
pivots, after which Bland's rule takes over for good. The final basic point is
recomputed by a direct solve against the original columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
STALL_LIMIT = 500
MAX_PIVOTS = 100_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


def _vec(v, n, fill):
    if v is None:
        return np.full(n, fill, dtype=float)
    out = np.array(np.broadcast_to(np.asarray(v, dtype=float), (n,)))
    return out


def _mat(A, n):
    if A is None:
        return np.zeros((0, n))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((0, n))
    if A.shape[1] != n:
        raise ValueError(f"constraint matrix has {A.shape[1]} columns, expected {n}")
    return A


@dataclass(frozen=True, eq=False)
class LpInstance:
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None

    def __post_init__(self):
        c = np.ravel(np.asarray(self.c, dtype=float))
        n = c.shape[0]
        A_eq, A_ub = _mat(self.A_eq, n), _mat(self.A_ub, n)
        b_eq = np.ravel(np.asarray(self.b_eq if self.b_eq is not None else [], dtype=float))
        b_ub = np.ravel(np.asarray(self.b_ub if self.b_ub is not None else [], dtype=float))
        if b_eq.shape[0] != A_eq.shape[0] or b_ub.shape[0] != A_ub.shape[0]:
            raise ValueError("row counts of constraint matrices and right-hand sides differ")
        lower, upper = _vec(self.lower, n, 0.0), _vec(self.upper, n, np.inf)
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise ValueError("invalid bounds")
        for arr in (c, A_eq, b_eq, A_ub, b_ub):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")
        for name, val in dict(c=c, A_eq=A_eq, b_eq=b_eq, lower=lower, upper=upper, A_ub=A_ub, b_ub=b_ub).items():
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    value: float | None
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _standard_form(inst: LpInstance):
    """Return (A, b, cost, T, offset) with x = offset + T z, z >= 0."""
    n = inst.n
    cols = []  # column vectors of T
    offset = np.zeros(n)
    upper_rows = []  # (z column index, hi - lo)
    for j in range(n):
        lo, hi = inst.lower[j], inst.upper[j]
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo):
            offset[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                upper_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    T = np.array(cols).T if cols else np.zeros((n, 0))
    nz = T.shape[1]
    m_eq, m_ub, m_up = inst.A_eq.shape[0], inst.A_ub.shape[0], len(upper_rows)
    nslack = m_ub + m_up
    A = np.zeros((m_eq + m_ub + m_up, nz + nslack))
    b = np.zeros(A.shape[0])
    A[:m_eq, :nz] = inst.A_eq @ T
    b[:m_eq] = inst.b_eq - inst.A_eq @ offset
    A[m_eq : m_eq + m_ub, :nz] = inst.A_ub @ T
    A[m_eq : m_eq + m_ub, nz : nz + m_ub] = np.eye(m_ub)
    b[m_eq : m_eq + m_ub] = inst.b_ub - inst.A_ub @ offset
    for k, (col, width) in enumerate(upper_rows):
        r = m_eq + m_ub + k
        A[r, col] = 1.0
        A[r, nz + m_ub + k] = 1.0
        b[r] = width
    cost = np.concatenate([T.T @ inst.c, np.zeros(nslack)])
    return A, b, cost, T, offset


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int]):
        self.T = T
        self.basis = basis
        self.pivots = 0
        self.stall = 0
        self.bland = False

    def pivot(self, r: int, j: int, zrow: np.ndarray):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        zrow -= zrow[j] * T[r]
        rhs = T[:, -1]
        rhs[(rhs < 0) & (rhs > -FEAS_TOL)] = 0.0
        self.basis[r] = j
        self.pivots += 1

    def run(self, zrow: np.ndarray, allowed: np.ndarray) -> str:
        T = self.T
        while True:
            if self.pivots >= MAX_PIVOTS:
                return ITERATION_LIMIT
            cand = np.flatnonzero(allowed & (zrow[:-1] < -OPT_TOL))
            if cand.size == 0:
                return OPTIMAL
            j = int(cand[0]) if self.bland else int(cand[np.argmin(zrow[cand])])
            col = T[:, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            before = -zrow[-1]
            self.pivot(r, j, zrow)
            if -zrow[-1] < before - 1e-12 * (1.0 + abs(before)):
                self.stall = 0
            else:
                self.stall += 1
                if self.stall >= STALL_LIMIT:
                    self.bland = True


def solve_lp(inst: LpInstance) -> LpResult:
    A, b, cost, Tmap, offset = _standard_form(inst)
    m, N = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # phase 1: artificial basis
    tab = np.zeros((m, N + m + 1))
    tab[:, :N] = A
    tab[:, N : N + m] = np.eye(m)
    tab[:, -1] = b
    t = _Tableau(tab, list(range(N, N + m)))
    zrow = np.zeros(N + m + 1)
    zrow[:N] = -A.sum(axis=0)
    zrow[-1] = -b.sum()
    allowed = np.ones(N + m, dtype=bool)
    status = t.run(zrow, allowed)
    if status == ITERATION_LIMIT:
        return LpResult(ITERATION_LIMIT, None, None, t.pivots)
    if -zrow[-1] > FEAS_TOL * max(1.0, float(np.max(np.abs(b), initial=0.0))):
        return LpResult(INFEASIBLE, None, None, t.pivots)

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = list(range(m))
    r = 0
    while r < len(t.basis):
        if t.basis[r] >= N:
            row = t.T[r, :N]
            cands = np.flatnonzero(np.abs(row) > 1e-9)
            if cands.size:
                j = int(cands[np.argmax(np.abs(row[cands]))])
                t.pivot(r, j, zrow)
            else:
                t.T = np.delete(t.T, r, axis=0)
                del t.basis[r]
                del keep[r]
                continue
        r += 1

    # phase 2 on the original costs
    t.T = np.hstack([t.T[:, :N], t.T[:, -1:]])
    zrow = np.concatenate([cost, [0.0]])
    for i, j in enumerate(t.basis):
        zrow -= cost[j] * t.T[i]
    t.stall, t.bland = 0, False
    status = t.run(zrow, np.ones(N, dtype=bool))
    if status != OPTIMAL:
        return LpResult(status, None, None, t.pivots)

    z = np.zeros(N)
    if t.basis:
        B = A[np.ix_(keep, t.basis)]
        try:
            zb = np.linalg.solve(B, b[keep])
        except np.linalg.LinAlgError:
            zb = t.T[:, -1]
        z[t.basis] = zb
    z = np.maximum(z, 0.0)
    x = offset + Tmap @ z[: Tmap.shape[1]]
    x = np.clip(x, inst.lower, inst.upper)
    return LpResult(OPTIMAL, x, float(inst.c @ x), t.pivots)
