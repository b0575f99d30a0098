"""Seeded random instance families for tests and experiment scripts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kkt import LinearConstraint, active_flags
from .nsfunc import Affine, Expr, Max, PwUni, Quadratic, Sum
from .solver import Problem, solve_pl_exact


@dataclass(frozen=True)
class SuiteConfig:
    count: int = 30
    n_max: int = 3
    m_max: int = 3
    box: float = 2.0
    seed: int = 0
    max_tries: int = 2000


def convex_pwuni(rng: np.random.Generator, var: int, k: int, span: float = 1.5) -> PwUni:
    """Convex piecewise-linear univariate term with ``k`` breakpoints."""
    breaks = np.sort(rng.uniform(-span, span, k))
    slopes = np.sort(rng.normal(0.0, 1.0, k + 1))
    pieces, level = [], 0.0
    start = breaks[0] if k else 0.0
    # piece i is slopes[i] * (t - start) + level, rebased at each breakpoint
    pieces.append((level - slopes[0] * start, slopes[0]))
    for i in range(k):
        level += slopes[i] * (breaks[i] - start)
        start = breaks[i]
        pieces.append((level - slopes[i + 1] * start, slopes[i + 1]))
    return PwUni(var, breaks, pieces)


def random_convex_pl(rng: np.random.Generator, n: int, m: int, box: float = 2.0) -> Problem:
    """Max of affine pieces (plus, half the time, a convex PwUni term) over a box and m halfspaces."""
    drift = rng.normal(size=n)
    drift *= 1.5 / np.linalg.norm(drift)
    K = int(rng.integers(n + 1, n + 4))
    pieces = [Affine(rng.normal(size=n) + drift, rng.uniform(-0.5, 0.5)) for _ in range(K)]
    obj: Expr = Max(pieces)
    if rng.random() < 0.5:
        var = int(rng.integers(n))
        obj = Sum([(1.0, obj), (float(rng.uniform(0.5, 1.5)), convex_pwuni(rng, var, int(rng.integers(1, 3))))])
    cs = []
    for _ in range(m):
        a = rng.normal(size=n)
        a /= np.linalg.norm(a)
        cs.append(LinearConstraint(a, rng.uniform(0.2, 1.0)))
    return Problem(obj, cs, n, "min", np.full(n, -box), np.full(n, box))


def _usable(p: Problem) -> bool:
    sol = solve_pl_exact(p)
    if not sol.ok:
        return False
    flags = active_flags(p.all_constraints(), sol.x)
    if not any(flags[: len(p.constraints)]):
        return False
    normals = np.array([c.a for c, f in zip(p.all_constraints(), flags) if f])
    return np.linalg.matrix_rank(normals) == normals.shape[0]


def pl_suite(cfg: SuiteConfig = SuiteConfig()) -> list[Problem]:
    """Convex PL problems whose optimum has at least one active main constraint
    and linearly independent active normals (box rows included)."""
    rng = np.random.default_rng(cfg.seed)
    out = []
    for _ in range(cfg.max_tries):
        if len(out) == cfg.count:
            break
        n = int(rng.integers(1, cfg.n_max + 1))
        m = int(rng.integers(1, cfg.m_max + 1))
        p = random_convex_pl(rng, n, m, cfg.box)
        if _usable(p):
            out.append(p)
    if len(out) < cfg.count:
        raise RuntimeError(f"only {len(out)} usable instances after {cfg.max_tries} draws")
    return out


@dataclass
class ExpansionCase:
    expr: Expr
    x: np.ndarray
    d: np.ndarray
    t_kink: float  # first step length at which the active structure changes


def pl_tie_case(rng: np.random.Generator, n: int) -> ExpansionCase:
    """Max of affine pieces with several ties at x plus lower pieces, and a convex PwUni term."""
    x = rng.normal(size=n)
    d = rng.normal(size=n)
    d /= np.linalg.norm(d)
    v = rng.normal()
    tied = [rng.normal(size=n) for _ in range(int(rng.integers(2, 4)))]
    top = max(float(c @ d) for c in tied)
    pieces = [Affine(c, v - c @ x) for c in tied]
    crossings = []
    for _ in range(int(rng.integers(1, 4))):
        c = rng.normal(size=n)
        gap = rng.uniform(0.1, 1.0)
        pieces.append(Affine(c, v - gap - c @ x))
        if c @ d > top:
            crossings.append(gap / (c @ d - top))
    # PwUni term with a breakpoint exactly at x[var] and others ahead along d
    var = int(rng.integers(n))
    ahead = x[var] + np.sign(d[var] or 1.0) * rng.uniform(0.2, 1.0)
    breaks = sorted([x[var], ahead])
    slopes = np.sort(rng.normal(size=3))
    pieces_u = [(-slopes[0] * breaks[0], slopes[0])]
    level = 0.0
    for i, a in enumerate(breaks):
        pieces_u.append((level - slopes[i + 1] * a, slopes[i + 1]))
        if i + 1 < len(breaks):
            level += slopes[i + 1] * (breaks[i + 1] - a)
    uni = PwUni(var, breaks, pieces_u)
    if d[var] != 0:
        crossings.append(abs(ahead - x[var]) / abs(d[var]))
    expr = Sum([(1.0, Max(pieces)), (1.0, uni)])
    return ExpansionCase(expr, x, d, min(crossings) if crossings else np.inf)


def max_quadratics_case(rng: np.random.Generator, n: int, gap: float = 0.2) -> ExpansionCase:
    """Max of positive definite quadratics tied at x, with one piece strictly steepest along d."""
    x = rng.normal(size=n)
    d = rng.normal(size=n)
    d /= np.linalg.norm(d)
    K = int(rng.integers(2, 4))
    grads = [rng.normal(size=n) for _ in range(K)]
    # push the first gradient so its slope along d leads the rest by ``gap``
    lead = max(float(g @ d) for g in grads[1:]) + gap
    grads[0] = grads[0] + (lead - grads[0] @ d) * d
    v = rng.normal()
    qs = []
    for g in grads:
        B = rng.normal(size=(n, n))
        Q = B @ B.T + 0.5 * np.eye(n)
        c = g - Q @ x
        d0 = v - (0.5 * x @ Q @ x + c @ x)
        qs.append(Quadratic(Q, c, d0))
    return ExpansionCase(Max(qs), x, d, np.inf)


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass
class PlantedCase:
    problem: Problem
    x_star: np.ndarray
    lam: float


def planted_nonconvex(rng: np.random.Generator, q: float | None = None) -> PlantedCase:
    """Max of two indefinite quadratics with a planted constrained minimiser.

    In local coordinates u = R^T (x - x*),
        f_j = p u1 + q u1^2 / 2 -/+ s_j u2 - r_j u2^2 / 2,    constraint u1 >= 0,
    so the minimiser is u = 0 inside a box where the concave u2 terms cannot
    win, and the multiplier is p / alpha. Relaxing the constraint by db moves
    the optimum to u1 = -db / alpha, giving quotient p/alpha - q db / (2 alpha^2).
    """
    x_star = rng.uniform(-1, 1, 2)
    R = _rot(rng.uniform(0, 2 * np.pi))
    p = rng.uniform(0.5, 2.0)
    alpha = rng.uniform(0.5, 2.0)
    q = rng.uniform(0.0, 1.0) if q is None else q
    s = rng.uniform(0.5, 1.5, 2)
    r = rng.uniform(0.5, 2.0, 2)
    pieces = []
    for j, sign in enumerate((-1.0, 1.0)):
        g = np.array([p, sign * s[j]])
        H = np.diag([q, -r[j]])
        Q = R @ H @ R.T
        Q = 0.5 * (Q + Q.T)
        gx = R @ g
        c = gx - Q @ x_star
        d0 = -(0.5 * x_star @ Q @ x_star + c @ x_star)
        pieces.append(Quadratic(Q, c, d0))
    a = -alpha * R[:, 0]
    con = LinearConstraint(a, float(a @ x_star))
    w = float(np.min(2 * s / r)) / (1.5 * np.sqrt(2))
    prob = Problem(Max(pieces), [con], 2, "min", x_star - w, x_star + w)
    return PlantedCase(prob, x_star, p / alpha)


@dataclass
class HullCase:
    generators: np.ndarray
    constraint: LinearConstraint


def hull_case(rng: np.random.Generator, n: int = 2) -> HullCase:
    """Generator polytope placed so that {lam >= 0 : -lam a in hull} is a nonempty interval."""
    a = rng.normal(size=n)
    a /= np.linalg.norm(a)
    a *= rng.uniform(0.5, 2.0)
    lam0 = rng.uniform(0.5, 3.0)
    radius = rng.uniform(0.2, 0.9) * lam0 * np.linalg.norm(a)
    K = int(rng.integers(3, 8))
    pts = -lam0 * a + radius * rng.uniform(-1, 1, (K, n))
    # a small cross around the centre keeps lam0 strictly inside the interval
    cross = 0.3 * radius * np.vstack([np.eye(n), -np.eye(n)])
    pts = np.vstack([pts, -lam0 * a + cross])
    return HullCase(pts, LinearConstraint(a, 0.0))
