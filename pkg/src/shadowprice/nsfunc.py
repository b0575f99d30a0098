"""Nonsmooth function classes and their first-order calculus.

Expressions are small immutable trees built from four node kinds:

* ``Affine`` / ``Quadratic`` leaves (the smooth pieces),
* ``Max`` nodes (pointwise maximum of children),
* ``Sum`` nodes (nonnegative weighted sums),
* ``Comp`` nodes ``c0 + sum_i c_i * phi_i(child_i)`` with ``c_i >= 0`` and
  ``phi_i`` one of identity, ``exp`` or squaring on the nonnegative axis,
* ``PwUni`` nodes, a univariate piecewise polynomial in one coordinate.

Every node knows its value, the generators of its (Clarke) subdifferential and
its one-sided directional derivative. For trees in this grammar the function is
Clarke regular as long as every ``PwUni`` kink is convex, so the generator
support function and the one-sided derivative coincide.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, GeneratorBlowup

PHIS = ("id", "exp", "sq+")
CONTINUITY_TOL = 1e-9


@dataclass(frozen=True)
class Tolerances:
    eps_active: float = 1e-8
    eps_dedup: float = 1e-12
    max_generators: int = 10000

    def __post_init__(self):
        if not (self.eps_active > 0 and self.eps_dedup > 0 and self.max_generators > 0):
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerances()


def as_point(x, n: int | None = None) -> np.ndarray:
    """Convert ``x`` to a finite 1-d float array, optionally checking its length."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("point has non-finite coordinates")
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch(f"expected {n} coordinates, got {arr.shape[0]}")
    return arr


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficients must be finite")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# generator sets


def dedup_rows(rows: np.ndarray, eps: float) -> np.ndarray:
    """Lexicographically sorted rows with near-duplicates (max-abs <= eps) removed."""
    rows = np.asarray(rows, dtype=float)
    if rows.shape[0] <= 1:
        return rows.copy()
    order = np.lexsort(rows.T[::-1])
    rows = rows[order]
    scale = max(1.0, float(np.max(np.abs(rows))))
    kept = [rows[0]]
    for r in rows[1:]:
        if np.min(np.max(np.abs(np.asarray(kept) - r), axis=1)) > eps * scale:
            kept.append(r)
    return np.asarray(kept)


@dataclass(frozen=True, eq=False)
class GeneratorPolytope:
    """Convex hull of finitely many generator vectors (one per row)."""

    generators: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if g.shape[0] == 0:
            raise ValueError("a generator polytope needs at least one generator")
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)

    @classmethod
    def from_vectors(cls, vectors, eps: float = DEFAULT_TOL.eps_dedup) -> "GeneratorPolytope":
        return cls(dedup_rows(np.atleast_2d(np.asarray(vectors, dtype=float)), eps))

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    def __len__(self) -> int:
        return self.generators.shape[0]

    def support(self, d) -> float:
        """max over the hull of xi^T d (attained at a generator)."""
        return float(np.max(self.generators @ np.asarray(d, dtype=float)))

    def first(self) -> np.ndarray:
        """The lexicographically smallest generator."""
        return self.generators[0].copy()

    def scaled(self, t: float) -> "GeneratorPolytope":
        return GeneratorPolytope(self.generators * t)


def _minkowski(parts: Sequence[np.ndarray], tol: Tolerances) -> np.ndarray:
    count = 1
    for p in parts:
        count *= p.shape[0]
    if count > tol.max_generators:
        raise GeneratorBlowup(f"{count} generators exceed the cap of {tol.max_generators}")
    acc = parts[0]
    for p in parts[1:]:
        acc = (acc[:, None, :] + p[None, :, :]).reshape(-1, acc.shape[1])
        acc = dedup_rows(acc, tol.eps_dedup)
    return acc


# ---------------------------------------------------------------------------
# polynomial helpers (coefficients low to high)


def poly_val(coeffs: Sequence[float], t):
    out = 0.0 * t if isinstance(t, np.ndarray) else 0.0
    for c in reversed(coeffs):
        out = out * t + c
    return out


def poly_der(coeffs: Sequence[float]) -> tuple[float, ...]:
    if len(coeffs) <= 1:
        return (0.0,)
    return tuple(k * coeffs[k] for k in range(1, len(coeffs)))


# ---------------------------------------------------------------------------
# nodes


class Expr:
    """Base class of expression nodes."""

    dim: int | None = None
    min_dim: int = 0

    def children(self) -> tuple["Expr", ...]:
        return ()

    # the underscore methods assume a validated point of the right size
    def _value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gens(self, x: np.ndarray, tol: Tolerances) -> np.ndarray:
        raise NotImplementedError

    def _dd(self, x: np.ndarray, d: np.ndarray, tol: Tolerances) -> float:
        raise NotImplementedError


def _common_dim(children: Sequence[Expr]) -> tuple[int | None, int]:
    dims = {c.dim for c in children if c.dim is not None}
    if len(dims) > 1:
        raise DimensionMismatch(f"children have inconsistent dimensions {sorted(dims)}")
    dim = dims.pop() if dims else None
    min_dim = max(c.min_dim for c in children)
    if dim is not None and min_dim > dim:
        raise DimensionMismatch("a univariate child indexes past the problem dimension")
    return dim, min_dim


@dataclass(frozen=True, eq=False)
class Affine(Expr):
    c: np.ndarray
    d0: float = 0.0

    def __post_init__(self):
        c = _frozen(np.ravel(self.c))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d0", float(self.d0))
        object.__setattr__(self, "dim", c.shape[0])
        object.__setattr__(self, "min_dim", c.shape[0])

    def gradient(self, x) -> np.ndarray:
        return self.c.copy()

    def _value(self, x):
        return float(self.c @ x + self.d0)

    def _values(self, X):
        return X @ self.c + self.d0

    def _gens(self, x, tol):
        return self.c[None, :].copy()

    def _dd(self, x, d, tol):
        return float(self.c @ d)


@dataclass(frozen=True, eq=False)
class Quadratic(Expr):
    """0.5 x^T Q x + c^T x + d0 with symmetric Q."""

    Q: np.ndarray
    c: np.ndarray
    d0: float = 0.0

    def __post_init__(self):
        Q = _frozen(np.atleast_2d(self.Q))
        c = _frozen(np.ravel(self.c))
        n = c.shape[0]
        if Q.shape != (n, n):
            raise DimensionMismatch(f"Q has shape {Q.shape}, expected {(n, n)}")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(Q), initial=0.0))):
            raise ValueError("Q must be symmetric")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d0", float(self.d0))
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "min_dim", n)

    def gradient(self, x) -> np.ndarray:
        return self.Q @ x + self.c

    def _value(self, x):
        return float(0.5 * x @ self.Q @ x + self.c @ x + self.d0)

    def _values(self, X):
        return 0.5 * np.einsum("ij,jk,ik->i", X, self.Q, X) + X @ self.c + self.d0

    def _gens(self, x, tol):
        return self.gradient(x)[None, :]

    def _dd(self, x, d, tol):
        return float(self.gradient(x) @ d)


@dataclass(frozen=True, eq=False)
class Max(Expr):
    children_: tuple[Expr, ...]

    def __init__(self, children: Sequence[Expr]):
        children = tuple(children)
        if not children:
            raise ValueError("Max needs at least one child")
        object.__setattr__(self, "children_", children)
        dim, min_dim = _common_dim(children)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "min_dim", min_dim)

    def children(self):
        return self.children_

    def active(self, x, tol: Tolerances = DEFAULT_TOL) -> tuple[int, ...]:
        vals = [ch._value(x) for ch in self.children_]
        top = max(vals)
        thresh = tol.eps_active * (1.0 + abs(top))
        return tuple(i for i, v in enumerate(vals) if top - v <= thresh)

    def _value(self, x):
        return max(ch._value(x) for ch in self.children_)

    def _values(self, X):
        return np.max(np.stack([ch._values(X) for ch in self.children_]), axis=0)

    def _gens(self, x, tol):
        parts = [self.children_[i]._gens(x, tol) for i in self.active(x, tol)]
        total = sum(p.shape[0] for p in parts)
        if total > tol.max_generators:
            raise GeneratorBlowup(f"{total} generators exceed the cap of {tol.max_generators}")
        return dedup_rows(np.vstack(parts), tol.eps_dedup)

    def _dd(self, x, d, tol):
        return max(self.children_[i]._dd(x, d, tol) for i in self.active(x, tol))


@dataclass(frozen=True, eq=False)
class Sum(Expr):
    terms: tuple[tuple[float, Expr], ...]

    def __init__(self, terms: Sequence[tuple[float, Expr]]):
        terms = tuple((float(w), ch) for w, ch in terms)
        if not terms:
            raise ValueError("Sum needs at least one term")
        for w, _ in terms:
            if not (math.isfinite(w) and w >= 0):
                raise ValueError(f"Sum weights must be finite and nonnegative, got {w}")
        object.__setattr__(self, "terms", terms)
        dim, min_dim = _common_dim([ch for _, ch in terms])
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "min_dim", min_dim)

    def children(self):
        return tuple(ch for _, ch in self.terms)

    def _value(self, x):
        return float(sum(w * ch._value(x) for w, ch in self.terms))

    def _values(self, X):
        return sum(w * ch._values(X) for w, ch in self.terms)

    def _gens(self, x, tol):
        return _minkowski([w * ch._gens(x, tol) for w, ch in self.terms], tol)

    def _dd(self, x, d, tol):
        return float(sum(w * ch._dd(x, d, tol) for w, ch in self.terms))


def _phi(kind: str, y):
    if kind == "id":
        return y
    if kind == "exp":
        return np.exp(y)
    if np.any(np.asarray(y) < 0):
        raise DomainError("sq+ is only defined on the nonnegative axis")
    return y * y


def _dphi(kind: str, y: float) -> float:
    if kind == "id":
        return 1.0
    if kind == "exp":
        return math.exp(y)
    if y < 0:
        raise DomainError("sq+ is only defined on the nonnegative axis")
    return 2.0 * y


@dataclass(frozen=True, eq=False)
class Comp(Expr):
    """Monotone separable composition c0 + sum_i c_i * phi_i(child_i(x))."""

    c0: float
    terms: tuple[tuple[float, str, Expr], ...]

    def __init__(self, c0: float, terms: Sequence[tuple[float, str, Expr]]):
        terms = tuple((float(c), str(phi), ch) for c, phi, ch in terms)
        if not terms:
            raise ValueError("Comp needs at least one term")
        for c, phi, _ in terms:
            if not (math.isfinite(c) and c >= 0):
                raise ValueError(f"Comp coefficients must be finite and nonnegative, got {c}")
            if phi not in PHIS:
                raise ValueError(f"unknown phi {phi!r}; expected one of {PHIS}")
        object.__setattr__(self, "c0", float(c0))
        object.__setattr__(self, "terms", terms)
        dim, min_dim = _common_dim([ch for _, _, ch in terms])
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "min_dim", min_dim)

    def children(self):
        return tuple(ch for _, _, ch in self.terms)

    def outer_partials(self, x) -> np.ndarray:
        """dg/dy_i at y = (child_i(x))_i."""
        return np.array([c * _dphi(phi, ch._value(x)) for c, phi, ch in self.terms])

    def _value(self, x):
        return float(self.c0 + sum(c * _phi(phi, ch._value(x)) for c, phi, ch in self.terms))

    def _values(self, X):
        return self.c0 + sum(c * _phi(phi, ch._values(X)) for c, phi, ch in self.terms)

    def _gens(self, x, tol):
        dg = self.outer_partials(x)
        return _minkowski([w * ch._gens(x, tol) for w, (_, _, ch) in zip(dg, self.terms)], tol)

    def _dd(self, x, d, tol):
        dg = self.outer_partials(x)
        return float(sum(w * ch._dd(x, d, tol) for w, (_, _, ch) in zip(dg, self.terms)))


@dataclass(frozen=True, eq=False)
class PwUni(Expr):
    """Univariate piecewise polynomial in coordinate ``var``.

    ``pieces[i]`` (coefficients low to high, degree <= 3) applies on
    ``[breaks[i-1], breaks[i])``; the first and last pieces extend to -inf/+inf.
    """

    var: int
    breaks: tuple[float, ...]
    pieces: tuple[tuple[float, ...], ...]

    def __init__(self, var: int, breaks: Sequence[float], pieces: Sequence[Sequence[float]]):
        var = int(var)
        breaks = tuple(float(a) for a in breaks)
        pieces = tuple(tuple(float(c) for c in p) for p in pieces)
        if var < 0:
            raise ValueError("var must be a nonnegative coordinate index")
        if len(pieces) != len(breaks) + 1:
            raise ValueError(f"{len(breaks)} breakpoints need {len(breaks) + 1} pieces, got {len(pieces)}")
        if any(b <= a for a, b in zip(breaks, breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        for p in pieces:
            if not 1 <= len(p) <= 4:
                raise ValueError("pieces are polynomials of degree <= 3")
            if not all(math.isfinite(c) for c in p):
                raise ValueError("piece coefficients must be finite")
        if not all(math.isfinite(a) for a in breaks):
            raise ValueError("breakpoints must be finite")
        for i, a in enumerate(breaks):
            left, right = poly_val(pieces[i], a), poly_val(pieces[i + 1], a)
            if abs(left - right) > CONTINUITY_TOL * max(1.0, abs(left)):
                raise ValueError(f"pieces {i} and {i + 1} disagree at breakpoint {a}: {left} vs {right}")
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "dim", None)
        object.__setattr__(self, "min_dim", var + 1)

    def piece_index(self, t: float) -> int:
        return bisect.bisect_right(self.breaks, t)

    def active(self, x, tol: Tolerances = DEFAULT_TOL) -> tuple[int, ...]:
        t = float(x[self.var])
        k = self.piece_index(t)
        act = {k}
        if k > 0 and abs(t - self.breaks[k - 1]) <= tol.eps_active:
            act.add(k - 1)
        if k < len(self.breaks) and abs(t - self.breaks[k]) <= tol.eps_active:
            act.add(k + 1)
        return tuple(sorted(act))

    def slopes_at_break(self, i: int) -> tuple[float, float]:
        """One-sided derivatives (left, right) at breakpoint ``i``."""
        a = self.breaks[i]
        return poly_val(poly_der(self.pieces[i]), a), poly_val(poly_der(self.pieces[i + 1]), a)

    def value_at(self, t: float) -> float:
        return float(poly_val(self.pieces[self.piece_index(t)], t))

    def derivative_at(self, t: float, piece: int | None = None) -> float:
        k = self.piece_index(t) if piece is None else piece
        return float(poly_val(poly_der(self.pieces[k]), t))

    def _value(self, x):
        return self.value_at(float(x[self.var]))

    def _values(self, X):
        t = X[:, self.var]
        idx = np.searchsorted(np.asarray(self.breaks), t, side="right")
        out = np.empty_like(t)
        for k, p in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = poly_val(p, t[mask])
        return out

    def _gens(self, x, tol):
        t = float(x[self.var])
        rows = []
        for k in self.active(x, tol):
            g = np.zeros(x.shape[0])
            g[self.var] = self.derivative_at(t, k)
            rows.append(g)
        return dedup_rows(np.vstack(rows), tol.eps_dedup)

    def _dd(self, x, d, tol):
        dv = float(d[self.var])
        if dv == 0.0:
            return 0.0
        t = float(x[self.var])
        act = self.active(x, tol)
        k = act[-1] if dv > 0 else act[0]
        return self.derivative_at(t, k) * dv


# ---------------------------------------------------------------------------
# public operations


def _check(expr: Expr, x) -> np.ndarray:
    x = as_point(x)
    if expr.dim is not None and x.shape[0] != expr.dim:
        raise DimensionMismatch(f"expression has dimension {expr.dim}, point has {x.shape[0]}")
    if x.shape[0] < expr.min_dim:
        raise DimensionMismatch(f"expression needs at least {expr.min_dim} coordinates")
    return x


def evaluate(expr: Expr, x) -> float:
    """Exact recursive value of ``expr`` at ``x``."""
    return expr._value(_check(expr, x))


def evaluate_batch(expr: Expr, X) -> np.ndarray:
    """Values at each row of ``X`` (vectorised; used by the grid oracle)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if expr.dim is not None and X.shape[1] != expr.dim:
        raise DimensionMismatch(f"expression has dimension {expr.dim}, points have {X.shape[1]}")
    return np.asarray(expr._values(X), dtype=float)


def active_set(node: Expr, x, tol: Tolerances = DEFAULT_TOL):
    """Active child indices of a Max node or active pieces of a PwUni node.

    For a Comp node the per-child active sets are returned as a tuple (children
    that are neither Max nor PwUni report ``(0,)``).
    """
    x = _check(node, x)
    if isinstance(node, (Max, PwUni)):
        return node.active(x, tol)
    if isinstance(node, Comp):
        return tuple(ch.active(x, tol) if isinstance(ch, (Max, PwUni)) else (0,) for ch in node.children())
    raise TypeError(f"active sets are defined for Max, PwUni and Comp nodes, not {type(node).__name__}")


def subdifferential(expr: Expr, x, tol: Tolerances = DEFAULT_TOL) -> GeneratorPolytope:
    x = _check(expr, x)
    return GeneratorPolytope(dedup_rows(expr._gens(x, tol), tol.eps_dedup))


def dir_deriv(expr: Expr, x, d, tol: Tolerances = DEFAULT_TOL) -> float:
    """One-sided directional derivative f'(x; d).

    Computed node by node from one-sided rules; on regular trees this is the
    support function of :func:`subdifferential` in direction ``d``.
    """
    x = _check(expr, x)
    d = as_point(d, x.shape[0])
    return expr._dd(x, d, tol)


def clarke_dir_deriv(expr: Expr, x, d, tol: Tolerances = DEFAULT_TOL) -> float:
    """Generalized directional derivative as the max of xi^T d over the generators."""
    x = _check(expr, x)
    d = as_point(d, x.shape[0])
    return subdifferential(expr, x, tol).support(d)


def clarke_dir_estimate(
    fn: Callable[[np.ndarray], float],
    x,
    d,
    radius: float,
    samples: int,
    tmin: float,
    seed: int = 0,
    n_steps: int = 16,
) -> float:
    """Sampled lim-sup difference quotient around ``x``.

    Base points are ``x`` itself plus ``samples`` uniform draws from the ball of
    the given radius; step lengths run over a geometric grid from ``tmin`` to
    ``radius``.
    """
    if radius <= 0 or samples < 1 or tmin <= 0:
        raise ValueError("need radius > 0, samples >= 1 and tmin > 0")
    x = as_point(x)
    d = as_point(d, x.shape[0])
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    dirs = rng.standard_normal((samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = radius * rng.random(samples) ** (1.0 / n)
    bases = np.vstack([x, x + dirs * r[:, None]])
    steps = np.geomspace(tmin, radius, n_steps) if tmin < radius else np.array([tmin])
    best = -math.inf
    for y in bases:
        fy = fn(y)
        for t in steps:
            best = max(best, (fn(y + t * d) - fy) / t)
    return float(best)


def expansion_residual(expr: Expr, x, d, t: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """|f(x + t d) - f(x) - t f'(x; d)|."""
    if t <= 0:
        raise ValueError("t must be positive")
    x = _check(expr, x)
    d = as_point(d, x.shape[0])
    return abs(expr._value(x + t * d) - expr._value(x) - t * expr._dd(x, d, tol))


def iter_nodes(expr: Expr) -> Iterator[Expr]:
    yield expr
    for ch in expr.children():
        yield from iter_nodes(ch)


@dataclass
class RegularityReport:
    passed: bool
    max_violation: float
    kink_violations: list[tuple[int, int, float, float]] = field(default_factory=list)
    direction_gaps: list[float] = field(default_factory=list)


def _fd_one_sided(expr: Expr, x: np.ndarray, d: np.ndarray, t: float) -> float:
    # Richardson-extrapolated forward quotient; exact for locally quadratic pieces
    f0 = expr._value(x)
    q1 = (expr._value(x + t * d) - f0) / t
    q2 = (expr._value(x + 0.5 * t * d) - f0) / (0.5 * t)
    return 2.0 * q2 - q1


def regularity_check(
    expr: Expr,
    x,
    dirs: Sequence,
    tol: Tolerances = DEFAULT_TOL,
    fd_tol: float = 1e-6,
    fd_step: float = 1e-6,
) -> RegularityReport:
    """Check that the generalized and ordinary directional derivatives agree.

    Every PwUni node is checked for convex kinks (left slope <= right slope at
    each breakpoint). Along each direction the generator support value is
    compared with a finite-difference one-sided quotient.
    """
    if len(dirs) == 0:
        raise ValueError("need at least one direction")
    x = _check(expr, x)
    kinks = []
    worst = 0.0
    for node_id, node in enumerate(iter_nodes(expr)):
        if isinstance(node, PwUni):
            for i in range(len(node.breaks)):
                left, right = node.slopes_at_break(i)
                if left > right + 1e-12 * max(1.0, abs(left)):
                    kinks.append((node_id, i, left, right))
                    worst = max(worst, left - right)
    gaps = []
    for d in dirs:
        d = as_point(d, x.shape[0])
        gap = abs(clarke_dir_deriv(expr, x, d, tol) - _fd_one_sided(expr, x, d, fd_step))
        gaps.append(gap)
    worst = max([worst] + gaps)
    return RegularityReport(
        passed=not kinks and all(g <= fd_tol for g in gaps),
        max_violation=worst,
        kink_violations=kinks,
        direction_gaps=gaps,
    )


# ---------------------------------------------------------------------------
# structural queries used by the solvers


def negate(expr: Expr) -> Expr:
    """-expr, for trees whose negation stays inside the grammar."""
    if isinstance(expr, Affine):
        return Affine(-expr.c, -expr.d0)
    if isinstance(expr, Quadratic):
        return Quadratic(-expr.Q, -expr.c, -expr.d0)
    if isinstance(expr, Sum):
        return Sum([(w, negate(ch)) for w, ch in expr.terms])
    if isinstance(expr, PwUni):
        return PwUni(expr.var, expr.breaks, [tuple(-c for c in p) for p in expr.pieces])
    raise ValueError(f"cannot negate a {type(expr).__name__} node inside the grammar")


def is_piecewise_linear(expr: Expr) -> bool:
    for node in iter_nodes(expr):
        if isinstance(node, Quadratic):
            return False
        if isinstance(node, PwUni) and any(len(p) > 2 and any(c != 0 for c in p[2:]) for p in node.pieces):
            return False
        if isinstance(node, Comp) and any(phi != "id" for _, phi, _ in node.terms):
            return False
    return True


def _piece_convex(p: Sequence[float], lo: float, hi: float) -> bool:
    c2 = p[2] if len(p) > 2 else 0.0
    c3 = p[3] if len(p) > 3 else 0.0
    if lo == -math.inf and c3 > 0:
        return False
    if hi == math.inf and c3 < 0:
        return False
    if lo == -math.inf and hi == math.inf and c3 != 0:
        return False
    ends = [t for t in (lo, hi) if math.isfinite(t)]
    if not ends:
        return c2 >= 0
    return all(2 * c2 + 6 * c3 * t >= -1e-12 for t in ends)


def is_convex(expr: Expr) -> bool:
    """Sufficient per-node convexity test for the grammar."""
    for node in iter_nodes(expr):
        if isinstance(node, Quadratic):
            if node.Q.size and np.min(np.linalg.eigvalsh(node.Q)) < -1e-10:
                return False
        elif isinstance(node, PwUni):
            ends = (-math.inf,) + node.breaks + (math.inf,)
            for k, p in enumerate(node.pieces):
                if not _piece_convex(p, ends[k], ends[k + 1]):
                    return False
            for i in range(len(node.breaks)):
                left, right = node.slopes_at_break(i)
                if left > right + 1e-12 * max(1.0, abs(left)):
                    return False
    return True
