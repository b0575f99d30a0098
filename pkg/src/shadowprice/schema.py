"""JSON documents for expressions, problems and pricing scenarios.

Infinite bounds are written as ``null``. Every node is rebuilt through its
constructor on load, so all structural checks run again.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .kkt import LinearConstraint
from .nsfunc import Affine, Comp, Expr, Max, PwUni, Quadratic, Sum
from .pricing import PLCost, ProviderSpec, QuadraticCost, Scenario, UserSpec
from .solver import Problem


class SchemaError(ValueError):
    """A document does not describe a valid object."""


def _num(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{what}: expected a number, got {v!r}")
    return float(v)


def _nums(v, what: str) -> list[float]:
    if not isinstance(v, list):
        raise SchemaError(f"{what}: expected a list of numbers")
    return [_num(t, what) for t in v]


def _obj(d, keys: set[str], what: str, optional: set[str] = frozenset()) -> dict:
    if not isinstance(d, dict):
        raise SchemaError(f"{what}: expected an object")
    missing = keys - d.keys()
    extra = d.keys() - keys - optional
    if missing:
        raise SchemaError(f"{what}: missing {sorted(missing)}")
    if extra:
        raise SchemaError(f"{what}: unknown fields {sorted(extra)}")
    return d


_EXPR_FIELDS = {
    "affine": ({"c"}, {"d0"}),
    "quadratic": ({"Q", "c"}, {"d0"}),
    "max": ({"children"}, set()),
    "sum": ({"terms"}, set()),
    "pwuni": ({"var", "breaks", "pieces"}, set()),
    "comp": ({"c0", "terms"}, set()),
}


def expr_from_json(d) -> Expr:
    if not isinstance(d, dict) or "type" not in d:
        raise SchemaError("expression node needs a 'type' tag")
    tag = d["type"]
    if tag not in _EXPR_FIELDS:
        raise SchemaError(f"unknown expression type {tag!r}")
    req, opt = _EXPR_FIELDS[tag]
    _obj(d, req | {"type"}, tag, opt)
    try:
        if tag == "affine":
            return Affine(np.array(_nums(d["c"], "affine.c")), _num(d.get("d0", 0.0), "affine.d0"))
        if tag == "quadratic":
            if not isinstance(d["Q"], list):
                raise SchemaError("quadratic.Q: expected a matrix")
            Q = np.array([_nums(r, "quadratic.Q") for r in d["Q"]])
            return Quadratic(Q, np.array(_nums(d["c"], "quadratic.c")), _num(d.get("d0", 0.0), "quadratic.d0"))
        if tag == "max":
            if not isinstance(d["children"], list):
                raise SchemaError("max.children: expected a list")
            return Max([expr_from_json(ch) for ch in d["children"]])
        if tag == "sum":
            if not isinstance(d["terms"], list):
                raise SchemaError("sum.terms: expected a list")
            terms = [_obj(t, {"w", "child"}, "sum term") for t in d["terms"]]
            return Sum([(_num(t["w"], "sum.w"), expr_from_json(t["child"])) for t in terms])
        if tag == "pwuni":
            var = d["var"]
            if isinstance(var, bool) or not isinstance(var, int):
                raise SchemaError("pwuni.var: expected an integer")
            if not isinstance(d["pieces"], list):
                raise SchemaError("pwuni.pieces: expected a list")
            return PwUni(var, _nums(d["breaks"], "pwuni.breaks"), [_nums(p, "pwuni.pieces") for p in d["pieces"]])
        if not isinstance(d["terms"], list):
            raise SchemaError("comp.terms: expected a list")
        terms = [_obj(t, {"c", "phi", "child"}, "comp term") for t in d["terms"]]
        return Comp(_num(d["c0"], "comp.c0"), [(_num(t["c"], "comp.c"), t["phi"], expr_from_json(t["child"])) for t in terms])
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError(f"{tag}: {e}") from e


def _floats(a) -> list[float]:
    return [float(v) for v in np.ravel(a)]


def expr_to_json(e: Expr) -> dict:
    if isinstance(e, Affine):
        return {"type": "affine", "c": _floats(e.c), "d0": e.d0}
    if isinstance(e, Quadratic):
        return {"type": "quadratic", "Q": [_floats(r) for r in e.Q], "c": _floats(e.c), "d0": e.d0}
    if isinstance(e, Max):
        return {"type": "max", "children": [expr_to_json(ch) for ch in e.children()]}
    if isinstance(e, Sum):
        return {"type": "sum", "terms": [{"w": w, "child": expr_to_json(ch)} for w, ch in e.terms]}
    if isinstance(e, PwUni):
        return {"type": "pwuni", "var": e.var, "breaks": list(e.breaks), "pieces": [list(p) for p in e.pieces]}
    if isinstance(e, Comp):
        return {
            "type": "comp",
            "c0": e.c0,
            "terms": [{"c": c, "phi": phi, "child": expr_to_json(ch)} for c, phi, ch in e.terms],
        }
    raise TypeError(f"cannot serialise {type(e).__name__}")


def _bound(v, what, default):
    if v is None:
        return default
    return _num(v, what)


def problem_from_json(d) -> Problem:
    _obj(d, {"vars", "objective", "constraints"}, "problem", {"sense", "bounds"})
    n = d["vars"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SchemaError("problem.vars: expected a positive integer")
    if not isinstance(d["constraints"], list):
        raise SchemaError("problem.constraints: expected a list")
    try:
        cs = []
        for c in d["constraints"]:
            c = _obj(c, {"a", "b"}, "constraint")
            cs.append(LinearConstraint(np.array(_nums(c["a"], "constraint.a")), _num(c["b"], "constraint.b")))
        lower = upper = None
        if d.get("bounds") is not None:
            bs = d["bounds"]
            if not isinstance(bs, list) or len(bs) != n:
                raise SchemaError(f"problem.bounds: expected {n} entries")
            bs = [_obj(b, set(), "bound", {"lo", "hi"}) for b in bs]
            lower = [_bound(b.get("lo"), "bound.lo", -math.inf) for b in bs]
            upper = [_bound(b.get("hi"), "bound.hi", math.inf) for b in bs]
        return Problem(expr_from_json(d["objective"]), cs, n, d.get("sense", "min"), lower, upper)
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError(f"problem: {e}") from e


def _inf_to_null(v: float):
    return None if math.isinf(v) else float(v)


def problem_to_json(p: Problem) -> dict:
    out = {
        "vars": p.n,
        "sense": p.sense,
        "objective": expr_to_json(p.objective),
        "constraints": [{"a": _floats(c.a), "b": c.b} for c in p.constraints],
    }
    if p.has_bounds:
        out["bounds"] = [{"lo": _inf_to_null(lo), "hi": _inf_to_null(hi)} for lo, hi in zip(p.lower, p.upper)]
    return out


def user_from_json(d) -> UserSpec:
    _obj(d, {"id", "breaks", "cap"}, "user", {"slopes", "pieces"})
    if ("slopes" in d) == ("pieces" in d):
        raise SchemaError("user: give exactly one of 'slopes' or 'pieces'")
    try:
        breaks = _nums(d["breaks"], "user.breaks")
        cap = _num(d["cap"], "user.cap")
        if "slopes" in d:
            return UserSpec.from_slopes(str(d["id"]), breaks, _nums(d["slopes"], "user.slopes"), cap)
        if not isinstance(d["pieces"], list):
            raise SchemaError("user.pieces: expected a list")
        return UserSpec(str(d["id"]), PwUni(0, breaks, [_nums(p, "user.pieces") for p in d["pieces"]]), cap)
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError(f"user {d['id']}: {e}") from e


def user_to_json(u: UserSpec) -> dict:
    out = {"id": u.id, "breaks": list(u.utility.breaks), "cap": u.cap}
    pieces = u.utility.pieces
    if all(len(p) <= 2 or not any(p[2:]) for p in pieces):
        out["slopes"] = [p[1] if len(p) > 1 else 0.0 for p in pieces]
    else:
        out["pieces"] = [list(p) for p in pieces]
    return out


def scenario_from_json(d) -> Scenario:
    _obj(d, {"users", "provider"}, "scenario")
    if not isinstance(d["users"], list) or not d["users"]:
        raise SchemaError("scenario.users: expected a nonempty list")
    users = [user_from_json(u) for u in d["users"]]
    pv = _obj(d["provider"], {"cost", "capacity"}, "provider")
    cost = pv["cost"]
    try:
        if isinstance(cost, dict) and "pl" in cost:
            _obj(cost, {"pl"}, "provider.cost")
            pl = _obj(cost["pl"], {"breaks", "slopes"}, "provider.cost.pl")
            C = PLCost(_nums(pl["breaks"], "pl.breaks"), _nums(pl["slopes"], "pl.slopes"))
        else:
            _obj(cost, set(), "provider.cost", {"c2", "c1"})
            C = QuadraticCost(_num(cost.get("c2", 0.0), "cost.c2"), _num(cost.get("c1", 0.0), "cost.c1"))
        return Scenario(tuple(users), ProviderSpec(C, _num(pv["capacity"], "provider.capacity")))
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError(f"scenario: {e}") from e


def scenario_to_json(sc: Scenario) -> dict:
    C = sc.provider.cost
    if isinstance(C, PLCost):
        cost = {"pl": {"breaks": list(C.breaks), "slopes": list(C.slopes)}}
    else:
        cost = {"c2": C.c2, "c1": C.c1}
    return {
        "users": [user_to_json(u) for u in sc.users],
        "provider": {"cost": cost, "capacity": sc.provider.capacity},
    }


def canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _load(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from e


def load_problem(path) -> Problem:
    return problem_from_json(_load(path))


def load_scenario(path) -> Scenario:
    return scenario_from_json(_load(path))
