"""Command-line entry point.

Exit codes: 0 success, 1 infeasible/unbounded/not converged/no KKT point,
2 bad input, 3 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import nsfunc
from .errors import (
    BaseUnsolved,
    DimensionMismatch,
    NoKktPoint,
    ShadowPriceError,
    UnboundedMultipliers,
)
from .pricing import dual_ascent
from .schema import SchemaError, canonical, load_problem, load_scenario
from .shadow import DEFAULT_DELTAS, multipliers_at, verify_constraint
from .solver import METHODS, solve

OK, FAILED, BAD_INPUT, VERIFY_FAILED = 0, 1, 2, 3


class BadInput(Exception):
    pass


def _csv_floats(text: str, what: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise BadInput(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise BadInput(f"{what}: empty list")
    return np.array(vals)


def _point(text: str, n: int, what: str) -> np.ndarray:
    x = _csv_floats(text, what)
    if x.shape[0] != n:
        raise BadInput(f"{what} has {x.shape[0]} entries, problem has {n} variables")
    return x


def _flat_csv(d: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("key", "value"))

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}.{k}" if prefix else k, v[k])
        elif isinstance(v, list):
            for i, t in enumerate(v):
                walk(f"{prefix}[{i}]", t)
        else:
            w.writerow((prefix, "" if v is None else repr(v) if isinstance(v, float) else v))

    walk("", d)
    return buf.getvalue()


def _emit(args, doc: dict, csv_text: str | None = None):
    if args.format == "csv":
        sys.stdout.write(csv_text if csv_text is not None else _flat_csv(doc))
    else:
        sys.stdout.write(canonical(doc))


def _solve_kw(args) -> dict:
    if args.method == "subgrad":
        return {"seed": args.seed}
    if args.method == "grid" and getattr(args, "box", None) is not None:
        return {"ranges": [(-args.box, args.box)] * args.n}
    return {}


def cmd_eval(args) -> int:
    p = load_problem(args.problem)
    x = _point(args.point, p.n, "--point")
    f = p.objective
    out = {"point": [float(v) for v in x], "value": nsfunc.evaluate(f, x)}
    if args.dir is not None:
        d = _point(args.dir, p.n, "--dir")
        out["direction"] = [float(v) for v in d]
        out["dir_deriv"] = nsfunc.dir_deriv(f, x, d)
        out["clarke_dir_deriv"] = nsfunc.clarke_dir_deriv(f, x, d)
    _emit(args, out)
    return OK


def cmd_solve(args) -> int:
    p = load_problem(args.problem)
    args.n = p.n
    sol = solve(p, args.method, **_solve_kw(args))
    _emit(args, sol.to_dict())
    return OK if sol.ok else FAILED


def cmd_multipliers(args) -> int:
    p = load_problem(args.problem)
    if args.point is not None:
        x = _point(args.point, p.n, "--point")
    else:
        sol = solve(p, args.method, **_solve_kw(args))
        if not sol.ok:
            print(f"error: base problem is {sol.status}", file=sys.stderr)
            return FAILED
        x = sol.x
    out = {"point": [float(v) for v in x]}
    out.update(multipliers_at(p, x).to_dict())
    _emit(args, out)
    return OK


def cmd_verify(args) -> int:
    p = load_problem(args.problem)
    if not 0 <= args.constraint < len(p.constraints):
        raise BadInput(f"--constraint {args.constraint} out of range (problem has {len(p.constraints)})")
    deltas = DEFAULT_DELTAS if args.deltas is None else tuple(_csv_floats(args.deltas, "--deltas"))
    report = verify_constraint(
        p,
        args.constraint,
        deltas,
        args.method,
        lam=args.lam,
        lam_max=args.lam_max,
        tail=args.tail,
        tol=args.tol,
        **_solve_kw(args),
    )
    _emit(args, report.to_dict(), report.to_csv())
    return OK if report.passed else VERIFY_FAILED


def cmd_price(args) -> int:
    sc = load_scenario(args.scenario)
    res = dual_ascent(sc, alpha0=args.alpha0, max_iter=args.max_iter)
    _emit(args, res.to_dict())
    return OK if res.converged else FAILED


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    def common(defaults: bool) -> argparse.ArgumentParser:
        p = argparse.ArgumentParser(add_help=False)
        d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        p.add_argument("--format", choices=("json", "csv"), default=d("json"))
        p.add_argument("--tol", type=float, default=d(1e-6), help="verification tolerance")
        p.add_argument("--seed", type=int, default=d(0), help="seed for randomised solvers")
        return p

    ap = argparse.ArgumentParser(prog="shadowprice", description=__doc__.splitlines()[0], parents=[common(True)])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", parents=[common(False)], help="value and directional derivatives at a point")
    s.add_argument("--problem", required=True)
    s.add_argument("--point", required=True, help="comma-separated coordinates")
    s.add_argument("--dir", help="comma-separated direction (use --dir=-1,0 for a leading minus)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("solve", parents=[common(False)], help="solve a problem")
    s.add_argument("--problem", required=True)
    s.add_argument("--method", choices=METHODS, default="lp")
    s.add_argument("--box", type=float, help="grid search half-width when the problem has no finite bounds")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("multipliers", parents=[common(False)], help="multiplier sets at a point or at the optimum")
    s.add_argument("--problem", required=True)
    s.add_argument("--point")
    s.add_argument("--method", choices=METHODS, default="lp")
    s.set_defaults(func=cmd_multipliers)

    s = sub.add_parser("verify", parents=[common(False)], help="perturb a constraint and check the shadow-price bounds")
    s.add_argument("--problem", required=True)
    s.add_argument("--constraint", type=int, required=True)
    s.add_argument("--deltas", help="comma-separated perturbations (default 1e-1..1e-4)")
    s.add_argument("--lambda", dest="lam", type=float, help="multiplier for the relaxation bound")
    s.add_argument("--lambda-max", dest="lam_max", type=float, help="multiplier for the tightening bound")
    s.add_argument("--tail", type=int, default=3)
    s.add_argument("--method", choices=METHODS, default="lp")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("price", parents=[common(False)], help="clearing price by dual ascent")
    s.add_argument("--scenario", required=True)
    s.add_argument("--alpha0", type=float, default=1.0)
    s.add_argument("--max-iter", type=int, default=20_000)
    s.set_defaults(func=cmd_price)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return BAD_INPUT if e.code else OK
    try:
        return args.func(args)
    except (BaseUnsolved, NoKktPoint, UnboundedMultipliers) as e:
        print(f"error: {e}", file=sys.stderr)
        return FAILED
    except (BadInput, SchemaError, DimensionMismatch, OSError, ValueError, ShadowPriceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
