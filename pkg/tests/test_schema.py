import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowprice.instances import random_convex_pl
from shadowprice.nsfunc import Affine, Comp, Max, PwUni, Quadratic, Sum, evaluate
from shadowprice.schema import (
    SchemaError,
    canonical,
    expr_from_json,
    expr_to_json,
    load_problem,
    load_scenario,
    problem_from_json,
    problem_to_json,
    scenario_from_json,
    scenario_to_json,
)


def every_node_kind():
    return Sum(
        [
            (1.0, Max([Affine([1.0, 2.0], 0.5), Quadratic(np.eye(2), [0.0, 1.0], -1.0)])),
            (0.5, PwUni(1, [0.0], [(0.0, -1.0), (0.0, 2.0, 0.5)])),
            (2.0, Comp(0.1, [(1.0, "exp", Affine([0.1, 0.0])), (1.0, "sq+", Affine([0.0, 0.0], 1.0))])),
        ]
    )


def test_expression_round_trip(rng):
    e = every_node_kind()
    doc = expr_to_json(e)
    e2 = expr_from_json(json.loads(json.dumps(doc)))
    assert expr_to_json(e2) == doc
    for x in rng.normal(size=(10, 2)):
        assert evaluate(e2, x) == evaluate(e, x)


def test_unknown_tag_rejected():
    with pytest.raises(SchemaError):
        expr_from_json({"type": "min", "children": []})
    with pytest.raises(SchemaError):
        expr_from_json({"type": "affine", "c": [1.0], "extra": 1})


def test_invariants_rechecked_on_load():
    with pytest.raises(SchemaError):
        expr_from_json({"type": "pwuni", "var": 0, "breaks": [0.0], "pieces": [[0.0, 1.0], [1.0, 1.0]]})
    with pytest.raises(SchemaError):
        expr_from_json({"type": "sum", "terms": [{"w": -1.0, "child": {"type": "affine", "c": [1.0]}}]})
    with pytest.raises(SchemaError):
        expr_from_json({"type": "affine", "c": ["x"]})


def test_problem_bounds_null_is_infinite():
    doc = {
        "vars": 2,
        "objective": {"type": "affine", "c": [1.0, 1.0]},
        "constraints": [],
        "bounds": [{"lo": 0.0, "hi": None}, {"lo": None, "hi": 1.0}],
    }
    p = problem_from_json(doc)
    assert p.lower[1] == -np.inf and p.upper[0] == np.inf
    assert problem_to_json(p)["bounds"] == doc["bounds"]


def test_problem_dimension_errors():
    doc = {"vars": 2, "objective": {"type": "affine", "c": [1.0]}, "constraints": []}
    with pytest.raises(SchemaError):
        problem_from_json(doc)
    doc = {"vars": 1, "objective": {"type": "affine", "c": [1.0]}, "constraints": [{"a": [0.0], "b": 1.0}]}
    with pytest.raises(SchemaError):
        problem_from_json(doc)


@given(st.integers(0, 2**32 - 1))
def test_serialisation_idempotent(seed):
    rng = np.random.default_rng(seed)
    p = random_convex_pl(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    once = canonical(problem_to_json(problem_from_json(json.loads(canonical(problem_to_json(p))))))
    twice = canonical(problem_to_json(problem_from_json(json.loads(once))))
    assert once == twice


def test_fixtures_are_canonical(fixtures_dir):
    for path in sorted(fixtures_dir.glob("*.json")):
        text = path.read_text()
        doc = json.loads(text)
        if "users" in doc:
            again = canonical(scenario_to_json(load_scenario(path)))
        else:
            again = canonical(problem_to_json(load_problem(path)))
        assert again == text, path.name


def test_scenario_variants():
    doc = {
        "users": [
            {"id": "a", "breaks": [1.0], "slopes": [4.0, 2.0], "cap": 2.0},
            {"id": "b", "breaks": [], "pieces": [[0.0, 4.0, -1.0]], "cap": 2.0},
        ],
        "provider": {"cost": {"pl": {"breaks": [1.0], "slopes": [1.0, 2.0]}}, "capacity": 3.0},
    }
    sc = scenario_from_json(doc)
    assert scenario_to_json(sc) == doc
    with pytest.raises(SchemaError):
        scenario_from_json({**doc, "users": [{"id": "c", "breaks": [], "cap": 1.0}]})
    with pytest.raises(SchemaError):
        scenario_from_json({**doc, "provider": {"cost": {"c3": 1.0}, "capacity": 1.0}})


def test_malformed_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemaError):
        load_problem(bad)
