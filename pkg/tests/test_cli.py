import json
import subprocess
import sys

import pytest

from shadowprice.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def ex1(fixtures_dir):
    return str(fixtures_dir / "example1.json")


def test_eval_direction(capsys, ex1):
    code, out, _ = run(capsys, "eval", "--problem", ex1, "--point", "0", "--dir=-1")
    doc = json.loads(out)
    assert code == 0 and doc["value"] == 0.0 and doc["dir_deriv"] == -1.0 and doc["clarke_dir_deriv"] == -1.0


def test_eval_value(capsys, ex1):
    code, out, _ = run(capsys, "eval", "--problem", ex1, "--point", "1")
    assert code == 0 and json.loads(out)["value"] == 2.0


def test_eval_bad_inputs(capsys, ex1, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code, _, err = run(capsys, "eval", "--problem", str(bad), "--point", "0")
    assert code == 2 and err.count("\n") == 1
    assert run(capsys, "eval", "--problem", ex1, "--point", "0,1")[0] == 2
    assert run(capsys, "eval", "--problem", ex1, "--point", "abc")[0] == 2
    assert run(capsys, "eval", "--problem", str(tmp_path / "missing.json"), "--point", "0")[0] == 2


def test_solve(capsys, ex1, fixtures_dir):
    code, out, _ = run(capsys, "solve", "--problem", ex1)
    assert code == 0 and json.loads(out)["x"] == [0.0]
    code, out, _ = run(capsys, "solve", "--problem", str(fixtures_dir / "infeasible.json"))
    assert code == 1 and json.loads(out)["status"] == "infeasible"
    assert run(capsys, "solve", "--problem", ex1, "--method", "grid")[0] == 2
    code, out, _ = run(capsys, "solve", "--problem", ex1, "--method", "grid", "--box", "3")
    assert code == 0 and json.loads(out)["value"] == 0.0


def test_solve_method_mismatch_is_bad_input(capsys, tmp_path):
    doc = {"vars": 1, "objective": {"type": "quadratic", "Q": [[1.0]], "c": [0.0]}, "constraints": []}
    path = tmp_path / "q.json"
    path.write_text(json.dumps(doc))
    assert run(capsys, "solve", "--problem", str(path))[0] == 2


def test_subgradient_seed_reproducible(capsys, ex1):
    a = run(capsys, "--seed", "4", "solve", "--problem", ex1, "--method", "subgrad")
    b = run(capsys, "solve", "--problem", ex1, "--method", "subgrad", "--seed", "4")
    assert a == b and a[0] == 0


def test_multipliers(capsys, ex1, fixtures_dir):
    code, out, _ = run(capsys, "multipliers", "--problem", ex1)
    doc = json.loads(out)
    assert code == 0 and doc["intervals"] == [{"hi": 2.0, "lo": 1.0}] and doc["min_multipliers"] == [1.0]
    assert doc["kkt_residual"] == 0.0


def test_multipliers_slack_and_no_kkt(capsys, tmp_path):
    doc = {
        "vars": 1,
        "objective": {"type": "max", "children": [{"type": "affine", "c": [1.0]}, {"type": "affine", "c": [2.0]}]},
        "constraints": [{"a": [-1.0], "b": 0.0}, {"a": [1.0], "b": 5.0}],
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "multipliers", "--problem", str(path))
    assert code == 0 and json.loads(out)["intervals"][1] == {"hi": 0.0, "lo": 0.0}
    # x = 5 is feasible but not stationary
    assert run(capsys, "multipliers", "--problem", str(path), "--point", "5")[0] == 1


def test_multipliers_infeasible_base(capsys, fixtures_dir):
    assert run(capsys, "multipliers", "--problem", str(fixtures_dir / "infeasible.json"))[0] == 1


def test_verify_pass_and_fail(capsys, ex1):
    code, out, _ = run(capsys, "verify", "--problem", ex1, "--constraint", "0", "--deltas", "0.1,0.01,0.001")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "PASS"
    assert [r["quotient"] for r in doc["rows"]] == [1.0, 1.0, 1.0]
    code, out, _ = run(
        capsys, "verify", "--problem", ex1, "--constraint", "0", "--deltas", "0.1,0.01,0.001", "--lambda", "0.5"
    )
    assert code == 3 and json.loads(out)["verdict"] == "FAIL"


def test_verify_csv_rows(capsys, ex1):
    code, out, _ = run(
        capsys, "--format", "csv", "verify", "--problem", ex1, "--constraint", "0", "--deltas", "0.1,0.01,0.001,1e-4"
    )
    lines = out.splitlines()
    assert code == 0 and lines[0] == "delta_b,value,delta_f,quotient,lambda_ref,verdict" and len(lines) == 5


def test_verify_bad_inputs(capsys, ex1):
    assert run(capsys, "verify", "--problem", ex1, "--constraint", "3")[0] == 2
    assert run(capsys, "verify", "--problem", ex1, "--constraint", "0", "--deltas", "0.1,0.01")[0] == 2
    assert run(capsys, "verify", "--problem", ex1, "--constraint", "0", "--deltas", "0,0.1")[0] == 2


def test_verify_tolerance_flag(capsys, ex1):
    args = ["verify", "--problem", ex1, "--constraint", "0", "--deltas", "0.1,0.01,0.001", "--lambda", "0.9"]
    assert run(capsys, *args)[0] == 3
    assert run(capsys, "--tol", "0.2", *args)[0] == 0


def test_price(capsys, fixtures_dir):
    code, out, _ = run(capsys, "price", "--scenario", str(fixtures_dir / "desk_scenario.json"))
    doc = json.loads(out)
    assert code == 0 and doc["converged"] and 2.0 <= doc["price"] <= 3.0
    code, out, _ = run(capsys, "price", "--scenario", str(fixtures_dir / "slack_capacity.json"))
    assert json.loads(out)["price"] == pytest.approx(0.0, abs=1e-3)
    code, out, _ = run(capsys, "price", "--scenario", str(fixtures_dir / "single_user_binding.json"))
    assert json.loads(out)["price"] == pytest.approx(3.0, abs=1e-3)


def test_price_not_converged_and_bad(capsys, fixtures_dir, ex1):
    desk = str(fixtures_dir / "desk_scenario.json")
    assert run(capsys, "price", "--scenario", desk, "--max-iter", "10")[0] == 1
    assert run(capsys, "price", "--scenario", ex1)[0] == 2


def test_price_csv(capsys, fixtures_dir):
    code, out, _ = run(capsys, "--format", "csv", "price", "--scenario", str(fixtures_dir / "desk_scenario.json"))
    assert code == 0 and out.splitlines()[0] == "key,value" and "price," in out


def test_usage_errors(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "--help")[0] == 0


def test_console_script(fixtures_dir):
    r = subprocess.run(
        [sys.executable, "-m", "shadowprice.cli", "multipliers", "--problem", str(fixtures_dir / "example1.json")],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0 and json.loads(r.stdout)["min_multipliers"] == [1.0]
