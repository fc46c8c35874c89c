import json
import subprocess
import sys

import numpy as np
import pytest

from crsmdp.cli import main, run_counterexample
from crsmdp.evaluation import discounted_cost_infinite, rs_cost_finite
from crsmdp.files import load_policy, model_from_dict, model_to_dict, save_model
from crsmdp.fixtures import failure_model
from crsmdp.model import MdpModel, counterexample_model, random_model


@pytest.fixture
def appx_path(tmp_path):
    path = tmp_path / "counterexample.json"
    save_model(counterexample_model(), path)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_policy(tmp_path, rules, tail, name="policy.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"rules": rules, "tail": tail}))
    return str(path)


# -- solve ------------------------------------------------------------------------------------


def test_solve_lower_is_infeasible(capsys, appx_path):
    code, out, _ = run(capsys, "solve", "--model", appx_path, "--mode", "lower", "--horizon", "4")
    assert code == 2
    assert json.loads(out)["status"] == "infeasible"


def test_solve_upper_is_optimal(capsys, appx_path):
    code, out, _ = run(capsys, "solve", "--model", appx_path, "--mode", "upper", "--horizon", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "optimal"
    assert doc["feasibility"]["eps_feasibility"] <= 0.25


def test_solve_missing_model(capsys):
    code, _, err = run(capsys, "solve", "--mode", "upper", "--horizon", "4")
    assert code == 1
    assert "usage" in err


def test_solve_epsilon_picks_horizon(capsys, appx_path):
    code, out, _ = run(capsys, "solve", "--model", appx_path, "--mode", "upper", "--epsilon", "0.5")
    assert code == 0
    # K = 2, beta = 1/2, gamma = 1: K beta^T <= 0.25 needs T >= 3, but the RS
    # condition e^2 (exp(2^(1-T)) - 1) <= 0.25 needs T >= 6
    assert json.loads(out)["horizon"] == 6


def test_solve_sweep_in_order(capsys, appx_path):
    code, out, _ = run(capsys, "solve", "--model", appx_path, "--mode", "lower", "--sweep", "1..5")
    assert code == 2
    docs = json.loads(out)
    assert [d["horizon"] for d in docs] == [1, 2, 3, 4, 5]
    assert all(d["status"] == "infeasible" for d in docs)


def test_solve_pretty_and_out(capsys, appx_path, tmp_path):
    out_path = tmp_path / "report.txt"
    code, out, _ = run(capsys, "solve", "--model", appx_path, "--mode", "upper", "--sweep", "2..3",
                       "--pretty", "--out", str(out_path))
    assert code == 0 and out == ""
    lines = out_path.read_text().splitlines()
    assert lines[0].split()[:2] == ["T", "status"] and len(lines) == 3


def test_solve_layer_cap_error(capsys, tmp_path):
    path = tmp_path / "m.json"
    save_model(random_model(np.random.default_rng(1), 3, 3), path)
    code, _, err = run(capsys, "solve", "--model", str(path), "--mode", "upper", "--horizon", "4",
                       "--layer-cap", "5")
    assert code == 1 and "state budget exceeded" in err


def test_unreadable_model(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--model", str(tmp_path / "nope.json"), "--horizon", "2")
    assert code == 1 and err


def test_invalid_model_rows(capsys, tmp_path):
    doc = model_to_dict(counterexample_model())
    doc["transitions"] = [[[0.9], [1.0]]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "eval", "--model", str(path), "--policy", "uniform", "--horizon", "2")
    assert code == 1 and "sums to" in err


# -- eval -------------------------------------------------------------------------------------------


def test_eval_uniform_counterexample(capsys, appx_path):
    code, out, _ = run(capsys, "eval", "--model", appx_path, "--policy", "uniform", "--horizon", "5")
    assert code == 0
    doc = json.loads(out)
    c1 = doc["costs"]["C1"]
    assert abs(c1["discounted_infinite"]["value"] - 1.0) <= 1e-12
    assert c1["rs_infinite"]["radius"] <= 1e-9
    assert doc["lipschitz"]["delta"] == 0.75


def test_eval_zero_cost_model(capsys, tmp_path):
    P = np.full((2, 2, 2), 0.5)
    path = tmp_path / "zero.json"
    save_model(MdpModel(P, np.zeros((2, 2)), 0.5, 1.0), path)
    code, out, _ = run(capsys, "eval", "--model", str(path), "--policy", "uniform", "--horizon", "3")
    assert code == 0
    obj = json.loads(out)["costs"]["objective"]
    assert obj["discounted_finite"]["value"] == 0.0 and obj["discounted_infinite"]["value"] == 0.0
    assert obj["rs_finite"]["value"] == 1.0 and obj["rs_infinite"]["value"] == 1.0


def test_eval_oracle_dump(capsys, tmp_path):
    rng = np.random.default_rng(7)
    model = random_model(rng, 2, 2)
    path = tmp_path / "m.json"
    save_model(model, path)
    pol = write_policy(tmp_path, [[[0.2, 0.8], [0.6, 0.4]]], [[0.5, 0.5], [0.9, 0.1]])
    code, out, _ = run(capsys, "eval", "--model", str(path), "--policy", pol, "--horizon", "4", "--oracle")
    assert code == 0
    doc = json.loads(out)
    got, ref = doc["costs"]["objective"], doc["oracle"]["objective"]
    assert abs(got["rs_finite"]["value"] - ref["rs_finite"]) <= 1e-10
    assert abs(got["discounted_finite"]["value"] - ref["discounted_finite"]) <= 1e-12


def test_eval_bad_delta(capsys, appx_path):
    code, _, err = run(capsys, "eval", "--model", appx_path, "--policy", "uniform", "--horizon", "2",
                       "--delta", "0.3")
    assert code == 1 and "delta" in err


def test_eval_malformed_policy(capsys, appx_path, tmp_path):
    pol = write_policy(tmp_path, [], [[0.7, 0.7]])
    code, _, err = run(capsys, "eval", "--model", appx_path, "--policy", pol, "--horizon", "2")
    assert code == 1 and "sum to 1" in err


def test_eval_policy_shape_mismatch(capsys, appx_path, tmp_path):
    pol = write_policy(tmp_path, [], [[1.0], [1.0]])
    code, _, err = run(capsys, "eval", "--model", appx_path, "--policy", pol, "--horizon", "2")
    assert code == 1 and "does not match" in err


# -- check ----------------------------------------------------------------------------------------


def test_check_phi(capsys, appx_path):
    code, out, _ = run(capsys, "check", "--model", appx_path, "--policy", "uniform")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["h"]) <= 1e-12 and doc["verdict"]["feasible"]


def test_check_deterministic_a1(capsys, appx_path, tmp_path):
    pol = write_policy(tmp_path, [], [[1.0, 0.0]])
    code, out, _ = run(capsys, "check", "--model", appx_path, "--policy", pol, "--epsilon", "0.5")
    assert code == 2
    doc = json.loads(out)
    assert abs(doc["h"] - 1.0) <= 1e-12 and doc["eps_feasible"] is False
    code, out, _ = run(capsys, "check", "--model", appx_path, "--policy", pol, "--epsilon", "1.1")
    assert code == 0 and json.loads(out)["eps_feasible"] is True


def test_check_unconstrained(capsys, tmp_path):
    path = tmp_path / "free.json"
    save_model(random_model(np.random.default_rng(0), 2, 2), path)
    code, out, _ = run(capsys, "check", "--model", str(path), "--policy", "uniform")
    assert code == 0 and "no constraints" in out


def test_check_lower_mode(capsys, appx_path):
    code, out, _ = run(capsys, "check", "--model", appx_path, "--policy", "uniform", "--mode", "lower",
                       "--horizon", "3")
    assert code == 2
    assert json.loads(out)["verdict"]["feasible"] is False


# -- counterexample / selftest -----------------------------------------------------------------------


def test_counterexample_default(capsys):
    code, out, _ = run(capsys, "counterexample", "--pretty")
    assert code == 0
    lines = out.splitlines()
    assert sum("INFEASIBLE" in ln for ln in lines) == 8
    assert "slacks=(0, 0)" in out and "h=0" in out


def test_counterexample_upper(capsys):
    code, out, _ = run(capsys, "counterexample", "--mode", "upper")
    assert code == 0
    doc = json.loads(out)
    assert [r["status"] for r in doc["rows"]] == ["optimal"] * 8


def test_counterexample_horizon_zero(capsys):
    code, _, err = run(capsys, "counterexample", "--horizon", "0")
    assert code == 1 and "usage" in err


def test_run_counterexample_facts():
    doc = run_counterexample()
    assert doc["reproduced"]
    assert doc["phi"]["L"] == [1.0, 1.0]


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "3")
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_no_command(capsys):
    assert main([]) == 1


def test_unknown_flag_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--bogus"])
    assert exc.value.code == 1


# -- round trips ------------------------------------------------------------------------------------


def test_report_policy_round_trip(capsys, tmp_path):
    model = failure_model()
    mpath = tmp_path / "failure.json"
    save_model(model, mpath)
    rpath = tmp_path / "report.json"
    code, _, _ = run(capsys, "solve", "--model", str(mpath), "--mode", "upper", "--horizon", "5",
                     "--tail", "action:0", "--out", str(rpath))
    assert code == 0
    report = json.loads(rpath.read_text())
    policy = load_policy(rpath)
    x = model.initial_state
    got = rs_cost_finite(policy, model.objective_cost, 5, model)[x]
    assert abs(got - report["value"]) <= 1e-9
    # eval accepts the whole report as a policy file
    code, out, _ = run(capsys, "eval", "--model", str(mpath), "--policy", str(rpath), "--horizon", "5")
    assert code == 0
    ev = json.loads(out)
    assert abs(ev["costs"]["objective"]["rs_finite"]["value"] - report["value"]) <= 1e-9
    caution = discounted_cost_infinite(policy, model.constraints[0].cost, model)[x]
    assert ev["costs"]["caution"]["discounted_infinite"]["value"] == caution


def test_model_round_trip(tmp_path):
    model = failure_model()
    path = tmp_path / "m.json"
    save_model(model, path)
    back = model_from_dict(json.loads(path.read_text()))
    assert np.array_equal(back.transitions, model.transitions)
    assert back.constraints[1].bound == model.constraints[1].bound
    assert back.state_names == ("working", "failed")


def test_module_entry_point(appx_path):
    proc = subprocess.run([sys.executable, "-m", "crsmdp", "solve", "--model", appx_path,
                           "--mode", "lower", "--horizon", "2"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["status"] == "infeasible"
