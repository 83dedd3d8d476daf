import csv
import json
import subprocess
import sys

import pytest

from hnep.aggregative import compute_kappa_G, random_instance, save_instance
from hnep.cli import main


def read_trace(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_solve_zero_budget(tmp_path):
    code = main(["solve", "--seed", "1", "--algo", "fbf", "--max-iters", "0", "--out", str(tmp_path)])
    assert code == 2
    rows = read_trace(tmp_path / "trace_fbf.csv")
    assert rows[0] == ["n", "residual", "lambda"] + [f"fu_{i}" for i in range(1, 7)]
    assert len(rows) == 2 and rows[1][0] == "0"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["results"]["fbf"]["converged"] is False


def test_solve_fbf_converges_and_echoes_parameters(tmp_path):
    code = main(["solve", "--small", "closed_form", "--algo", "fbf", "--tol", "1e-10",
                 "--trace-every", "1", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    params = summary["parameters"]
    assert params["gamma"] == 0.25 and params["alpha"] == 0.75 and params["radius"] == 1e15
    assert params["lambda_scale"] == 1.0 and params["lambda_offset"] == 3.0
    assert params["max_iters"] == 100_000 and params["tol"] == 1e-10
    assert summary["instance"]["p"] == [2.0]
    fbf = summary["results"]["fbf"]
    assert abs(fbf["x"][0][0] - 1.0) <= 1e-8
    rows = read_trace(tmp_path / "trace_fbf.csv")[1:]
    ns = [int(r[0]) for r in rows]
    assert ns == sorted(set(ns)) and ns[-1] == fbf["iterations"]
    # full round-trip formatting
    assert float(rows[-1][1]) == fbf["final_residual"]


def test_solve_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["solve", "--seed", "4", "--algo", "compare", "--max-iters", "2000", "--out", str(out)])
        outs.append(out)
    for name in ("trace_fbf.csv", "trace_hsdm.csv", "summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_solve_from_instance_file(tmp_path):
    inst = tmp_path / "game.json"
    assert main(["generate", "--seed", "3", "--out", str(inst)]) == 0
    code = main(["solve", "--instance", str(inst), "--algo", "hsdm", "--max-iters", "50",
                 "--out", str(tmp_path / "o")])
    assert code == 2
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["parameters"]["instance"] == {"file": str(inst)}
    assert summary["parameters"]["start_seed"] == 3


def test_solve_errors(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert main(["solve", "--seed", "1", "--gamma", "0.5", "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["solve", "--instance", str(bad), "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_check_generated_instances(seed, tmp_path):
    assert main(["check", "--seed", str(seed), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "check.json").read_text())
    assert doc["all_passed"]
    names = {c["name"] for c in doc["checks"]}
    assert {"adjoint", "lipschitz_bound", "lower_monotone", "lower_gradient",
            "upper_gradient", "gamma_admissible"} <= names


def test_check_invalid_instance(tmp_path):
    doc = random_instance(0).to_dict()
    doc["a"][0][0], doc["b"][0][0] = 5.0, 1.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["check", "--instance", str(path)]) == 1


def test_check_tampered_kappa(tmp_path, capsys):
    g = random_instance(0)
    doc = g.to_dict()
    doc["kappa_G"] = compute_kappa_G(g) / 2
    path = tmp_path / "tampered.json"
    path.write_text(json.dumps(doc))
    assert main(["check", "--instance", str(path), "--out", str(tmp_path)]) == 3
    assert "lipschitz_bound" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hnep.cli", "check", "--small", "segment"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["all_passed"]
