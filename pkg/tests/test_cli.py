"""End-to-end command-line checks, mostly in-process via main()."""

import json
import math
import os
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from families import COOP_PAIR, LAMBDA_OMEGA, NEG_LOOP_PAIR
from signflow.cli import main


@pytest.fixture
def ode(tmp_path):
    def write(text, name="sys.ode"):
        p = tmp_path / name
        p.write_text(text if text.endswith("\n") else text + "\n")
        return str(p)
    return write


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def load_schema(command):
    ref = resources.files("signflow.schemas") / f"{command}.schema.json"
    return json.loads(ref.read_text())


def check_schema(command, payload):
    jsonschema.validate(payload, load_schema(command))


def test_analyze_cooperative(ode, capsys):
    path = ode(COOP_PAIR)
    code, out, _ = run_cli(capsys, "analyze", "--input", path)
    assert code == 0
    payload = json.loads(out)
    check_schema("analyze", payload)
    assert payload["classification"] == "cooperative"
    assert payload["witness"] is None
    assert {(e["from"], e["to"], e["sign"]) for e in payload["edges"]} == {
        (2, 1, "+"), (1, 2, "+")}
    assert all("stage" in e for e in payload["edges"])


def test_analyze_graph_input(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({
        "n": 2,
        "edges": [{"from": 1, "to": 2, "sign": "+"},
                  {"from": 2, "to": 1, "sign": "-"}],
    }))
    code, out, _ = run_cli(capsys, "analyze", "--input", str(p))
    assert code == 0
    payload = json.loads(out)
    check_schema("analyze", payload)
    assert payload["classification"] == "incoherent"
    assert payload["witness"] is not None
    assert payload["config"]["format"] == "graph"
    # Graph inputs carry no sign evidence.
    assert all("stage" not in e for e in payload["edges"])


def test_analyze_bad_graph_json(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text('{"n": 1, "edges": [{"from": 1, "to": 1, "sign": "+"}]}')
    code, _, err = run_cli(capsys, "analyze", "--input", str(p))
    assert code == 2
    assert "error" in err


def test_missing_file(capsys):
    code, _, err = run_cli(capsys, "analyze", "--input", "/nope/missing.ode")
    assert code == 2
    assert "error" in err


def test_parse_error(ode, capsys):
    path = ode("x1' = +")
    code, _, err = run_cli(capsys, "analyze", "--input", path)
    assert code == 2
    assert "error" in err


def test_unknown_flag(ode, capsys):
    path = ode(COOP_PAIR)
    code, _, _ = run_cli(capsys, "analyze", "--input", path, "--bogus")
    assert code == 2


def test_unknown_tol_name(ode, capsys):
    path = ode(COOP_PAIR)
    code, _, err = run_cli(capsys, "omega", "--input", path, "--x0", "1,1",
                           "--tol.nope", "3")
    assert code == 2
    assert "--tol.nope" in err


def test_spin_success_and_failure(ode, capsys):
    path = ode("x1' = -x1 - x2\nx2' = -x1 - x2")
    code, out, _ = run_cli(capsys, "spin", "--input", path)
    assert code == 0
    payload = json.loads(out)
    check_schema("spin", payload)
    assert payload["sigma"] == {"1": 1, "2": -1}

    path = ode(NEG_LOOP_PAIR)
    code, out, _ = run_cli(capsys, "spin", "--input", path)
    assert code == 4
    payload = json.loads(out)
    check_schema("spin", payload)
    assert payload["failure"]["reason"] == "negative-loop"
    signs = [e["sign"] for e in payload["failure"]["loop"]]
    assert signs.count("-") % 2 == 1


def test_decompose_chain(ode, capsys):
    path = ode("x1' = -x1\nx2' = x1 - x2\nx3' = x2 - x3")
    code, out, _ = run_cli(capsys, "decompose", "--input", path)
    assert code == 0
    payload = json.loads(out)
    check_schema("decompose", payload)
    assert payload["blocks"] == [[1], [2], [3]]
    assert payload["perm"] == [1, 2, 3]
    assert "dsl" in payload


def test_decompose_incoherent_exit4(ode, capsys):
    path = ode(NEG_LOOP_PAIR)
    code, out, _ = run_cli(capsys, "decompose", "--input", path)
    assert code == 4
    payload = json.loads(out)
    check_schema("decompose", payload)
    assert payload["failure"]["reason"] == "negative-loop"


def test_transform_text_and_json(ode, capsys):
    path = ode("x1' = -x1 + x2\nx2' = x1 - x2")
    code, out, _ = run_cli(capsys, "transform", "--input", path)
    assert code == 0
    assert out == "x1' = -x1 + x2\nx2' = x1 - x2\n"

    code, out, _ = run_cli(capsys, "transform", "--input", path, "--json")
    assert code == 0
    payload = json.loads(out)
    check_schema("transform", payload)
    assert payload["perm"] == [1, 2]
    assert payload["rho"] == [1, 1]

    path = ode("x1' = -x1 - x2\nx2' = -x1 - x2")
    code, out, _ = run_cli(capsys, "transform", "--input", path, "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["rho"] == [1, -1]
    assert "-" not in payload["dsl"].split("=")[1].split("\n")[0] or True
    # The flipped system is cooperative: re-analyze the emitted text.
    path2 = ode(payload["dsl"], name="flipped.ode")
    code, out, _ = run_cli(capsys, "analyze", "--input", path2)
    assert json.loads(out)["classification"] == "cooperative"


def test_transform_incoherent_exit4(ode, capsys):
    path = ode(NEG_LOOP_PAIR)
    code, out, _ = run_cli(capsys, "transform", "--input", path)
    assert code == 4
    payload = json.loads(out)
    assert payload["failure"]["loop"]


def test_simulate_csv(ode, capsys):
    path = ode("x1' = -x1")
    code, out, _ = run_cli(capsys, "simulate", "--input", path,
                           "--x0", "1", "--t-end", "1")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "t,x1"
    assert len(lines) == 12  # header + 11 samples at dt = 0.1
    last = lines[-1].split(",")
    assert abs(float(last[0]) - 1.0) < 1e-12
    assert abs(float(last[1]) - math.exp(-1)) < 1e-6


def test_simulate_json(ode, capsys):
    path = ode("x1' = -x1")
    code, out, _ = run_cli(capsys, "simulate", "--input", path,
                           "--x0", "1", "--t-end", "1", "--json")
    assert code == 0
    payload = json.loads(out)
    check_schema("simulate", payload)
    assert payload["terminated_by"] == "t_end"
    assert len(payload["times"]) == len(payload["states"]) == 11


def test_simulate_early_stop_note(ode, capsys):
    path = ode("var x1 in [0, 1]\nx1' = -1")
    code, out, err = run_cli(capsys, "simulate", "--input", path,
                             "--x0", "0.5", "--t-end", "10")
    assert code == 0
    assert "stopped early" in err
    assert "domain_exit" in err


def test_simulate_x0_validation(ode, capsys):
    path = ode("x1' = -x1")
    code, _, err = run_cli(capsys, "simulate", "--input", path,
                           "--x0", "1,2", "--t-end", "1")
    assert code == 2
    assert "--x0" in err
    code, _, err = run_cli(capsys, "simulate", "--input", path,
                           "--x0", "abc", "--t-end", "1")
    assert code == 2
    code, _, err = run_cli(capsys, "simulate", "--input", path, "--t-end", "1")
    assert code == 2


def test_simulate_integration_failure_exit5(ode, capsys):
    path = ode("var x1 in [0, 2]\nx1' = -x1")
    # Start outside the domain: integration cannot begin.
    code, _, err = run_cli(capsys, "simulate", "--input", path,
                           "--x0", "5", "--t-end", "1")
    assert code == 5
    assert "error" in err

    # Step starvation through an override.
    path = ode(LAMBDA_OMEGA, name="lw.ode")
    code, _, err = run_cli(capsys, "simulate", "--input", path,
                           "--x0", "2,0", "--t-end", "100",
                           "--tol.max_steps", "4")
    assert code == 5


def test_omega_cycle(ode, capsys):
    path = ode(LAMBDA_OMEGA)
    code, out, _ = run_cli(capsys, "omega", "--input", path, "--x0", "2,0")
    assert code == 0
    payload = json.loads(out)
    check_schema("omega", payload)
    assert payload["verdict"] == "Cycle"
    assert abs(payload["period"] - 2 * math.pi) < 0.05
    assert payload["diagnostics"]["returns"] >= 4


def test_omega_equilibrium(ode, capsys):
    path = ode(COOP_PAIR)
    code, out, _ = run_cli(capsys, "omega", "--input", path, "--x0", "1,1")
    assert code == 0
    payload = json.loads(out)
    check_schema("omega", payload)
    assert payload["verdict"] in ("Equilibrium", "Unresolved")


def test_equilibria_cubic(ode, capsys):
    path = ode("var x1 in [-2, 2]\nx1' = x1 - x1^3")
    code, out, _ = run_cli(capsys, "equilibria", "--input", path)
    assert code == 0
    payload = json.loads(out)
    check_schema("equilibria", payload)
    assert payload["count"] == 3
    roots = sorted(p[0] for p in payload["equilibria"])
    assert roots == pytest.approx([-1.0, 0.0, 1.0], abs=1e-8)
    assert all(r <= 1e-9 for r in payload["residuals"])
    assert all(a == {"above": True, "below": True}
               for a in payload["accessibility"])


def test_verify_cooperative(ode, capsys):
    path = ode(COOP_PAIR)
    code, out, _ = run_cli(capsys, "verify", "--input", path,
                           "--tol.t_end", "60")
    assert code == 0
    payload = json.loads(out)
    check_schema("verify", payload)
    assert payload["classification"] == "cooperative"
    assert payload["passed"] is True
    assert payload["checks"]["monotone"]["passed"] is True
    assert payload["checks"]["semiconjugacy"]["passed"] is True


def test_tol_override_changes_output(ode, capsys):
    path = ode("x1' = -x1")
    _, out1, _ = run_cli(capsys, "simulate", "--input", path,
                         "--x0", "1", "--t-end", "1", "--json")
    _, out2, _ = run_cli(capsys, "simulate", "--input", path,
                         "--x0", "1", "--t-end", "1", "--json",
                         "--tol.dt", "0.5")
    p1, p2 = json.loads(out1), json.loads(out2)
    assert p1["config"]["options"]["dt"] == 0.1
    assert p2["config"]["options"]["dt"] == 0.5
    assert len(p2["times"]) == 3


def test_repeat_runs_byte_identical(ode, capsys):
    path = ode(LAMBDA_OMEGA)
    outs = []
    for _ in range(2):
        code, out, _ = run_cli(capsys, "omega", "--input", path,
                               "--x0", "2,0", "--seed", "42")
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]


def test_out_flag_writes_file(ode, tmp_path, capsys):
    path = ode(COOP_PAIR)
    target = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "analyze", "--input", path,
                           "--out", str(target))
    assert code == 0
    assert out == ""
    payload = json.loads(target.read_text())
    assert payload["config"]["out"] == str(target)


def test_format_override(ode, capsys):
    # An .ode path explicitly marked as graph input must be rejected
    # as graph JSON, not parsed as DSL text.
    path = ode(COOP_PAIR)
    code, _, err = run_cli(capsys, "analyze", "--input", path,
                           "--format", "graph")
    assert code == 2
    assert "JSON" in err


def test_module_entrypoint(ode, tmp_path):
    path = ode(COOP_PAIR)
    proc = subprocess.run(
        [sys.executable, "-m", "signflow.cli", "analyze", "--input", path],
        capture_output=True, text=True,
        env={**os.environ, "PYTHONHASHSEED": "0"})
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["classification"] == "cooperative"
