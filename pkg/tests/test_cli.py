import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from lambdatheory import schemas
from lambdatheory.cli import main

ROOT = Path(__file__).resolve().parent.parent
BASIC = str(ROOT / "formulas" / "basic.fml")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv, schema=None):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    data = json.loads(out)
    if schema is not None:
        jsonschema.validate(data, schema)
    return data


def strip_timestamps(data):
    if isinstance(data, dict):
        return {k: strip_timestamps(v) for k, v in data.items() if k != "timestamps"}
    if isinstance(data, list):
        return [strip_timestamps(v) for v in data]
    return data


# -- hr eval -----------------------------------------------------------------------------


def test_standard_part_of_a_product(capsys):
    data = run_json(capsys, "hr", "eval", "st((1+eps)*(1-eps))", schema=schemas.HR_EVAL)
    assert data["standard_part"] == "1"
    assert data["manifest"]["seed"] == 0 and data["manifest"]["command"][:2] == ["hr", "eval"]


@pytest.mark.parametrize("expr, kind, st", [
    ("omega", "Infinite", None),
    ("eps", "Infinitesimal", "0"),
    ("3 + eps", "FiniteNonInfinitesimal", "3"),
    ("omega / (2*omega + 1)", "FiniteNonInfinitesimal", "1/2"),
])
def test_classifications(capsys, expr, kind, st):
    data = run_json(capsys, "hr", "eval", expr, schema=schemas.HR_EVAL)
    assert data["classification"] == kind and data["standard_part"] == st


def test_comparisons_report_truth(capsys):
    data = run_json(capsys, "hr", "eval", "eps < 1/1000000", schema=schemas.HR_EVAL)
    assert data["value"] is True and data["oracle_decisions_used"] >= 1


def test_csv_output(capsys):
    code, out, _ = run(capsys, "--format", "csv", "hr", "eval", "omega + 1")
    assert code == 0
    first, *rest = out.splitlines()
    assert first.startswith("# ") and "manifest" in json.loads(first[2:])
    rows = list(csv.DictReader(io.StringIO("\n".join(rest))))
    assert rows[0]["classification"] == "Infinite"


def test_flags_before_and_after_the_subcommand(capsys):
    a = run_json(capsys, "--seed", "5", "--horizon", "4096", "hr", "eval", "eps")
    b = run_json(capsys, "hr", "eval", "eps", "--seed", "5", "--horizon", "4096")
    assert a["manifest"]["seed"] == b["manifest"]["seed"] == 5
    assert a["manifest"]["horizon"] == b["manifest"]["horizon"] == 4096


def test_environment_defaults(capsys, monkeypatch):
    monkeypatch.setenv("LAMBDA_HORIZON", "2048")
    monkeypatch.setenv("LAMBDA_ORACLE_SEED", "9")
    data = run_json(capsys, "hr", "eval", "eps")
    assert data["manifest"]["horizon"] == 2048 and data["manifest"]["seed"] == 9


# -- exit codes ------------------------------------------------------------------------------------


def test_parse_errors_exit_2_and_print_the_grammar(capsys):
    code, out, err = run(capsys, "hr", "eval", "1 +* 2")
    assert code == 2 and out == ""
    assert "grammar" in err


def test_domain_errors_exit_1(capsys):
    code, _, err = run(capsys, "hr", "eval", "1/(omega - omega)")
    assert code == 1 and "DivisionByZero" in err
    code, _, err = run(capsys, "hr", "eval", "st(omega)")
    assert code == 1 and "DomainViolation" in err


def test_unknown_subcommands_exit_2(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "hr")[0] == 2
    assert run(capsys)[0] == 2


def test_bad_sweep_arguments_exit_2(capsys):
    for elements in ("2,4,8", "2,4,7,16", "8,4,16,32", "a,b"):
        code, _, err = run(capsys, "variational", "sweep", "--elements", elements)
        assert code == 2, elements


# -- oracle log and replay ----------------------------------------------------------------------------


def test_oracle_log_lines(capsys):
    code, out, _ = run(capsys, "oracle", "log", "eps < 1/1000", "omega > 5", "--formulas", BASIC)
    assert code == 0
    header, *records = [json.loads(line) for line in out.splitlines()]
    jsonschema.validate(header, schemas.ORACLE_LOG_HEADER)
    assert records
    for rec in records:
        jsonschema.validate(rec, schemas.DECISION)
        assert set(rec) == {"label", "answer", "mode", "witness_count"}


PARITY = """{"sets": {"A": {"range": [0, "omega"]}}, "hyperreals": {"w": "omega"}}
; omega is even: decided by sampling, either answer is consistent
(exists x A (= (* 2 x) w))
(not (exists x A (= (* 2 x) w)))
(forall x A (>= x 0))
"""


def test_replay_reimposes_a_flipped_heuristic_decision(capsys, tmp_path):
    fml = tmp_path / "parity.fml"
    fml.write_text(PARITY)
    code, out, _ = run(capsys, "oracle", "log", "--formulas", str(fml))
    header, *records = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert [r["mode"] for r in records] == ["heuristic", "heuristic", "exact"]
    before = run_json(capsys, "transfer", "check", str(fml))
    assert [r["value"] for r in before["results"]] == [True, False, True]

    flipped = [{**r, "answer": not r["answer"]} if r["mode"] == "heuristic" else r for r in records]
    log = tmp_path / "flipped.jsonl"
    log.write_text("".join(json.dumps(r) + "\n" for r in [header] + flipped))
    after = run_json(capsys, "--oracle-replay", str(log), "transfer", "check", str(fml))
    assert [r["value"] for r in after["results"]] == [False, True, True]
    assert after["decision_log"][0]["answer"] is False


def test_replay_cannot_contradict_exact_facts(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle", "log", "omega > 5")
    header, *records = [json.loads(line) for line in out.splitlines()]
    assert records[-1]["mode"] == "exact"
    log = tmp_path / "bad.jsonl"
    log.write_text("".join(json.dumps(r) + "\n" for r in [header] + [{**records[-1], "answer": False}]))
    code, _, err = run(capsys, "--oracle-replay", str(log), "hr", "eval", "omega > 5")
    assert code == 1 and "ReplayConflict" in err


def test_replay_file_is_honoured(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle", "log", "omega > 5")
    log = tmp_path / "log.jsonl"
    log.write_text(out)
    data = run_json(capsys, "--oracle-replay", str(log), "hr", "eval", "omega > 5")
    assert data["value"] is True


# -- transfer check -----------------------------------------------------------------------------------------


def test_transfer_check_basic_file(capsys):
    data = run_json(capsys, "transfer", "check", BASIC, schema=schemas.TRANSFER_CHECK)
    values = [r["value"] for r in data["results"]]
    assert values == [True, False, True, True, True, True, True, True, True, True]
    assert [r["formula"] for r in data["results"]][:3] == [
        "(forall x A (>= x 0))", "(exists x A (= (* x x) 2))", "(exists x A (> x c))"]


def test_transfer_check_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "transfer", "check", str(tmp_path / "nope.fml"))
    assert code != 0


def test_transfer_check_bad_formula(capsys, tmp_path):
    bad = tmp_path / "bad.fml"
    bad.write_text("(forall x)\n")
    code, _, err = run(capsys, "transfer", "check", str(bad))
    assert code == 2 and "line 1" in err


# -- project / derive ------------------------------------------------------------------------------------------


def test_project_writes_coefficients(capsys, tmp_path):
    out = tmp_path / "coeffs.json"
    code, stdout, _ = run(capsys, "project", "--basis", "hat", "--m", "4", "--f", "x*(1-x)", "--out", str(out))
    assert code == 0 and stdout == ""
    data = json.loads(out.read_text())
    jsonschema.validate(data, schemas.COEFFS)
    assert data["basis"] == "hat" and data["m"] == 4 and len(data["coeffs"]) == 3
    assert data["max_residual"] <= 1e-10


def test_derive_from_stored_coefficients(capsys, tmp_path):
    out = tmp_path / "coeffs.json"
    run(capsys, "project", "--basis", "sine", "--m", "6", "--f", "sin(pi*x)", "--out", str(out))
    from_file = run_json(capsys, "derive", "--coeffs", str(out), schema=schemas.COEFFS)
    direct = run_json(capsys, "derive", "--basis", "sine", "--m", "6", "--f", "sin(pi*x)")
    assert from_file["coeffs"] == direct["coeffs"]
    assert from_file["basis"] == "sine" and len(from_file["coeffs"]) == 5


def test_project_rejects_bad_input(capsys):
    assert run(capsys, "project", "--m", "1", "--f", "x")[0] == 2
    assert run(capsys, "project", "--m", "4", "--f", "import os")[0] == 2
    assert run(capsys, "project", "--m", "4", "--f", "log(x-0.5)")[0] == 1
    assert run(capsys, "derive", "--m", "4")[0] == 2


# -- variational sweep ----------------------------------------------------------------------------------------------


def test_sweep_json(capsys):
    data = run_json(capsys, "variational", "sweep", "--elements", "2,4,8,16", schema=schemas.SWEEP)
    js = [lv["j_value"] for lv in data["levels"]]
    assert all(b < a for a, b in zip(js, js[1:]))
    assert data["certificate"] == "PASS"


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "variational", "sweep", "--elements", "2,4,8,16", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.split("\n", 1)[1])))
    assert [int(r["m"]) for r in rows] == [2, 4, 8, 16]
    assert set(rows[0]) == {"m", "h", "j_value", "sup_norm", "grad_norm", "iterations", "starts_used", "converged"}


def test_runs_are_reproducible(capsys):
    for argv in (["variational", "sweep", "--elements", "2,4,8,16,32", "--seed", "3"],
                 ["transfer", "check", BASIC], ["hr", "eval", "st(omega/(omega+1))"]):
        a = strip_timestamps(run_json(capsys, *argv))
        b = strip_timestamps(run_json(capsys, *argv))
        assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lambdatheory", "hr", "eval", "2*eps"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["classification"] == "Infinitesimal"
