import json

import jsonschema
import pytest

from partsforge.cli import main
from partsforge.resources import fixture_path, schema_path


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def validate(doc, schema):
    jsonschema.validate(doc, json.loads(schema_path(schema).read_text()))


def test_guess_prints_attempts(capsys):
    code, out, _ = run_cli(capsys, "guess", "--pac-bits", "16", "--p", "0.5")
    assert code == 0 and out.strip() == "45425"


def test_run_hello(capsys):
    code, out, _ = run_cli(capsys, "run", "fixtures/hello.tir", "--schemes", "ras,cps,dps")
    assert code == 0 and out.split() == ["42", "7"]


def test_attack_expect(capsys):
    argv = ["attack", "fixtures/ret_forge.tir", "--scenario", "S1", "--schemes", "ras"]
    assert run_cli(capsys, *argv, "--expect", "detected")[0] == 0
    assert run_cli(capsys, *argv, "--expect", "succeeded")[0] == 1


def test_usage_errors(capsys):
    assert run_cli(capsys, "run", "fixtures/hello.tir", "--bogus")[0] == 2
    assert run_cli(capsys, "frobnicate")[0] == 2
    assert run_cli(capsys, "run", "fixtures/hello.tir", "--schemes", "xyz")[0] == 2
    assert run_cli(capsys, "run", "fixtures/hello.tir", "--va-bits", "70")[0] == 2
    assert run_cli(capsys, "attack", "fixtures/hello.tir")[0] == 2
    assert run_cli(capsys, "run", "no/such/file.tir")[0] == 2


def test_check_reports_diagnostics(capsys, tmp_path):
    bad = tmp_path / "bad.tir"
    bad.write_text("fn main() -> i64 {\n  ret %x\n}\n")
    code, _, err = run_cli(capsys, "check", str(bad))
    assert code == 1 and "line 2" in err
    assert run_cli(capsys, "check", "fixtures/linked_list.tir")[0] == 0


def test_instrument_then_run_tvm(capsys, tmp_path):
    tvm, man = tmp_path / "o.tvm", tmp_path / "m.json"
    assert run_cli(capsys, "instrument", "fixtures/dispatch.tir", "-o", str(tvm),
                   "--schemes", "all", "--seed", "5", "--manifest", str(man))[0] == 0
    validate(json.loads(man.read_text()), "manifest.schema.json")
    code, out, _ = run_cli(capsys, "run", str(tvm), "--seed", "5", "--report", "json")
    assert code == 0
    rep = json.loads(out)
    validate(rep, "run.schema.json")
    assert rep["pa_executed"] > 0


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("PARTSFORGE_SEED", "77")
    a = run_cli(capsys, "keygen")[1]
    b = run_cli(capsys, "keygen", "--seed", "77")[1]
    assert a == b
    monkeypatch.setenv("PARTSFORGE_SEED", "abc")
    assert run_cli(capsys, "keygen")[0] == 2


def test_fault_exit_code(capsys, tmp_path):
    f = tmp_path / "f.tvm"
    f.write_text(".text\nmain:\n  mov x1, #0\n  ldr x0, [x1]\n  ret\n")
    assert run_cli(capsys, "run", str(f))[0] == 1


@pytest.mark.parametrize("scenario", ["S1", "S2", "S3", "S4a", "S4b", "S5", "S6", "S7"])
def test_attack_json_schema(capsys, scenario):
    code, out, _ = run_cli(capsys, "attack", "--scenario", scenario, "--schemes", "all",
                           "--report", "json")
    assert code == 0
    doc = json.loads(out)
    validate(doc, "attack.schema.json")
    assert doc["scenario"] == scenario


def test_attack_with_script(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps({"triggers": [{"at": "main.check", "actions": [
        {"kind": "write", "addr": "current", "value": "admin"}]}]}))
    argv = ["attack", "fixtures/data_forge.tir", "--script", str(script), "--report", "json"]
    doc = json.loads(run_cli(capsys, *argv, "--schemes", "none")[1])
    assert doc["verdict"] == "SUCCEEDED"
    doc = json.loads(run_cli(capsys, *argv, "--schemes", "dps")[1])
    assert doc["verdict"] == "DETECTED"


def test_guess_json(capsys):
    for argv in (["guess"], ["guess", "--simulate", "--trials", "200", "--pac-bits", "8"],
                 ["guess", "--simulate", "--policy", "sibling", "--trials", "200"]):
        code, out, _ = run_cli(capsys, *argv, "--report", "json")
        assert code == 0
        validate(json.loads(out), "guess.schema.json")


def test_bench_program_and_counts(capsys):
    code, out, _ = run_cli(capsys, "bench", "fixtures/loop_calls.tir", "--schemes", "all",
                           "--report", "json")
    assert code == 0
    doc = json.loads(out)
    validate(doc, "bench.schema.json")
    row = doc["rows"][0]
    assert row["instructions"]["analogue"] > row["instructions"]["instrumented"]

    code, out, _ = run_cli(capsys, "bench", "--from-counts",
                           str(fixture_path("nbench_event_counts.json")), "--report", "json")
    doc = json.loads(out)
    validate(doc, "bench.schema.json")
    assert len(doc["rows"]) == 10
    assert doc["rows"][0]["cycles"]["ras"] == [1802 * 12, 1802 * 16]

    code, out, _ = run_cli(capsys, "bench", "--from-counts", "fixtures/nbench_event_counts.json",
                           "--report", "table")
    assert code == 0 and "Numeric sort" in out and "21624-28832" in out


def test_macvec(capsys):
    code, out, _ = run_cli(capsys, "macvec", "--count", "3", "--seed", "1")
    assert code == 0 and len(out.splitlines()) == 3
    assert all(len(line.split()) == 5 for line in out.splitlines())


def test_deterministic_output(capsys):
    argv = ["bench", "fixtures/dispatch.tir", "--schemes", "all", "--report", "json", "--seed", "3"]
    assert run_cli(capsys, *argv)[1] == run_cli(capsys, *argv)[1]


def test_schemas_are_valid_documents():
    from partsforge.resources import _root

    names = sorted(p.name for p in (_root() / "schemas").glob("*.json"))
    assert names == ["attack.schema.json", "bench.schema.json", "guess.schema.json",
                     "manifest.schema.json", "run.schema.json"]
    for name in names:
        jsonschema.Draft202012Validator.check_schema(json.loads(schema_path(name).read_text()))
