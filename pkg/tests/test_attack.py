import math
import random

import numpy as np
import pytest

from partsforge.attack import (AdversaryScript, ScriptError, Verdict, execute_attack,
                               get_scenario, guess_attempts, run_scenario,
                               sibling_average_guesses, simulate_bruteforce)
from partsforge.instrument import SchemeSet, lower
from partsforge.pa_core import ContractError, Key, VaConfig, pac_compute
from partsforge.resources import fixture_text
from partsforge.tir import parse
from partsforge.vm import assemble, privileged_keys, process_start

D, S = Verdict.DETECTED, Verdict.SUCCEEDED

# scenario -> the scheme that should stop it, or None when it is a residual weakness
STOPPED_BY = {"S1": "ras", "S2": "ras", "S3": None, "S4a": None, "S4b": "cps", "S5": "dps",
              "S6": "dps", "S7": None}


def expected(name, schemes):
    scheme = STOPPED_BY[name]
    return D if scheme and getattr(schemes, scheme) else S


@pytest.mark.parametrize("name", sorted(STOPPED_BY))
def test_scenario_across_grid(name):
    for schemes in SchemeSet.grid():
        out = run_scenario(name, schemes, seed=1)
        assert out.verdict == expected(name, schemes), (name, str(schemes))
        if out.verdict == D:
            assert out.evidence.failure_kind in ("instruction", "data")


def test_scenarios_deterministic():
    a = run_scenario("S2", SchemeSet.parse("ras"), seed=9).as_dict()
    b = run_scenario("S2", SchemeSet.parse("ras"), seed=9).as_dict()
    assert a == b


def test_no_script_is_benign():
    out = execute_attack(fixture_text("data_forge.tir"), AdversaryScript([]), seed=1)
    assert out.verdict == Verdict.BENIGN and out.report.output == (1000,)


def test_write_to_code_rejected():
    script = {"triggers": [{"at": "main", "actions": [
        {"kind": "write", "addr": "main", "value": 0}]}]}
    with pytest.raises(ScriptError, match="DEP"):
        execute_attack(fixture_text("data_forge.tir"), script, seed=1)


def test_code_is_readable():
    script = {"triggers": [{"at": "main", "actions": [{"kind": "read", "addr": "main"}]}]}
    out = execute_attack(fixture_text("data_forge.tir"), script, seed=1)
    assert len(out.reads) == 1 and len(out.reads[0][1]) == 8


@pytest.mark.parametrize("bad", [
    {"triggers": [{"actions": []}]},
    {"triggers": [{"at": "main", "count": 3, "actions": []}]},
    {"triggers": [{"at": "main", "actions": [{"kind": "smash", "addr": 0}]}]},
    {"triggers": [{"at": "main", "actions": [{"kind": "write", "addr": 0}]}]},
    {"triggers": [{"at": "main", "actions": [{"kind": "replay", "addr": "sp", "tag": "x"}]}]},
    {"triggers": [{"at": "nowhere", "actions": []}]},
])
def test_malformed_scripts(bad):
    with pytest.raises(ScriptError):
        execute_attack(fixture_text("data_forge.tir"), bad, seed=1)


def test_vm_bruteforce_matches_key_oracle():
    """Forged pointers with random PACs succeed exactly when the guess equals
    the PAC computed from the victim's keys, at rate 2^-b."""
    cfg = VaConfig(47, True)
    b = cfg.pac_bits
    assert b == 8
    ip = lower(parse(fixture_text("data_forge.tir")), SchemeSet.parse("dps"), 0)
    asm = assemble(ip.assembly)
    target = asm.labels["admin"]
    tid = int(ip.manifest["initializers"][0]["type_id"], 16)
    rng = random.Random(2024)
    runs, wins = 1000, 0
    for i in range(runs):
        guess = rng.getrandbits(b)
        forged = target | (guess << cfg.va_bits)
        script = {"triggers": [{"at": "main.check", "actions": [
            {"kind": "write", "addr": "current", "value": forged}]}]}
        out = execute_attack(asm, script, seed=i, schemes=SchemeSet.parse("dps"), cfg=cfg,
                             manifest=ip.manifest)
        keys = privileged_keys(process_start(asm, i, cfg))
        right = pac_compute(target, tid, keys[Key.DA], cfg) == guess
        assert (out.verdict == S) == right
        assert out.verdict in (S, D)
        wins += right
    p = 2.0 ** -b
    assert abs(wins - runs * p) <= 3 * math.sqrt(runs * p * (1 - p))


def test_guess_formula_values(guess_values):
    for row in guess_values:
        assert guess_attempts(row["p"], row["pac_bits"]) == row["attempts"]


def test_guess_formula_is_floor_of_root():
    for b in (3, 8, 16):
        n = guess_attempts(0.5, b)
        assert 1 - (1 - 2.0 ** -b) ** n <= 0.5 < 1 - (1 - 2.0 ** -b) ** (n + 1)


@pytest.mark.parametrize("p,b", [(0, 16), (1, 16), (0.5, 2), (0.5, 32), (-0.1, 8)])
def test_guess_domain(p, b):
    with pytest.raises(ContractError):
        guess_attempts(p, b)


def test_sibling_average():
    assert sibling_average_guesses(16) == 32768
    assert sibling_average_guesses(3) == 4


def test_simulate_small():
    st = simulate_bruteforce(6, "restart", trials=4000, seed=1)
    n = guess_attempts(0.5, 6)
    assert abs(st.success_within(n) - 0.5) < 0.04
    sib = simulate_bruteforce(6, "sibling", trials=4000, seed=1)
    assert abs(sib.mean - 32.5) < 1.5
    assert sib.attempts.max() <= 64
    assert simulate_bruteforce(6, trials=50, seed=3).attempts.tolist() == \
        simulate_bruteforce(6, trials=50, seed=3).attempts.tolist()


def test_simulate_censoring():
    st = simulate_bruteforce(12, "restart", trials=200, seed=1, max_attempts=10)
    assert st.censored > 150
    assert np.all(st.attempts <= 10)
    assert st.curve([1, 10]) == [(1, st.success_within(1)), (10, st.success_within(10))]


def test_bruteforce_scenario_reports_attempts():
    out = run_scenario(get_scenario("S6"), SchemeSet.parse("dps"), seed=2)
    assert out.verdict == D
    assert out.attempts["used"] == out.attempts["budget"] == 16
