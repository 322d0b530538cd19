"""The attack scenario library.

Each scenario names a fixture program, the hardening scheme that is meant
to stop it, and an adversary script.  Residual scenarios are attacks the
schemes are documented not to stop.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from ..instrument import SchemeSet, lower
from ..pa_core import DEFAULT_CONFIG, VaConfig
from ..resources import fixture_text
from ..tir import parse
from ..vm import assemble
from .harness import AdversaryScript, AttackOutcome, Verdict, execute_attack


@dataclass(frozen=True)
class Scenario:
    name: str
    title: str
    fixture: str
    scheme: str  # the scheme meant to stop it
    residual: bool  # succeeds by design even with the scheme on
    script: Optional[dict] = None

    def expected(self, schemes: SchemeSet) -> Verdict:
        if self.residual or not getattr(schemes, self.scheme):
            return Verdict.SUCCEEDED
        return Verdict.DETECTED


def _write(at, addr, value, hit=1):
    return {"at": at, "hit": hit,
            "actions": [{"kind": "write", "addr": addr, "value": value}]}


def _record(at, addr, tag, hit=1):
    return {"at": at, "hit": hit,
            "actions": [{"kind": "record", "addr": addr, "tag": tag}]}


def _replay(at, addr, tag, hit=1):
    return {"at": at, "hit": hit,
            "actions": [{"kind": "replay", "addr": addr, "tag": tag}]}


_SCENARIOS = [
    Scenario("S1", "forge a return address", "ret_forge.tir", "ras", False,
             {"triggers": [_write("f.__body", "sp+8", "win")]}),
    Scenario("S2", "replay a return address across functions at equal SP",
             "ret_replay_cross.tir", "ras", False,
             {"triggers": [_record("f.__body", "sp+8", "lr"),
                           _replay("g.__body", "sp+8", "lr")]}),
    Scenario("S3", "replay a return address into a later run of the same function",
             "ret_replay_same.tir", "ras", True,
             {"triggers": [_record("f.__body", "sp+8", "lr"),
                           _replay("f.__body", "sp+8", "lr")]}),
    Scenario("S4a", "substitute a code pointer of the same signature", "fnptr_swap.tir",
             "cps", True,
             {"triggers": [{"at": "main.attack", "actions": [
                 {"kind": "record", "addr": "handlers+8", "tag": "fp"},
                 {"kind": "replay", "addr": "slot:main:%h", "tag": "fp"}]}]}),
    Scenario("S4b", "substitute a code pointer of a different signature", "fnptr_swap.tir",
             "cps", False,
             {"triggers": [{"at": "main.attack", "actions": [
                 {"kind": "record", "addr": "others", "tag": "fp"},
                 {"kind": "replay", "addr": "slot:main:%h", "tag": "fp"}]}]}),
    Scenario("S5", "forge a data pointer", "data_forge.tir", "dps", False,
             {"triggers": [_write("main.check", "current", "admin")]}),
    Scenario("S6", "guess the PAC of a forged data pointer, victim restarts on failure",
             "data_forge.tir", "dps", False, None),
    Scenario("S7", "launder a signed pointer through a type conversion", "launder.tir",
             "dps", True,
             {"triggers": [{"at": "main.convert", "actions": [
                 {"kind": "record", "addr": "vault_ref", "tag": "p"},
                 {"kind": "replay", "addr": "slot:main:%pa", "tag": "p"}]}]}),
]


def scenario_suite() -> list:
    return list(_SCENARIOS)


def get_scenario(name: str) -> Scenario:
    for s in _SCENARIOS:
        if s.name.lower() == name.lower():
            return s
    raise KeyError(f"unknown scenario {name!r}; known: {', '.join(s.name for s in _SCENARIOS)}")


def bruteforce_attack(source: str, schemes: SchemeSet, seed: int = 0, budget: int = 16,
                      cfg: VaConfig = DEFAULT_CONFIG, target: str = "admin",
                      slot: str = "current", at: str = "main.check") -> AttackOutcome:
    """Overwrite ``slot`` with ``target`` carrying a guessed PAC, one guess
    per freshly keyed process.  The first guess is the raw pointer."""
    ip = lower(parse(source), schemes, seed)
    asm = assemble(ip.assembly)
    rng = random.Random(seed)
    addr = asm.labels[target]
    last = None
    for i in range(budget):
        guess = 0 if i == 0 else rng.getrandbits(cfg.pac_bits)
        forged = addr | (guess << cfg.va_bits)
        script = {"triggers": [_write(at, slot, forged)]}
        out = execute_attack(asm, AdversaryScript.from_dict(script), seed=seed * 1_000_003 + i,
                             schemes=schemes, cfg=cfg, manifest=ip.manifest)
        last = out
        if out.verdict == Verdict.SUCCEEDED:
            break
    stats = {"budget": budget, "used": i + 1, "pac_bits": cfg.pac_bits,
             "succeeded_at": i + 1 if last.verdict == Verdict.SUCCEEDED else None}
    verdict = last.verdict
    if verdict != Verdict.SUCCEEDED:
        verdict = Verdict.DETECTED
    return AttackOutcome(verdict, last.evidence, last.report, scenario="S6", schemes=schemes,
                         attempts=stats)


def run_scenario(scenario, schemes: SchemeSet, seed: int = 0, cfg: VaConfig = DEFAULT_CONFIG,
                 source: Optional[str] = None, script: Optional[dict] = None) -> AttackOutcome:
    sc = scenario if isinstance(scenario, Scenario) else get_scenario(scenario)
    text = source if source is not None else fixture_text(sc.fixture)
    if sc.name == "S6" and script is None:
        out = bruteforce_attack(text, schemes, seed, cfg=cfg)
    else:
        ip = lower(parse(text), schemes, seed)
        out = execute_attack(ip, AdversaryScript.from_dict(script or sc.script), seed=seed,
                             schemes=schemes, cfg=cfg)
    out.scenario = sc.name
    return out
