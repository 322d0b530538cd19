"""Adversary harness: scripted memory reads and writes between instructions.

The adversary can read any mapped byte (code included) and write any
mapped non-code byte.  It never sees the key set.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from ..instrument import InstrumentedProgram, SchemeSet, lower
from ..pa_core import DEFAULT_CONFIG, VaConfig
from ..tir import TirProgram, parse
from ..vm import AsmProgram, ExitReport, FaultRecord, MachineFault, assemble, process_start
from ..vm.machine import DEFAULT_FUEL, Machine


class ScriptError(ValueError):
    """A malformed or disallowed adversary script."""


class Verdict(str, enum.Enum):
    DETECTED = "DETECTED"
    SUCCEEDED = "SUCCEEDED"
    BENIGN = "BENIGN"


@dataclass
class Action:
    kind: str  # read | write | record | replay
    addr: Union[int, str]
    length: int = 8
    value: Union[int, str, bytes, None] = None
    tag: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        kind = d.get("kind")
        if kind not in ("read", "write", "record", "replay"):
            raise ScriptError(f"unknown action kind {kind!r}")
        if "addr" not in d:
            raise ScriptError(f"{kind} action needs an address")
        if kind == "write" and "value" not in d:
            raise ScriptError("write action needs a value")
        if kind in ("record", "replay") and not d.get("tag"):
            raise ScriptError(f"{kind} action needs a tag")
        value = d.get("value")
        if isinstance(value, str) and value.startswith("hex:"):
            value = bytes.fromhex(value[4:])
        return cls(kind, d["addr"], int(d.get("length", 8)), value, d.get("tag"))


@dataclass
class Trigger:
    at: Union[str, int, None] = None  # label or pc
    count: Optional[int] = None  # fire once this many instructions have run
    hit: int = 1  # fire on the n-th arrival at ``at``
    actions: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "Trigger":
        if ("at" in d) == ("count" in d):
            raise ScriptError("a trigger needs exactly one of 'at' or 'count'")
        return cls(d.get("at"), d.get("count"), int(d.get("hit", 1)),
                   [Action.from_dict(a) for a in d.get("actions", [])])


@dataclass
class AdversaryScript:
    triggers: list

    @classmethod
    def from_dict(cls, d) -> "AdversaryScript":
        items = d["triggers"] if isinstance(d, dict) else d
        return cls([t if isinstance(t, Trigger) else Trigger.from_dict(t) for t in items])


@dataclass
class AttackOutcome:
    verdict: Verdict
    evidence: Union[FaultRecord, str, None]
    report: ExitReport
    reads: list = field(default_factory=list)
    scenario: Optional[str] = None
    schemes: Optional[SchemeSet] = None
    attempts: Optional[dict] = None

    def as_dict(self) -> dict:
        ev = self.evidence
        if isinstance(ev, FaultRecord):
            ev = {"fault": ev.kind, "pc": ev.pc, "address": ev.address,
                  "failure_kind": ev.failure_kind}
        elif ev is not None:
            ev = {"marker": ev}
        return {
            "scenario": self.scenario,
            "schemes": str(self.schemes) if self.schemes is not None else None,
            "verdict": self.verdict.value,
            "evidence": ev,
            "status": self.report.status,
            "output": list(self.report.output),
            "attempts": self.attempts,
        }


def classify(report: ExitReport) -> tuple:
    """Verdict from an exit report alone."""
    if report.status == "marker":
        return Verdict.SUCCEEDED, report.marker
    if report.status == "fault" and report.fault.is_auth_failure:
        return Verdict.DETECTED, report.fault
    return Verdict.BENIGN, report.fault


class AdversaryPort:
    """The adversary's only handle on a running process."""

    def __init__(self, machine: Machine, manifest: Optional[dict]):
        self._m = machine
        self._manifest = manifest

    def resolve(self, expr) -> int:
        m = self._m
        if isinstance(expr, int):
            return expr
        text = str(expr).strip()
        if text.startswith("slot:"):
            try:
                _, fn, vreg = text.split(":", 2)
                return m.sp + self._manifest["frames"][fn]["slots"][vreg]
            except (KeyError, TypeError, ValueError):
                raise ScriptError(f"unknown slot {text!r}") from None
        mt = re.fullmatch(r"([A-Za-z_.$][\w.$]*)\s*(?:([+-])\s*(0x[0-9a-fA-F]+|\d+))?", text)
        if not mt:
            try:
                return int(text, 0)
            except ValueError:
                raise ScriptError(f"bad address expression {text!r}") from None
        name, sign, off = mt.groups()
        if name == "sp":
            base = m.sp
        elif name == "fp":
            base = m.regs[29]
        elif name in m.program.labels:
            base = m.program.labels[name]
        else:
            raise ScriptError(f"unknown label {name!r}")
        if off:
            base += int(off, 0) * (-1 if sign == "-" else 1)
        return base

    def read(self, addr: int, length: int = 8) -> bytes:
        try:
            return self._m.mem.read(addr, length, "r")
        except MachineFault as e:
            raise ScriptError(f"read of unmapped memory at {addr:#x}") from e

    def write(self, addr: int, data: bytes):
        mem = self._m.mem
        for a in range(addr, addr + len(data)):
            if "x" in mem.perms.get(a // 4096, ""):
                raise ScriptError(f"write to executable page at {a:#x} rejected (DEP)")
        try:
            mem.write(addr, data, "w")
        except MachineFault as e:
            raise ScriptError(f"write to unmapped or read-only memory at {addr:#x}") from e


def _as_program(program, schemes: SchemeSet, seed: int):
    """Normalize to (AsmProgram, manifest-or-None)."""
    if isinstance(program, InstrumentedProgram):
        return assemble(program.assembly), program.manifest
    if isinstance(program, AsmProgram):
        return program, None
    if isinstance(program, TirProgram):
        ip = lower(program, schemes, seed)
        return assemble(ip.assembly), ip.manifest
    if isinstance(program, str):
        if re.search(r"^\s*fn\s", program, re.M):
            return _as_program(parse(program), schemes, seed)
        return assemble(program), None
    raise TypeError(f"cannot run {type(program).__name__}")


def execute_attack(program, script: AdversaryScript, seed: int = 0,
                   schemes: SchemeSet = SchemeSet(), cfg: VaConfig = DEFAULT_CONFIG,
                   fuel: int = DEFAULT_FUEL, manifest: Optional[dict] = None) -> AttackOutcome:
    """Run ``program`` with the script's triggers interleaved between
    instructions and classify the result."""
    if not isinstance(script, AdversaryScript):
        script = AdversaryScript.from_dict(script)
    asm, man = _as_program(program, schemes, seed)
    manifest = manifest or man
    machine = process_start(asm, seed, cfg)
    port = AdversaryPort(machine, manifest)
    recorded: dict[str, bytes] = {}
    reads: list = []
    state = {"k": 0, "hits": 0}
    targets = []
    for t in script.triggers:
        if t.at is not None:
            try:
                targets.append(port.resolve(t.at))
            except ScriptError:
                raise ScriptError(f"unknown breakpoint {t.at!r}") from None
        else:
            targets.append(None)

    def fire(trig: Trigger):
        for a in trig.actions:
            addr = port.resolve(a.addr)
            if a.kind == "read":
                reads.append((addr, port.read(addr, a.length)))
            elif a.kind == "record":
                recorded[a.tag] = port.read(addr, a.length)
            elif a.kind == "replay":
                if a.tag not in recorded:
                    raise ScriptError(f"replay of unrecorded tag {a.tag!r}")
                port.write(addr, recorded[a.tag])
            else:
                v = a.value
                if isinstance(v, str):
                    v = port.resolve(v)
                data = v if isinstance(v, bytes) else (int(v) & (2**64 - 1)).to_bytes(8, "little")
                port.write(addr, data)

    def hook(m: Machine):
        k = state["k"]
        if k >= len(script.triggers):
            return
        trig = script.triggers[k]
        if trig.count is not None:
            due = m.icount >= trig.count
        else:
            due = False
            if m.pc == targets[k]:
                state["hits"] += 1
                due = state["hits"] == trig.hit
        if due:
            fire(trig)
            state["k"] = k + 1
            state["hits"] = 0

    report = machine.run(fuel, hook if script.triggers else None)
    verdict, evidence = classify(report)
    return AttackOutcome(verdict, evidence, report, reads, schemes=schemes)
