"""Lowering of TIR programs to ``.tvm`` assembly, with optional PA hardening.

Every virtual register lives in a home slot of the stack frame and is
loaded into a scratch register for each use.  With data-pointer signing
on, each such spill and reload of a data pointer is signed and
authenticated like any other memory access.

Frame layout (offsets from SP after the prologue):

    [0, 16)            saved x29 / x30 (non-leaf functions)
    [16, 16 + 8n)      home slots of the n virtual registers
    [.., frame)        alloca storage, frame rounded up to 16 bytes
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from typing import Optional

from .tir import types as T
from .tir.program import AddrOf, Instr, Label, TirFunction, TirProgram

MAX_IMM_OFFSET = 32760
MOD_REG = "x16"
ICALL_REG = "x8"
INIT_LABEL = "__parts_init"
M64 = (1 << 64) - 1


class LowerError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeSet:
    ras: bool = False
    cps: bool = False
    dps: bool = False

    @classmethod
    def parse(cls, text: Optional[str]) -> "SchemeSet":
        """From a comma list such as ``"ras,dps"``; ``""``/``"none"`` is all off."""
        if text is None or text.strip().lower() in ("", "none", "off"):
            return cls()
        names = {t.strip().lower() for t in text.split(",") if t.strip()}
        if "all" in names:
            return cls(True, True, True)
        bad = names - {"ras", "cps", "dps"}
        if bad:
            raise ValueError(f"unknown scheme(s): {', '.join(sorted(bad))}")
        return cls("ras" in names, "cps" in names, "dps" in names)

    @classmethod
    def grid(cls):
        return [cls(r, c, d) for r in (False, True) for c in (False, True) for d in (False, True)]

    def __str__(self):
        on = [n for n in ("ras", "cps", "dps") if getattr(self, n)]
        return ",".join(on) if on else "none"

    @property
    def any(self) -> bool:
        return self.ras or self.cps or self.dps


@dataclass(frozen=True)
class FunctionId:
    name: str
    value: int

    def __post_init__(self):
        if not 0 <= self.value < 1 << 48:
            raise ValueError("function id must fit in 48 bits")


def assign_function_ids(names, seed: int = 0) -> dict:
    """48-bit ids from a seeded PRNG, redrawn on collision."""
    rng = random.Random(seed)
    used, out = set(), {}
    for name in sorted(set(names)):
        v = rng.getrandbits(48)
        while v in used:
            v = rng.getrandbits(48)
        used.add(v)
        out[name] = FunctionId(name, v)
    return out


def ras_modifier(function_id: int, sp: int) -> int:
    """Return-address modifier: function id above the low 16 bits of SP."""
    return ((function_id << 16) | (sp & 0xFFFF)) & M64


@dataclass
class InstrumentedProgram:
    assembly: str
    manifest: dict
    schemes: SchemeSet
    function_ids: dict = field(default_factory=dict)

    @property
    def sites(self) -> list:
        return self.manifest["sites"]

    @property
    def static_counts(self) -> dict:
        return self.manifest["static_counts"]

    def slot_offset(self, function: str, vreg: str) -> int:
        return self.manifest["frames"][function]["slots"][vreg]


def _float_bits(value: float, width: int) -> int:
    if width == 32:
        return struct.unpack("<I", struct.pack("<f", value))[0]
    return struct.unpack("<Q", struct.pack("<d", value))[0]


def _flatten_init(ty, init) -> list:
    """Data words (ints or label strings) for one global."""
    if isinstance(ty, (T.RecordType, T.ArrayType)):
        subs = ([ft for _, ft in ty.fields] if isinstance(ty, T.RecordType)
                else [ty.elem] * ty.length)
        vals = init if isinstance(init, list) else [None] * len(subs)
        out = []
        for st, sv in zip(subs, vals):
            out.extend(_flatten_init(st, sv))
        return out
    if init is None:
        return [0]
    if isinstance(init, AddrOf):
        return [init.name]
    if isinstance(ty, T.FloatType):
        return [_float_bits(float(init), ty.width)]
    return [int(init) & M64]


class _FunctionLowering:
    def __init__(self, owner: "Lowering", fn: TirFunction):
        self.o = owner
        self.fn = fn
        self.schemes = owner.schemes
        self.slots = {}
        for name in list(dict(fn.params)) + [i.dest for i in fn.instructions() if i.dest]:
            if name not in self.slots:
                self.slots[name] = 16 + 8 * len(self.slots)
        off = 16 + 8 * len(self.slots)
        self.allocas = {}
        for ins in fn.instructions():
            if ins.op == "alloca":
                self.allocas[id(ins)] = off
                off += T.size_of(ins.type)
        self.frame = (off + 15) // 16 * 16
        if self.frame > MAX_IMM_OFFSET:
            raise LowerError(f"function {fn.name}: frame of {self.frame} bytes exceeds the "
                             f"{MAX_IMM_OFFSET}-byte addressing range")
        self.nonleaf = not fn.is_leaf
        self.fid = owner.function_ids[fn.name].value

    # -- emission helpers --------------------------------------------------
    def emit(self, text, *tags):
        self.o.emit(text, *tags)

    def site(self, kind, **info):
        self.o.site(kind, self.fn.name, **info)

    def mov_imm(self, reg, value):
        value &= M64
        self.emit(f"mov {reg}, #{value & 0xFFFF:#x}")
        for shift in (16, 32, 48):
            chunk = (value >> shift) & 0xFFFF
            if chunk:
                self.emit(f"movk {reg}, #{chunk:#x}, lsl #{shift}")

    def mov_type_id(self, ty):
        tid = T.type_id(ty)
        self.emit(f"mov {MOD_REG}, #{tid & 0xFFFF:#x}", "modset")
        for shift in (16, 32, 48):
            self.emit(f"movk {MOD_REG}, #{(tid >> shift) & 0xFFFF:#x}, lsl #{shift}")
        return tid

    def mov_ras_modifier(self):
        self.emit(f"mov {MOD_REG}, sp", "modset")
        for i, shift in enumerate((16, 32, 48)):
            self.emit(f"movk {MOD_REG}, #{(self.fid >> (16 * i)) & 0xFFFF:#x}, lsl #{shift}")

    def vtype(self, name):
        return self.fn.vreg_types[name]

    def load_vreg(self, name, reg):
        ty = self.vtype(name)
        off = self.slots[name]
        if T.is_data_pointer(ty):
            self.emit(f"ldr {reg}, [sp, #{off}]", "dptr")
            if self.schemes.dps:
                tid = self.mov_type_id(ty.pointee)
                self.emit(f"autda {reg}, {MOD_REG}")
                self.site("autda", type=T.type_text(ty.pointee), type_id=tid, what="reload")
        else:
            self.emit(f"ldr {reg}, [sp, #{off}]")

    def store_vreg(self, name, reg):
        ty = self.vtype(name)
        off = self.slots[name]
        if T.is_data_pointer(ty):
            if self.schemes.dps:
                tid = self.mov_type_id(ty.pointee)
                self.emit(f"pacda {reg}, {MOD_REG}")
                self.site("pacda", type=T.type_text(ty.pointee), type_id=tid, what="spill")
            self.emit(f"str {reg}, [sp, #{off}]", "dptr")
        else:
            self.emit(f"str {reg}, [sp, #{off}]")

    def load_operand(self, op, reg):
        if op.kind == "vreg":
            self.load_vreg(op.value, reg)
        elif op.kind == "int":
            self.mov_imm(reg, op.value)
        elif op.kind == "float":
            self.mov_imm(reg, _float_bits(op.value, 64))
        else:
            self.emit(f"mov {reg}, #0")

    def label(self, name):
        return f"{self.fn.name}.{name}"

    # -- structure ---------------------------------------------------------
    def lower(self):
        fn = self.fn
        self.o.counts["functions"] += 1
        if self.nonleaf:
            self.o.counts["non_leaf_functions"] += 1
        self.o.raw(f"{fn.name}:")
        self.emit(f"sub sp, sp, #{self.frame}", "nonleaf-entry" if self.nonleaf else "leaf-entry")
        if self.nonleaf:
            if self.schemes.ras:
                self.mov_ras_modifier()
                self.emit(f"pacib x30, {MOD_REG}")
                self.site("pacib", modifier="function_id^sp", function_id=self.fid)
            self.emit("stp x29, x30, [sp, #0]")
            self.emit("mov x29, sp")
        if len(fn.params) > 8:
            raise LowerError(f"function {fn.name}: more than 8 parameters")
        for i, (name, _) in enumerate(fn.params):
            self.store_vreg(name, f"x{i}")
        self.o.raw(f"{fn.name}.__body:")
        for item in fn.body:
            if isinstance(item, Label):
                self.o.raw(f"{self.label(item.name)}:")
            else:
                getattr(self, "op_" + item.op, self.op_arith)(item)

    def epilogue(self):
        if self.nonleaf:
            self.emit("ldp x29, x30, [sp, #0]")
            if self.schemes.ras:
                self.mov_ras_modifier()
                self.emit(f"autib x30, {MOD_REG}")
                self.site("autib", modifier="function_id^sp", function_id=self.fid)
        self.emit(f"add sp, sp, #{self.frame}")
        self.emit("ret")

    # -- instructions --------------------------------------------------------
    def op_const(self, ins: Instr):
        val = ins.args[0]
        if isinstance(ins.type, T.FloatType):
            self.mov_imm("x9", _float_bits(float(val.value), ins.type.width))
        else:
            self.load_operand(val, "x9")
        self.store_vreg(ins.dest, "x9")

    def op_alloca(self, ins: Instr):
        self.emit(f"add x9, sp, #{self.allocas[id(ins)]}")
        self.store_vreg(ins.dest, "x9")

    def op_load(self, ins: Instr):
        ptr = ins.args[0].value
        pointee = self.vtype(ptr).pointee
        self.load_vreg(ptr, "x9")
        if T.is_data_pointer(pointee):
            self.o.counts["data_pointer_sites"] += 1
            self.emit("ldr x10, [x9, #0]", "dptr")
            if self.schemes.dps:
                tid = self.mov_type_id(pointee.pointee)
                self.emit(f"autda x10, {MOD_REG}")
                self.site("autda", type=T.type_text(pointee.pointee), type_id=tid, what="load")
        else:
            self.emit("ldr x10, [x9, #0]")
        self.store_vreg(ins.dest, "x10")

    def op_store(self, ins: Instr):
        val, ptr = ins.args
        pointee = self.vtype(ptr.value).pointee
        self.load_operand(val, "x10")
        self.load_vreg(ptr.value, "x9")
        if T.is_data_pointer(pointee):
            self.o.counts["data_pointer_sites"] += 1
            if self.schemes.dps:
                tid = self.mov_type_id(pointee.pointee)
                self.emit(f"pacda x10, {MOD_REG}")
                self.site("pacda", type=T.type_text(pointee.pointee), type_id=tid, what="store")
            self.emit("str x10, [x9, #0]", "dptr")
        else:
            self.emit("str x10, [x9, #0]")

    def op_addr(self, ins: Instr):
        ty = self.vtype(ins.dest)
        if T.is_code_pointer(ty):
            self.code_pointer_create(ins.name, "x9", ty)
        else:
            self.emit(f"adr x9, {ins.name}")
        self.store_vreg(ins.dest, "x9")

    def code_pointer_create(self, target, reg, ty):
        self.o.counts["code_pointer_sites"] += 1
        self.emit(f"adr {reg}, {target}", "cptr-create")
        if self.schemes.cps:
            tid = self.mov_type_id(ty.pointee)
            self.emit(f"pacia {reg}, {MOD_REG}")
            self.site("pacia", type=T.type_text(ty.pointee), type_id=tid, what=target)

    def op_field(self, ins: Instr):
        ptr = ins.args[0].value
        rec = self.vtype(ptr).pointee
        off = T.field_offset(rec, rec.field_index(ins.name))
        self.load_vreg(ptr, "x9")
        if off:
            self.emit(f"add x9, x9, #{off}")
        self.store_vreg(ins.dest, "x9")

    def op_index(self, ins: Instr):
        ptr, idx = ins.args
        arr = self.vtype(ptr.value).pointee
        self.load_vreg(ptr.value, "x9")
        self.load_operand(idx, "x10")
        self.mov_imm("x11", T.size_of(arr.elem))
        self.emit("mul x10, x10, x11")
        self.emit("add x9, x9, x10")
        self.store_vreg(ins.dest, "x9")

    def load_args(self, args):
        if len(args) > 8:
            raise LowerError(f"function {self.fn.name}: call with more than 8 arguments")
        for i, a in enumerate(args):
            self.load_operand(a, f"x{i}")

    def op_call(self, ins: Instr):
        self.load_args(ins.args)
        self.emit(f"bl {ins.name}")
        if ins.dest:
            self.store_vreg(ins.dest, "x0")

    def op_icall(self, ins: Instr):
        fp = ins.args[0].value
        sig = self.vtype(fp).pointee
        self.load_args(ins.args[1:])
        self.o.counts["indirect_call_sites"] += 1
        self.emit(f"ldr {ICALL_REG}, [sp, #{self.slots[fp]}]")
        if self.schemes.cps:
            tid = self.mov_type_id(sig)
            self.emit(f"blraa {ICALL_REG}, {MOD_REG}", "icall")
            self.site("blraa", type=T.type_text(sig), type_id=tid, what="icall")
        else:
            self.emit(f"blr {ICALL_REG}", "icall")
        if ins.dest:
            self.store_vreg(ins.dest, "x0")

    def op_bitcast(self, ins: Instr):
        # Authenticated under the source type on reload, re-signed under the
        # destination type on spill; nothing happens in the register itself.
        self.load_vreg(ins.args[0].value, "x9")
        self.store_vreg(ins.dest, "x9")

    def op_arith(self, ins: Instr):
        a, b = ins.args
        self.load_operand(a, "x9")
        self.load_operand(b, "x10")
        mnem = {"add": "add", "sub": "sub", "mul": "mul", "xor": "eor"}[ins.op]
        self.emit(f"{mnem} x9, x9, x10")
        self.store_vreg(ins.dest, "x9")

    def op_br(self, ins: Instr):
        a, b = ins.args
        self.load_operand(a, "x9")
        self.load_operand(b, "x10")
        self.emit("cmp x9, x10")
        self.emit(f"b.{ins.cond} {self.label(ins.targets[0])}")
        self.emit(f"b {self.label(ins.targets[1])}")

    def op_jmp(self, ins: Instr):
        self.emit(f"b {self.label(ins.targets[0])}")

    def op_ret(self, ins: Instr):
        if ins.args:
            self.load_operand(ins.args[0], "x0")
        self.epilogue()

    def op_print(self, ins: Instr):
        self.load_operand(ins.args[0], "x0")
        self.emit("svc #1")


class Lowering:
    def __init__(self, prog: TirProgram, schemes: SchemeSet, seed: int = 0):
        self.prog = prog
        self.schemes = schemes
        self.seed = seed
        self.function_ids = assign_function_ids([f.name for f in prog.functions], seed)
        self.lines: list[str] = []
        self.sites: list[dict] = []
        self.initializers: list[dict] = []
        self.frames: dict = {}
        self.counts = {k: 0 for k in ("functions", "non_leaf_functions", "indirect_call_sites",
                                      "data_pointer_sites", "code_pointer_sites")}

    def raw(self, text):
        self.lines.append(text)

    def emit(self, text, *tags):
        suffix = "".join(f" !{t}" for t in tags)
        self.lines.append(f"  {text}{suffix}")

    def site(self, kind, function, **info):
        entry = {"kind": kind, "function": function, "line": 0}
        for k, v in info.items():
            entry[k] = f"{v:016x}" if k in ("type_id", "function_id") else v
        self.sites.append(entry)

    def lower(self) -> InstrumentedProgram:
        self.raw(f"; schemes: {self.schemes}")
        self.raw(".text")
        if self._bootstrap_entries():
            self.raw(f".global-init {INIT_LABEL}")
        for m in self.prog.markers:
            self.raw(f".marker {m}")
        for fn in self.prog.functions:
            fl = _FunctionLowering(self, fn)
            fl.lower()
            self.frames[fn.name] = {"size": fl.frame, "leaf": not fl.nonleaf, "slots": fl.slots}
        self.build_bootstrap()
        self.lines += self.data_section()
        asm = "\n".join(self.lines) + "\n"
        # Sites were recorded in text order; attach their final line numbers.
        pa_lines = [n for n, ln in enumerate(self.lines, 1)
                    if ln.strip().split(" ")[0] in _SITE_OPS]
        assert len(pa_lines) == len(self.sites)
        for s, n in zip(self.sites, pa_lines):
            s["line"] = n
        counts = dict(self.counts)
        counts["pa_instructions"] = len(self.sites)
        manifest = {
            "schemes": {"ras": self.schemes.ras, "cps": self.schemes.cps, "dps": self.schemes.dps},
            "seed": self.seed,
            "function_ids": {n: f"{f.value:012x}" for n, f in sorted(self.function_ids.items())},
            "sites": self.sites,
            "initializers": self.initializers,
            "static_counts": counts,
            "frames": self.frames,
        }
        return InstrumentedProgram(asm, manifest, self.schemes, self.function_ids)

    def _bootstrap_entries(self) -> list:
        entries = []
        for g in self.prog.globals:
            words = _flatten_init(g.type, g.init)
            for off, pty in T.pointer_slots(g.type):
                if T.is_code_pointer(pty) and words[off // 8] == 0:
                    continue  # a null code pointer stays null
                entries.append((g, off, pty))
        return entries

    def build_bootstrap(self) -> bool:
        """Emit the startup routine that PAC-furnishes pointer-valued globals."""
        entries = self._bootstrap_entries()
        if not entries:
            return False
        self.raw(f"{INIT_LABEL}:")
        for g, off, pty in entries:
            target = f"{g.name}+{off}" if off else g.name
            self.emit(f"adr x9, {target}")
            code = T.is_code_pointer(pty)
            if code:
                self.counts["code_pointer_sites"] += 1
                self.emit("ldr x10, [x9, #0]", "cptr-create")
            else:
                self.counts["data_pointer_sites"] += 1
                self.emit("ldr x10, [x9, #0]")
            signed = self.schemes.cps if code else self.schemes.dps
            if signed:
                tid = T.type_id(pty.pointee)
                self.emit(f"mov {MOD_REG}, #{tid & 0xFFFF:#x}", "modset")
                for shift in (16, 32, 48):
                    self.emit(f"movk {MOD_REG}, #{(tid >> shift) & 0xFFFF:#x}, lsl #{shift}")
                op = "pacia" if code else "pacda"
                self.emit(f"{op} x10, {MOD_REG}")
                self.site(op, INIT_LABEL, type=T.type_text(pty.pointee), type_id=tid,
                          what=f"{g.name}+{off}")
                self.initializers.append({"global": g.name, "offset": off,
                                          "key": "IA" if code else "DA",
                                          "type": T.type_text(pty.pointee),
                                          "type_id": f"{tid:016x}"})
            self.emit("str x10, [x9, #0]", *(() if code else ("dptr",)))
        self.emit("ret")
        return True

    def data_section(self) -> list:
        if not self.prog.globals:
            return []
        out = [".data"]
        for g in self.prog.globals:
            out.append(f"{g.name}:")
            for w in _flatten_init(g.type, g.init):
                out.append(f"  .quad {w if isinstance(w, str) else hex(w)}")
        return out


_SITE_OPS = frozenset({"pacib", "autib", "pacia", "blraa", "pacda", "autda"})


def lower(prog: TirProgram, schemes: SchemeSet = SchemeSet(), seed: int = 0
          ) -> InstrumentedProgram:
    return Lowering(prog, schemes, seed).lower()


def static_audit(asm: str, schemes: SchemeSet) -> list:
    """Check the emitted text for the per-scheme completeness rules.
    Returns a list of human-readable violations (empty when clean)."""
    from .vm.asm import split_line

    rows = []
    for n, raw in enumerate(asm.splitlines(), 1):
        _, body, tags = split_line(raw)
        if body and not body.startswith("."):
            op, _, rest = body.partition(" ")
            rows.append((n, op, [x.strip() for x in rest.split(",")] if rest else [], tags))
    problems = []
    for i, (n, op, ops, tags) in enumerate(rows):
        if schemes.cps and op in ("blr", "br"):
            problems.append(f"line {n}: unauthenticated indirect branch {op}")
        if schemes.ras and op == "ldp" and ops[:2] == ["x29", "x30"]:
            follow = [r[1] for r in rows[i + 1:i + 8]]
            if "ret" not in follow or "autib" not in follow[:follow.index("ret")]:
                problems.append(f"line {n}: LR restore not authenticated before ret")
        if schemes.dps and op == "ldr" and "dptr" in tags:
            reg = ops[0]
            window = rows[i + 1:i + 6]
            if not any(r[1] == "autda" and r[2][0] == reg for r in window):
                problems.append(f"line {n}: data-pointer load into {reg} not authenticated")
    return problems
