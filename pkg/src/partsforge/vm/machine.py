"""Interpreter for assembled ``.tvm`` programs with PA semantics and faults."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from ..events import EventCounters
from ..pa_core import (DEFAULT_CONFIG, M64, Key, KeySet, VaConfig, authenticate, failure_kind,
                       generic_mac, sign)
from .asm import (CODE_BASE, COMBINED_OPCODES, DATA_BASE, EVENT_TAGS, PA_OPCODES, REG_SP,
                  REG_ZR, STACK_SIZE, STACK_TOP, AsmError, AsmProgram, assemble, parse_imm,
                  parse_reg)

DEFAULT_FUEL = 10**8
PAGE = 4096
_SINK = 33  # writes to xzr land here and are never read
_EVENT_FIELDS = tuple(EventCounters.__dataclass_fields__)
_KEYS = {k.name: k for k in Key}


class MachineFault(Exception):
    def __init__(self, kind: str, address: int):
        super().__init__(f"{kind} at {address:#x}")
        self.kind = kind
        self.address = address


@dataclass(frozen=True)
class FaultRecord:
    kind: str  # "translation-fault" | "permission-fault"
    pc: int
    address: int
    failure_kind: Optional[str] = None  # "instruction" / "data" if caused by failed auth

    @property
    def is_auth_failure(self) -> bool:
        return self.failure_kind is not None


@dataclass(frozen=True)
class ExitReport:
    status: str  # "halted" | "fault" | "marker" | "fuel" | "stopped"
    exit_value: Optional[int]
    fault: Optional[FaultRecord]
    counters: EventCounters
    instructions: int
    pa_executed: int
    output: tuple
    marker: Optional[str] = None
    tags: dict = field(default_factory=dict)  # executions per instruction tag


def _signed(v: int) -> int:
    return v - (1 << 64) if v >> 63 else v


class Memory:
    """Sparse page-granular memory with r/w/x permissions."""

    def __init__(self, cfg: VaConfig):
        self.cfg = cfg
        self.pages: dict[int, bytearray] = {}
        self.perms: dict[int, str] = {}

    def map(self, base: int, size: int, perms: str, content: bytes = b""):
        for p in range(base // PAGE, (base + max(size, 1) + PAGE - 1) // PAGE):
            self.pages[p] = bytearray(PAGE)
            self.perms[p] = perms
        self._copy_in(base, content)

    def _copy_in(self, addr, content):
        for i, b in enumerate(content):
            self.pages[(addr + i) // PAGE][(addr + i) % PAGE] = b

    def check(self, addr: int, size: int, access: str):
        if addr < 0 or addr + size - 1 > self.cfg.addr_mask:
            raise MachineFault("translation-fault", addr)
        for p in {addr // PAGE, (addr + size - 1) // PAGE}:
            perm = self.perms.get(p)
            if perm is None:
                raise MachineFault("translation-fault", addr)
            if access not in perm:
                raise MachineFault("permission-fault", addr)

    def read(self, addr: int, size: int, access: str = "r") -> bytes:
        self.check(addr, size, access)
        off = addr % PAGE
        if off + size <= PAGE:
            return bytes(self.pages[addr // PAGE][off:off + size])
        return bytes(self.pages[(addr + i) // PAGE][(addr + i) % PAGE] for i in range(size))

    def write(self, addr: int, data: bytes, access: str = "w"):
        self.check(addr, len(data), access)
        self._copy_in(addr, data)

    def read64(self, addr: int) -> int:
        return int.from_bytes(self.read(addr, 8), "little")

    def write64(self, addr: int, value: int):
        self.write(addr, (value & M64).to_bytes(8, "little"))


class Machine:
    """One simulated process.  The key set is held privately; nothing in
    the instruction set or the adversary interface reads it."""

    def __init__(self, program: AsmProgram, keys: KeySet, cfg: VaConfig = DEFAULT_CONFIG,
                 pa_disabled: bool = False):
        self.program = program
        self.cfg = cfg
        self.pa_disabled = pa_disabled
        self.__keys = keys
        if pa_disabled:
            for ins in program.instrs:
                if ins.op in COMBINED_OPCODES or ins.op == "pacga":
                    raise AsmError(ins.line, f"{ins.op} has no encoding on a machine without PA")
        self.regs = [0] * 34
        self.regs[REG_SP] = STACK_TOP
        self.pc = program.labels["main"]
        self.flags = (0, 0)
        self.mem = Memory(cfg)
        self.mem.map(CODE_BASE, 4 * len(program.instrs), "rx", program.code_bytes())
        self.mem.map(DATA_BASE, len(program.data), "rw", bytes(program.data))
        self.mem.map(STACK_TOP - STACK_SIZE, STACK_SIZE, "rw")
        self.code_end = program.code_end
        self.output: list[int] = []
        self.icount = 0
        self.pa_executed = 0
        self._events = [0] * len(_EVENT_FIELDS)
        self.status: Optional[str] = None
        self.fault: Optional[FaultRecord] = None
        self.marker: Optional[str] = None
        self.markers = {program.labels[m]: m for m in program.markers}
        self._code = [self._decode(i) for i in program.instrs]
        self._tags = [tuple(_EVENT_FIELDS.index(EVENT_TAGS[t]) for t in i.tags if t in EVENT_TAGS)
                      for i in program.instrs]
        self._is_pa = [i.op in PA_OPCODES for i in program.instrs]
        self._tag_hits = [0] * len(program.instrs)

    # -- state views ---------------------------------------------------
    @property
    def sp(self) -> int:
        return self.regs[REG_SP]

    def reg(self, n: int) -> int:
        return 0 if n == REG_ZR else self.regs[n]

    def set_reg(self, n: int, value: int):
        if n != REG_ZR:
            self.regs[n] = value & M64

    @property
    def counters(self) -> EventCounters:
        return EventCounters(*self._events)

    # -- PA primitives -------------------------------------------------
    def _pac(self, key: str, value: int, mod: int) -> int:
        cfg = self.cfg
        k = self.__keys[_KEYS[key]]
        if cfg.is_canonical(value):
            return sign(value, mod, k, cfg)
        # A pointer that already carries upper bits gets a corrupted PAC,
        # so the result can never authenticate.
        good = sign(value & cfg.addr_mask, mod, k, cfg)
        return (good ^ (1 << (cfg.va_bits + cfg.pac_bits - 1))) | cfg.tag_bits(value)

    def _aut(self, key: str, value: int, mod: int) -> int:
        kk = _KEYS[key]
        return authenticate(value, mod, self.__keys[kk], kk, self.cfg)

    def _pacga(self, a: int, b: int) -> int:
        return generic_mac(a, b, self.__keys[Key.GA])

    # -- control transfer ----------------------------------------------
    def _jump(self, target: int):
        target &= M64
        self.mem.check(target, 4, "x")
        if target % 4 or not CODE_BASE <= target < self.code_end:
            raise MachineFault("translation-fault", target)
        self.pc = target

    # -- decoding --------------------------------------------------------
    def _decode(self, ins) -> Callable[[], None]:
        op, ops, n = ins.op, ins.operands, ins.line
        regs = self.regs
        prog = self.program

        def want(k):
            if len(ops) != k:
                raise AsmError(n, f"{op} expects {k} operands, got {len(ops)}")

        def R(i):
            return parse_reg(ops[i], n)

        def W(i):
            r = R(i)
            return _SINK if r == REG_ZR else r

        def mem_operand(text):
            text = text.strip()
            if not (text.startswith("[") and text.endswith("]")):
                raise AsmError(n, f"expected memory operand, got {text!r}")
            parts = [p.strip() for p in text[1:-1].split(",")]
            base = parse_reg(parts[0], n)
            off = parse_imm(parts[1], n) if len(parts) > 1 else 0
            return base, off

        def src2(i):
            """Register or immediate second source; returns a getter."""
            if ops[i].startswith("#"):
                imm = parse_imm(ops[i], n) & M64
                return lambda: imm
            r = R(i)
            return lambda: regs[r]

        def nxt():
            self.pc += 4

        if op in PA_OPCODES:
            return self._decode_pa(ins)
        if op == "nop":
            want(0)
            return nxt
        if op == "hlt":
            def f():
                self.status = "halted"
            return f
        if op == "svc":
            want(1)
            if parse_imm(ops[0], n) != 1:
                raise AsmError(n, "only svc #1 (print x0) is supported")

            def f():
                self.output.append(_signed(regs[0]))
                self.pc += 4
            return f
        if op == "mov":
            want(2)
            d, s = W(0), src2(1)

            def f():
                regs[d] = s()
                self.pc += 4
            return f
        if op == "movk":
            if len(ops) not in (2, 3):
                raise AsmError(n, "movk expects 'movk xd, #imm[, lsl #s]'")
            d, imm = W(0), parse_imm(ops[1], n)
            shift = 0
            if len(ops) == 3:
                parts = ops[2].split()
                if len(parts) != 2 or parts[0] != "lsl":
                    raise AsmError(n, "bad shift")
                shift = parse_imm(parts[1], n)
            if shift not in (0, 16, 32, 48) or not 0 <= imm <= 0xFFFF:
                raise AsmError(n, "movk takes a 16-bit immediate and shift 0/16/32/48")
            clear = M64 ^ (0xFFFF << shift)
            val = imm << shift

            def f():
                regs[d] = (regs[d] & clear) | val
                self.pc += 4
            return f
        if op == "adr":
            want(2)
            d, target = W(0), prog.resolve(ops[1], n)

            def f():
                regs[d] = target
                self.pc += 4
            return f
        if op in ("add", "sub", "mul", "eor"):
            want(3)
            d, a, b = W(0), R(1), src2(2)
            fn = {"add": lambda x, y: x + y, "sub": lambda x, y: x - y,
                  "mul": lambda x, y: x * y, "eor": lambda x, y: x ^ y}[op]

            def f():
                regs[d] = fn(regs[a], b()) & M64
                self.pc += 4
            return f
        if op == "cmp":
            want(2)
            a, b = R(0), src2(1)

            def f():
                self.flags = (_signed(regs[a]), _signed(b()))
                self.pc += 4
            return f
        if op in ("ldr", "str"):
            want(2)
            t = R(0)
            base, off = mem_operand(ops[1])
            mem = self.mem
            if op == "ldr":
                t = _SINK if t == REG_ZR else t

                def f():
                    regs[t] = mem.read64((regs[base] + off) & M64)
                    self.pc += 4
            else:
                def f():
                    mem.write64((regs[base] + off) & M64, regs[t])
                    self.pc += 4
            return f
        if op in ("ldp", "stp"):
            want(3)
            t1, t2 = R(0), R(1)
            base, off = mem_operand(ops[2])
            mem = self.mem
            if op == "ldp":
                def f():
                    addr = (regs[base] + off) & M64
                    v1, v2 = mem.read64(addr), mem.read64(addr + 8)
                    regs[t1], regs[t2] = v1, v2
                    regs[REG_ZR] = 0
                    self.pc += 4
            else:
                def f():
                    addr = (regs[base] + off) & M64
                    mem.write64(addr, regs[t1])
                    mem.write64(addr + 8, regs[t2])
                    self.pc += 4
            return f
        if op == "b" or op.startswith("b."):
            want(1)
            target = prog.resolve(ops[0], n)
            cond = {"b": lambda a, b: True, "b.eq": lambda a, b: a == b,
                    "b.ne": lambda a, b: a != b, "b.lt": lambda a, b: a < b,
                    "b.ge": lambda a, b: a >= b}[op]

            def f():
                if cond(*self.flags):
                    self._jump(target)
                else:
                    self.pc += 4
            return f
        if op == "bl":
            want(1)
            target = prog.resolve(ops[0], n)

            def f():
                ret = self.pc + 4
                self._jump(target)
                regs[30] = ret
            return f
        if op in ("br", "blr", "ret"):
            if op == "ret" and not ops:
                r = 30
            else:
                want(1)
                r = R(0)
            link = op == "blr"

            def f():
                ret = self.pc + 4
                self._jump(regs[r])
                if link:
                    regs[30] = ret
            return f
        raise AsmError(n, f"unsupported opcode {op}")

    def _decode_pa(self, ins):
        op, ops, n = ins.op, ins.operands, ins.line
        key, asrc, msrc, kind = PA_OPCODES[op]
        regs = self.regs

        def R(i):
            if i >= len(ops):
                raise AsmError(n, f"{op}: missing operand")
            return parse_reg(ops[i], n)

        if kind == "ldr":
            if len(ops) != 2:
                raise AsmError(n, f"{op} expects 'xt, [xn, #imm]'")
            t = R(0)
            t = _SINK if t == REG_ZR else t
            text = ops[1].strip()
            if not (text.startswith("[") and text.endswith("]")):
                raise AsmError(n, f"expected memory operand, got {text!r}")
            parts = [p.strip() for p in text[1:-1].split(",")]
            base = parse_reg(parts[0], n)
            off = parse_imm(parts[1], n) if len(parts) > 1 else 0
            mem = self.mem

            def f():
                addr = self._aut(key, regs[base], 0)
                regs[t] = mem.read64((addr + off) & M64)
                self.pc += 4
            return f

        # operand layout per address/modifier source
        idx = 0
        if asrc == "LR":
            a = 30
        elif asrc == "X17":
            a = 17
        else:
            a = R(0)
            idx = 1
        if kind == "generic":
            src_n, m = R(1), R(2)
            idx = 3
        elif msrc == "Xm":
            m = R(idx)
            idx += 1
        elif msrc == "SP":
            m = REG_SP
        elif msrc == "X16":
            m = 16
        else:
            m = REG_ZR
        if len(ops) != idx:
            raise AsmError(n, f"{op}: expected {idx} operands, got {len(ops)}")
        dest = _SINK if a == REG_ZR else a

        if self.pa_disabled:
            # Hint-space behaviour on hardware without PA: nothing happens.
            def f():
                self.pc += 4
            return f
        if kind == "pac":
            def f():
                regs[dest] = self._pac(key, regs[a], regs[m] if m != REG_ZR else 0)
                self.pc += 4
        elif kind == "aut":
            def f():
                regs[dest] = self._aut(key, regs[a], regs[m] if m != REG_ZR else 0)
                self.pc += 4
        elif kind == "strip":
            mask = self.cfg.addr_mask

            def f():
                regs[dest] = regs[a] & mask
                self.pc += 4
        elif kind == "generic":
            def f():
                regs[dest] = self._pacga(regs[src_n], regs[m])
                self.pc += 4
        else:  # ret / br / blr
            link = kind == "blr"

            def f():
                target = self._aut(key, regs[a], regs[m] if m != REG_ZR else 0)
                ret = self.pc + 4
                self._jump(target)
                if link:
                    regs[30] = ret
        return f

    # -- execution -------------------------------------------------------
    def step(self) -> bool:
        """Execute one instruction; False once the machine has stopped."""
        if self.status is not None:
            return False
        pc = self.pc
        if pc in self.markers:
            self.status = "marker"
            self.marker = self.markers[pc]
            return False
        if not CODE_BASE <= pc < self.code_end or pc % 4:
            self._record_fault(MachineFault("translation-fault", pc), pc)
            return False
        i = (pc - CODE_BASE) >> 2
        self.icount += 1
        self._tag_hits[i] += 1
        for t in self._tags[i]:
            self._events[t] += 1
        if self._is_pa[i]:
            self.pa_executed += 1
        try:
            self._code[i]()
        except MachineFault as e:
            self._record_fault(e, pc)
            return False
        return self.status is None

    def _record_fault(self, e: MachineFault, pc: int):
        self.status = "fault"
        fk = None if self.cfg.is_canonical(e.address) else failure_kind(e.address, self.cfg)
        self.fault = FaultRecord(e.kind, pc, e.address, fk)

    def stop(self, status: str = "stopped"):
        self.status = status

    def run(self, fuel: int = DEFAULT_FUEL, hook: Optional[Callable[["Machine"], None]] = None
            ) -> ExitReport:
        step = self.step
        if hook is None:
            while self.status is None and self.icount < fuel:
                step()
        else:
            while self.status is None and self.icount < fuel:
                hook(self)
                if self.status is not None:
                    break
                step()
        if self.status is None:
            self.status = "fuel"
        return self.report()

    def report(self) -> ExitReport:
        return ExitReport(
            status=self.status or "running",
            exit_value=_signed(self.regs[0]) if self.status == "halted" else None,
            fault=self.fault,
            counters=self.counters,
            instructions=self.icount,
            pa_executed=self.pa_executed,
            output=tuple(self.output),
            marker=self.marker,
            tags=self.tag_counts(),
        )

    def tag_counts(self) -> dict:
        out: dict[str, int] = {}
        for ins, hits in zip(self.program.instrs, self._tag_hits):
            if hits:
                for t in ins.tags:
                    out[t] = out.get(t, 0) + hits
        return out

    def run_init(self, label: str, fuel: int = DEFAULT_FUEL):
        """Run a startup routine that returns to the exit stub."""
        main = self.pc
        self.pc = self.program.labels[label]
        self.regs[30] = CODE_BASE
        while self.status is None and self.pc != CODE_BASE and self.icount < fuel:
            self.step()
        self.pc = main


def process_start(program, seed: Optional[int] = None, cfg: VaConfig = DEFAULT_CONFIG,
                  pa_disabled: bool = False) -> Machine:
    """Create a process: fresh keys, run the global initializer, stop at main."""
    if isinstance(program, str):
        program = assemble(program)
    m = Machine(program, KeySet.generate(seed), cfg, pa_disabled)
    if program.global_init:
        m.run_init(program.global_init)
    m.regs[30] = CODE_BASE
    m.regs[REG_SP] = STACK_TOP
    return m


def run(program, seed: Optional[int] = None, fuel: int = DEFAULT_FUEL,
        cfg: VaConfig = DEFAULT_CONFIG, pa_disabled: bool = False, hook=None) -> ExitReport:
    return process_start(program, seed, cfg, pa_disabled).run(fuel, hook)


def privileged_keys(machine: Machine) -> KeySet:
    """Kernel-side access to a process's keys (test oracles only)."""
    return machine._Machine__keys
