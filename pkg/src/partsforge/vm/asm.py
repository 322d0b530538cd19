"""Assembler for the textual ``.tvm`` format.

One instruction per line.  ``label:`` defines a label, ``;`` starts a
comment, and trailing ``!tag`` words annotate an instruction for event
counting.  Directives: ``.text``, ``.data``, ``.quad VALUE|LABEL[+OFF]``,
``.zero N``, ``.global-init LABEL`` and ``.marker LABEL``.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field

CODE_BASE = 0x10000
DATA_BASE = 0x200000
STACK_TOP = 0x800000
STACK_SIZE = 0x40000
EXIT_LABEL = "__exit"

# Table of PA opcodes: key, address source, modifier source, behaviour.
#   Xd: first register operand; LR: x30; X17: x17
#   Xm: second register operand; SP: stack pointer; X16: x16; zero: 0
PA_OPCODES = {
    "paciasp": ("IA", "LR", "SP", "pac"),
    "pacia": ("IA", "Xd", "Xm", "pac"),
    "paciaz": ("IA", "LR", "zero", "pac"),
    "paciza": ("IA", "Xd", "zero", "pac"),
    "pacia1716": ("IA", "X17", "X16", "pac"),
    "pacibsp": ("IB", "LR", "SP", "pac"),
    "pacib": ("IB", "Xd", "Xm", "pac"),
    "pacibz": ("IB", "LR", "zero", "pac"),
    "pacizb": ("IB", "Xd", "zero", "pac"),
    "pacib1716": ("IB", "X17", "X16", "pac"),
    "pacda": ("DA", "Xd", "Xm", "pac"),
    "pacdza": ("DA", "Xd", "zero", "pac"),
    "pacdb": ("DB", "Xd", "Xm", "pac"),
    "pacdzb": ("DB", "Xd", "zero", "pac"),
    "pacga": ("GA", "Xn", "Xm", "generic"),
    "autiasp": ("IA", "LR", "SP", "aut"),
    "autia": ("IA", "Xd", "Xm", "aut"),
    "autiaz": ("IA", "LR", "zero", "aut"),
    "autiza": ("IA", "Xd", "zero", "aut"),
    "autia1716": ("IA", "X17", "X16", "aut"),
    "autibsp": ("IB", "LR", "SP", "aut"),
    "autib": ("IB", "Xd", "Xm", "aut"),
    "autibz": ("IB", "LR", "zero", "aut"),
    "autizb": ("IB", "Xd", "zero", "aut"),
    "autib1716": ("IB", "X17", "X16", "aut"),
    "autda": ("DA", "Xd", "Xm", "aut"),
    "autdza": ("DA", "Xd", "zero", "aut"),
    "autdb": ("DB", "Xd", "Xm", "aut"),
    "autdzb": ("DB", "Xd", "zero", "aut"),
    "xpacd": (None, "Xd", None, "strip"),
    "xpaci": (None, "Xd", None, "strip"),
    "xpaclri": (None, "LR", None, "strip"),
    "retaa": ("IA", "LR", "SP", "ret"),
    "retab": ("IB", "LR", "SP", "ret"),
    "braa": ("IA", "Xd", "Xm", "br"),
    "braaz": ("IA", "Xd", "zero", "br"),
    "brab": ("IB", "Xd", "Xm", "br"),
    "brabz": ("IB", "Xd", "zero", "br"),
    "blraa": ("IA", "Xd", "Xm", "blr"),
    "blraaz": ("IA", "Xd", "zero", "blr"),
    "blrab": ("IB", "Xd", "Xm", "blr"),
    "blrabz": ("IB", "Xd", "zero", "blr"),
    "ldraa": ("DA", "Xd", "zero", "ldr"),
    "ldrab": ("DB", "Xd", "zero", "ldr"),
}
COMBINED_KINDS = ("ret", "br", "blr", "ldr")
COMBINED_OPCODES = frozenset(op for op, row in PA_OPCODES.items() if row[3] in COMBINED_KINDS)

PLAIN_OPCODES = frozenset("""mov movk adr add sub mul eor cmp ldr str ldp stp b b.eq b.ne b.lt
    b.ge bl blr br ret svc hlt nop""".split())

EVENT_TAGS = {
    "nonleaf-entry": "non_leaf_calls",
    "leaf-entry": "leaf_calls",
    "cptr-create": "code_ptrs_created",
    "icall": "indirect_calls",
    "dptr": "data_ptr_loads_stores",
}
KNOWN_TAGS = frozenset(EVENT_TAGS) | {"comp", "modset"}

REG_SP = 31
REG_ZR = 32
LABEL_RE = r"[A-Za-z_.$][A-Za-z0-9_.$]*"


class AsmError(ValueError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class AsmInstr:
    op: str
    operands: list
    tags: tuple
    text: str
    line: int
    addr: int = 0


@dataclass
class AsmProgram:
    instrs: list
    labels: dict  # name -> absolute address
    data: bytearray
    data_relocs: list  # (offset in data, label, addend)
    global_init: str | None = None
    markers: list = field(default_factory=list)
    source: str = ""

    @property
    def code_end(self) -> int:
        return CODE_BASE + 4 * len(self.instrs)

    def instr_at(self, addr: int) -> AsmInstr:
        return self.instrs[(addr - CODE_BASE) >> 2]

    def code_bytes(self) -> bytes:
        """Stand-in machine code: CRC32 of each instruction's text."""
        return b"".join(zlib.crc32(i.text.encode()).to_bytes(4, "little") for i in self.instrs)

    def resolve(self, name: str, line: int = 0) -> int:
        label, _, off = name.partition("+")
        if label not in self.labels:
            raise AsmError(line, f"undefined label {label}")
        return self.labels[label] + (int(off, 0) if off else 0)


def parse_reg(tok: str, line: int) -> int:
    tok = tok.strip().lower()
    if tok == "sp":
        return REG_SP
    if tok == "xzr":
        return REG_ZR
    if tok == "fp":
        return 29
    if tok == "lr":
        return 30
    m = re.fullmatch(r"x(\d+)", tok)
    if m and int(m.group(1)) <= 30:
        return int(m.group(1))
    raise AsmError(line, f"bad register {tok!r}")


def parse_imm(tok: str, line: int) -> int:
    tok = tok.strip()
    if not tok.startswith("#"):
        raise AsmError(line, f"expected immediate, got {tok!r}")
    try:
        return int(tok[1:], 0)
    except ValueError:
        raise AsmError(line, f"bad immediate {tok!r}") from None


def split_operands(text: str) -> list:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def split_line(raw: str):
    """Return (label, body, tags) of one source line."""
    text = raw.split(";", 1)[0].strip()
    tags = []
    while True:
        m = re.search(r"\s*!([A-Za-z0-9_-]+)$", text)
        if not m:
            break
        tags.insert(0, m.group(1))
        text = text[:m.start()].rstrip()
    label = None
    m = re.match(rf"({LABEL_RE}):\s*(.*)$", text)
    if m:
        label, text = m.group(1), m.group(2).strip()
    return label, text, tuple(tags)


def assemble(text: str) -> AsmProgram:
    instrs = [AsmInstr("hlt", [], (), "hlt", 0)]
    labels = {EXIT_LABEL: CODE_BASE}
    data = bytearray()
    relocs = []
    global_init = None
    markers = []
    section = "text"
    for n, raw in enumerate(text.splitlines(), 1):
        label, body, tags = split_line(raw)
        if label is not None:
            if label in labels:
                raise AsmError(n, f"duplicate label {label}")
            labels[label] = CODE_BASE + 4 * len(instrs) if section == "text" else DATA_BASE + len(data)
        if not body:
            if tags:
                raise AsmError(n, "tags without an instruction")
            continue
        for t in tags:
            if t not in KNOWN_TAGS:
                raise AsmError(n, f"unknown tag !{t}")
        if body.startswith("."):
            d, _, arg = body.partition(" ")
            arg = arg.strip()
            if d == ".text":
                section = "text"
            elif d == ".data":
                section = "data"
            elif d == ".global-init":
                global_init = arg
            elif d == ".marker":
                markers.append(arg)
            elif d in (".quad", ".zero"):
                if section != "data":
                    raise AsmError(n, f"{d} outside .data")
                if d == ".zero":
                    data.extend(bytes(int(arg, 0)))
                else:
                    try:
                        val = int(arg, 0)
                    except ValueError:
                        if not re.fullmatch(rf"{LABEL_RE}(\+(0x[0-9a-fA-F]+|\d+))?", arg):
                            raise AsmError(n, f"bad .quad operand {arg!r}") from None
                        relocs.append((len(data), arg, n))
                        val = 0
                    data.extend((val & (2**64 - 1)).to_bytes(8, "little"))
            else:
                raise AsmError(n, f"unknown directive {d}")
            continue
        if section != "text":
            raise AsmError(n, "instruction in .data section")
        op, _, rest = body.partition(" ")
        op = op.lower()
        if op not in PLAIN_OPCODES and op not in PA_OPCODES:
            raise AsmError(n, f"unknown opcode {op!r}")
        instrs.append(AsmInstr(op, split_operands(rest), tags, body, n))
    for i, ins in enumerate(instrs):
        ins.addr = CODE_BASE + 4 * i
    prog = AsmProgram(instrs, labels, data, relocs, global_init, markers, text)
    for off, name, n in relocs:
        prog.data[off:off + 8] = prog.resolve(name, n).to_bytes(8, "little")
    for name in ([global_init] if global_init else []) + markers + ["main"]:
        if name not in labels:
            raise AsmError(0, f"undefined label {name}")
    return prog
