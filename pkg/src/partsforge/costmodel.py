"""Event counting, a cycle model for PA instructions, and the PA-analogue rewrite."""

from __future__ import annotations

from dataclasses import dataclass

from .events import EventCounters
from .instrument import SchemeSet
from .vm.asm import PA_OPCODES, split_line, split_operands

__all__ = ["EventCounters", "CycleModel", "count_events", "estimate_overhead",
           "pa_analogue_rewrite", "ANALOGUE_CONSTANTS"]

ANALOGUE_CONSTANTS = (2, 3, 5)


@dataclass(frozen=True)
class CycleModel:
    pa_instr_cycles: int = 4
    modifier_setup_cycles: tuple = (2, 4)

    def __post_init__(self):
        lo, hi = self.modifier_setup_cycles
        if self.pa_instr_cycles < 0 or not 0 <= lo <= hi:
            raise ValueError("cycle counts must be non-negative with lo <= hi")

    @property
    def per_pac_op_cycles(self) -> tuple:
        lo, hi = self.modifier_setup_cycles
        return (self.pa_instr_cycles + lo, self.pa_instr_cycles + hi)

    @property
    def per_nonleaf_call_cycles(self) -> tuple:
        lo, hi = self.per_pac_op_cycles
        return (2 * lo, 2 * hi)


def count_events(report) -> EventCounters:
    """Dynamic event counts of a finished run."""
    return report.counters


def estimate_overhead(counters: EventCounters, model: CycleModel = CycleModel(),
                      schemes: SchemeSet = SchemeSet(True, True, True)) -> tuple:
    """Modeled extra cycles (lo, hi) for the enabled schemes.  Leaf calls cost nothing."""
    op_lo, op_hi = model.per_pac_op_cycles
    call_lo, call_hi = model.per_nonleaf_call_cycles
    lo = hi = 0
    if schemes.ras:
        lo += counters.non_leaf_calls * call_lo
        hi += counters.non_leaf_calls * call_hi
    if schemes.cps:
        n = counters.code_ptrs_created + counters.indirect_calls
        lo += n * op_lo
        hi += n * op_hi
    if schemes.dps:
        lo += counters.data_ptr_loads_stores * op_lo
        hi += counters.data_ptr_loads_stores * op_hi
    return lo, hi


def _analogue(pointer: str, modifier: str, tags: str, value_preserving: bool) -> list:
    out = [f"eor {pointer}, {pointer}, #{c}" for c in ANALOGUE_CONSTANTS]
    out.append(f"eor {pointer}, {pointer}, {modifier}")
    out = ["  " + ln for ln in out]
    if tags:
        out[0] += tags
    if value_preserving:
        # Undo the four eors: the constants fold to 2^3^5 = 4.
        out.append(f"  eor {pointer}, {pointer}, {modifier} !comp")
        out.append(f"  eor {pointer}, {pointer}, #4 !comp")
    return out


def pa_analogue_rewrite(asm: str, value_preserving: bool = False) -> str:
    """Replace each PA instruction by four exclusive-ors on its pointer
    register (three constants, then the modifier).  Combined forms become
    the analogue followed by the plain branch, return or load.  Forms whose
    modifier is SP first copy SP to x17, since eor cannot read SP."""
    out = []
    for raw in asm.splitlines():
        label, body, tags = split_line(raw)
        op = body.split(" ", 1)[0].lower() if body else ""
        if op not in PA_OPCODES:
            out.append(raw)
            continue
        if label:
            out.append(f"{label}:")
        tag_text = "".join(f" !{t}" for t in tags)
        _, asrc, msrc, kind = PA_OPCODES[op]
        ops = split_operands(body.partition(" ")[2])
        if kind == "ldr":
            inner = ops[1].strip()[1:-1].split(",")
            ptr = inner[0].strip()
        elif asrc == "LR":
            ptr = "x30"
        elif asrc == "X17":
            ptr = "x17"
        else:
            ptr = ops[0]
        if kind == "generic":
            out.append(f"  eor {ops[0]}, {ops[1]}, {ops[2]}{tag_text}")
            out.extend(f"  eor {ops[0]}, {ops[0]}, #{c}" for c in ANALOGUE_CONSTANTS)
            continue
        if msrc == "Xm":
            mod = ops[1] if kind != "ldr" else "xzr"
        elif msrc == "SP":
            mod = "sp"
        elif msrc == "X16":
            mod = "x16"
        else:
            mod = "xzr"
        if mod == "sp":
            # eor cannot read SP; go through a scratch copy in x17
            seq = [f"  mov x17, sp{tag_text}"] + _analogue(ptr, "x17", "", value_preserving)
        else:
            seq = _analogue(ptr, mod, tag_text, value_preserving)
        out.extend(seq)
        if kind == "ret":
            out.append("  ret")
        elif kind == "br":
            out.append(f"  br {ptr}")
        elif kind == "blr":
            out.append(f"  blr {ptr}")
        elif kind == "ldr":
            out.append(f"  ldr {ops[0]}, {ops[1]}")
    return "\n".join(out) + "\n"
