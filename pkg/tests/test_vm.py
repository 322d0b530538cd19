import pytest

from partsforge.pa_core import Key, KeySet, VaConfig, failure_kind, generic_mac, sign
from partsforge.instrument import SchemeSet, lower
from partsforge.resources import fixture_text
from partsforge.tir import parse
from partsforge.vm import (CODE_BASE, PA_OPCODES, AsmError, assemble, privileged_keys,
                           process_start, run)

CFG = VaConfig(39)
PTR = 0x20_1234
MOD = 0xABCD_0000_1234
SP = 0x7F_FF00


def operands(op):
    """Operand text for one PA opcode, using x1 as pointer and x2 as modifier."""
    _, asrc, msrc, kind = PA_OPCODES[op]
    if kind == "generic":
        return "x3, x1, x2"
    if kind == "ldr":
        return "x3, [x1, #8]"
    if asrc in ("LR", "X17"):
        return ""
    return "x1, x2" if msrc == "Xm" else "x1"


def machine_for(op, body=None, seed=3):
    text = f".text\nmain:\n  {body or (op + ' ' + operands(op)).strip()}\n  hlt\ntgt:\n  hlt\n" \
           ".data\nval:\n  .quad 5\n  .quad 77\n"
    m = process_start(assemble(text), seed, CFG)
    return m, m.program.labels


def place(m, op, value, mod):
    """Load the pointer and modifier into the registers the opcode reads."""
    _, asrc, msrc, _ = PA_OPCODES[op]
    reg = {"LR": 30, "X17": 17}.get(asrc, 1)
    m.regs[reg] = value
    m.regs[31] = SP
    if msrc == "Xm":
        m.regs[2] = mod
    elif msrc == "X16":
        m.regs[16] = mod
    return reg


def effective_mod(op, mod):
    msrc = PA_OPCODES[op][2]
    return {"SP": SP, "zero": 0}.get(msrc, mod)


@pytest.mark.parametrize("op", sorted(o for o, r in PA_OPCODES.items() if r[3] == "pac"))
def test_pac_operand_mapping(op):
    m, _ = machine_for(op)
    keys = privileged_keys(m)
    key = Key[PA_OPCODES[op][0]]
    reg = place(m, op, PTR, MOD)
    m.step()
    assert m.regs[reg] == sign(PTR, effective_mod(op, MOD), keys[key], CFG)


@pytest.mark.parametrize("op", sorted(o for o, r in PA_OPCODES.items() if r[3] == "aut"))
def test_aut_operand_mapping(op):
    m, _ = machine_for(op)
    keys = privileged_keys(m)
    key = Key[PA_OPCODES[op][0]]
    reg = place(m, op, sign(PTR, effective_mod(op, MOD), keys[key], CFG), MOD)
    m.step()
    assert m.regs[reg] == PTR
    # the other key of the same class must not authenticate it
    other = {"IA": "IB", "IB": "IA", "DA": "DB", "DB": "DA"}[key.name]
    m, _ = machine_for(op)
    reg = place(m, op, sign(PTR, effective_mod(op, MOD), privileged_keys(m)[Key[other]], CFG),
                MOD)
    m.step()
    want = "instruction" if key.is_instruction else "data"
    assert failure_kind(m.regs[reg], CFG) == want


@pytest.mark.parametrize("op", ["xpacd", "xpaci", "xpaclri"])
def test_strip_mapping(op):
    m, _ = machine_for(op)
    reg = place(m, op, sign(PTR, 1, 99, CFG), 0)
    m.step()
    assert m.regs[reg] == PTR


def test_pacga():
    m, _ = machine_for("pacga")
    m.regs[1], m.regs[2] = PTR, MOD
    m.step()
    assert m.regs[3] == generic_mac(PTR, MOD, privileged_keys(m)[Key.GA])


@pytest.mark.parametrize("op", sorted(o for o, r in PA_OPCODES.items()
                                      if r[3] in ("ret", "br", "blr")))
def test_combined_branch_mapping(op):
    m, labels = machine_for(op)
    key = Key[PA_OPCODES[op][0]]
    target = labels["tgt"]
    start = m.pc
    place(m, op, sign(target, effective_mod(op, MOD), privileged_keys(m)[key], CFG), MOD)
    m.step()
    assert m.status is None and m.pc == target
    if PA_OPCODES[op][3] == "blr":
        assert m.regs[30] == start + 4

    m, labels = machine_for(op)
    place(m, op, sign(target, effective_mod(op, MOD) ^ 1, privileged_keys(m)[key], CFG), MOD)
    rep = m.run()
    assert rep.status == "fault" and rep.fault.failure_kind == "instruction"


@pytest.mark.parametrize("op,key", [("ldraa", Key.DA), ("ldrab", Key.DB)])
def test_combined_load_mapping(op, key):
    m, labels = machine_for(op)
    m.regs[1] = sign(labels["val"], 0, privileged_keys(m)[key], CFG)
    m.step()
    assert m.regs[3] == 77
    m, labels = machine_for(op)
    other = Key.DB if key is Key.DA else Key.DA
    m.regs[1] = sign(labels["val"], 0, privileged_keys(m)[other], CFG)
    rep = m.run()
    assert rep.status == "fault" and rep.fault.failure_kind == "data"


def test_every_opcode_covered():
    kinds = {r[3] for r in PA_OPCODES.values()}
    assert kinds == {"pac", "aut", "strip", "generic", "ret", "br", "blr", "ldr"}
    table = """paciasp pacia paciaz paciza pacia1716 pacibsp pacib pacibz pacizb pacib1716
        pacda pacdza pacdb pacdzb pacga autiasp autia autiaz autiza autia1716 autibsp autib
        autibz autizb autib1716 autda autdza autdb autdzb xpacd xpaci xpaclri retaa retab braa
        braaz brab brabz blraa blraaz blrab blrabz ldraa ldrab""".split()
    # eretaa/eretab need exception levels, which the machine does not model
    assert set(PA_OPCODES) == set(table)


def test_determinism():
    asm = lower(parse(fixture_text("dispatch.tir")), SchemeSet(True, True, True)).assembly
    a, b = run(asm, seed=4), run(asm, seed=4)
    assert a == b


def test_dep_code_not_writable():
    m, labels = machine_for("nop", body="str x1, [x2]")
    m.regs[2] = labels["main"]
    rep = m.run()
    assert rep.status == "fault" and rep.fault.kind == "permission-fault"


def test_dep_data_not_executable():
    m, labels = machine_for("nop", body="br x1")
    m.regs[1] = labels["val"]
    rep = m.run()
    assert rep.status == "fault"
    assert rep.fault.failure_kind is None


def test_unmapped_load_faults():
    m, _ = machine_for("nop", body="ldr x0, [x1]")
    m.regs[1] = 0x1000_0000
    rep = m.run()
    assert rep.status == "fault" and rep.fault.kind == "translation-fault"


def test_signing_non_canonical_never_authenticates():
    m, _ = machine_for("pacia", body="pacia x1, x2\n  autia x1, x2")
    m.regs[1] = PTR | (5 << 39)
    m.regs[2] = MOD
    m.step()
    m.step()
    assert m.regs[1] & ~CFG.addr_mask


def test_process_start_keys_follow_seed():
    a = assemble(".text\nmain:\n  hlt\n")
    assert privileged_keys(process_start(a, 1)) == KeySet.generate(1)
    assert privileged_keys(process_start(a, 1)) != privileged_keys(process_start(a, 2))


def test_exit_stub_and_output():
    rep = run(".text\nmain:\n  mov x0, #7\n  svc #1\n  mov x0, #3\n  ret\n")
    assert rep.status == "halted" and rep.exit_value == 3 and rep.output == (7,)
    assert CODE_BASE == assemble(".text\nmain:\n  ret\n").labels["__exit"]


def test_fuel_exhaustion():
    rep = run(".text\nmain:\nloop:\n  b loop\n", fuel=100)
    assert rep.status == "fuel" and rep.instructions == 100


def test_pa_disabled_nops_and_rejects_combined():
    rep = run(".text\nmain:\n  mov x1, #5\n  pacia x1, x2\n  mov x0, x1\n  ret\n",
              pa_disabled=True)
    assert rep.exit_value == 5
    with pytest.raises(AsmError):
        run(".text\nmain:\n  retaa\n", pa_disabled=True)


@pytest.mark.parametrize("text", ["main:\n  frob x1\n", "main:\n  mov x1\n",
                                  "main:\n  b nowhere\n", "main:\n  pacia x1\n"])
def test_assembler_errors(text):
    with pytest.raises(AsmError):
        run(".text\n" + text)
