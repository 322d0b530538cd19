import pytest

from partsforge.resources import fixture_names, fixture_text
from partsforge.tir import (F64, I64, VOID, ArrayType, FunctionType, PointerType, RecordType,
                            TirError, parse, print_program, size_of, type_encode, type_id)


def corpus_types():
    """Every element type reachable from the fixture programs."""
    out = {}
    for name in fixture_names(".tir"):
        prog = parse(fixture_text(name))
        types = [g.type for g in prog.globals] + list(prog.records.values())
        for fn in prog.functions:
            for t in fn.vreg_types.values():
                types.append(t)
                if isinstance(t, PointerType):
                    types.append(t.pointee)
        for t in types:
            out[type_encode(t)] = t
    return out


def test_corpus_type_ids_match_oracle(type_id_values):
    types = corpus_types()
    for enc, hexid in type_id_values.items():
        assert enc in types, enc
        assert f"{type_id(types[enc]):016x}" == hexid


def test_type_ids_match_independent_keccak():
    import keccak_oracle

    for enc, t in corpus_types().items():
        assert type_id(t) == keccak_oracle.type_id(enc)


def test_structural_identity_across_parses():
    a = corpus_types()
    b = corpus_types()
    assert {k: type_id(v) for k, v in a.items()} == {k: type_id(v) for k, v in b.items()}


def test_records_are_structural():
    r1 = RecordType("A", [("x", I64), ("y", I64)])
    r2 = RecordType("B", [("u", I64), ("v", I64)])
    assert r1 == r2 and type_id(r1) == type_id(r2)


def test_recursive_encoding():
    node = RecordType("Node")
    node.fields = [("val", I64), ("next", PointerType(node))]
    assert type_encode(node) == "rec(i64,p(up(0)))"
    outer = RecordType("Outer")
    inner = RecordType("Inner")
    inner.fields = [("up", PointerType(outer))]
    outer.fields = [("in", inner)]
    assert type_encode(outer) == "rec(rec(p(up(1))))"


def test_distinct_types_distinct_ids():
    ts = [I64, F64, PointerType(I64), PointerType(F64), FunctionType(I64, (I64,)),
          FunctionType(VOID, (I64,)), ArrayType(I64, 2), ArrayType(I64, 3)]
    assert len({type_id(t) for t in ts}) == len(ts)


def test_sizes():
    assert size_of(ArrayType(PointerType(I64), 3)) == 24
    assert size_of(RecordType("R", [("a", I64), ("b", PointerType(I64))])) == 16


@pytest.mark.parametrize("name", fixture_names(".tir"))
def test_print_parse_roundtrip(name):
    prog = parse(fixture_text(name))
    text = print_program(prog)
    assert print_program(parse(text)) == text


BAD = {
    "unknown type": "fn main() -> i64 {\n  %a = const q32 1\n  ret 0\n}\n",
    "undefined register": "fn main() -> i64 {\n  ret %nope\n}\n",
    "self-containing": "record R { a: R }\nfn main() -> i64 {\n  ret 0\n}\n",
    "duplicate": "fn main() -> i64 {\n  ret 0\n}\nfn main() -> i64 {\n  ret 0\n}\n",
    "no main": "fn f() -> i64 {\n  ret 0\n}\n",
    "code to data cast": ("fn f() -> i64 {\n  ret 0\n}\nfn main() -> i64 {\n  %f = addr @f\n"
                          "  %p = bitcast %f to ptr<i64>\n  ret 0\n}\n"),
    "unknown callee": "fn main() -> i64 {\n  %x = call @g()\n  ret 0\n}\n",
    "bad initializer": "global g: ptr<i64> = 5\nfn main() -> i64 {\n  ret 0\n}\n",
}


@pytest.mark.parametrize("what", sorted(BAD))
def test_diagnostics(what):
    with pytest.raises(TirError) as ei:
        parse(BAD[what])
    diags = ei.value.diagnostics
    assert diags
    # line 0 marks a whole-program problem
    assert all(d.line >= 1 for d in diags) or what == "no main"


def test_diagnostic_line_number():
    with pytest.raises(TirError) as ei:
        parse("; comment\n\nfn main() -> i64 {\n  %a = add %b, 1\n  ret 0\n}\n")
    assert ei.value.diagnostics[0].line == 4
