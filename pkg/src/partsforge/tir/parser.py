"""Parser, type checker and canonical printer for ``.tir`` text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import types as T
from .program import (ARITH_OPS, CONDS, AddrOf, Instr, Label, Operand, TirFunction,
                      TirGlobal, TirProgram)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


class TirError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class _Fail(Exception):
    pass


IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
VREG = r"%[A-Za-z0-9_.]+"
_TOKEN = re.compile(r"\s*(->|[A-Za-z_][A-Za-z0-9_]*|-?0x[0-9A-Fa-f]+|-?\d+|[<>(),\[\]])")


class _TypeParser:
    def __init__(self, text, records):
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise _Fail(f"bad type syntax near {text[pos:]!r}")
            self.toks.append(m.group(1))
            pos = m.end()
        self.i = 0
        self.records = records

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect=None):
        tok = self.peek()
        if tok is None or (expect is not None and tok != expect):
            raise _Fail(f"expected {expect or 'type'}, found {tok!r}")
        self.i += 1
        return tok

    def parse(self):
        t = self.type()
        if self.peek() is not None:
            raise _Fail(f"trailing tokens in type: {' '.join(self.toks[self.i:])}")
        return t

    def type(self):
        tok = self.take()
        if re.fullmatch(r"i(8|16|32|64)", tok):
            return T.IntType(int(tok[1:]))
        if tok in ("f32", "f64"):
            return T.FloatType(int(tok[1:]))
        if tok == "void":
            return T.VOID
        if tok == "ptr":
            self.take("<")
            inner = self.type()
            self.take(">")
            return T.PointerType(inner)
        if tok == "fn":
            self.take("(")
            params = []
            if self.peek() != ")":
                params.append(self.type())
                while self.peek() == ",":
                    self.take(",")
                    params.append(self.type())
            self.take(")")
            self.take("->")
            return T.FunctionType(self.type(), tuple(params))
        if tok == "[":
            n = self.take()
            if not n.isdigit():
                raise _Fail(f"array length must be a number, got {n!r}")
            self.take("x")
            elem = self.type()
            self.take("]")
            return T.ArrayType(elem, int(n))
        if tok in self.records:
            return self.records[tok]
        raise _Fail(f"unknown type {tok!r}")


def _split_top(text, sep=","):
    """Split on ``sep`` at bracket depth zero."""
    parts, depth, cur = [], 0, ""
    for i, ch in enumerate(text):
        if ch in "<([{":
            depth += 1
        elif ch in ">)]}" and not (ch == ">" and i and text[i - 1] == "-"):
            depth -= 1
        if ch == sep and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip() or parts:
        parts.append(cur)
    return [p.strip() for p in parts]


def _matching_paren(text, start):
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "(":
            depth += 1
        elif text[i] == ")":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _int(text):
    return int(text, 0)


class Parser:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.diags = []
        self.records = {}
        self.record_lines = {}

    def error(self, line, msg):
        self.diags.append(Diagnostic(line, msg))

    def type_of(self, text, line):
        return _TypeParser(text, self.records).parse()

    def parse(self) -> TirProgram:
        cleaned = [(n + 1, ln.split(";", 1)[0].strip()) for n, ln in enumerate(self.lines)]
        # Record names first, so declarations may refer to each other.
        rec_re = re.compile(rf"record\s+({IDENT})\s*\{{(.*)\}}$")
        for n, ln in cleaned:
            m = rec_re.match(ln)
            if m:
                if m.group(1) in self.records:
                    self.error(n, f"duplicate record {m.group(1)}")
                self.records[m.group(1)] = T.RecordType(m.group(1))
                self.record_lines[m.group(1)] = n
        globals_, functions, markers = [], [], []
        i = 0
        while i < len(cleaned):
            n, ln = cleaned[i]
            i += 1
            if not ln:
                continue
            try:
                if ln.startswith("record"):
                    m = rec_re.match(ln)
                    if not m:
                        raise _Fail("malformed record declaration")
                    rec = self.records[m.group(1)]
                    for part in _split_top(m.group(2)):
                        fm = re.fullmatch(rf"({IDENT})\s*:\s*(.+)", part)
                        if not fm:
                            raise _Fail(f"malformed field {part!r}")
                        rec.fields.append((fm.group(1), self.type_of(fm.group(2), n)))
                elif ln.startswith(("global ", "static ")):
                    globals_.append(self.parse_global(ln, n))
                elif ln.startswith("marker "):
                    markers.append((ln.split(None, 1)[1].strip(), n))
                elif ln.startswith("fn "):
                    body = []
                    while i < len(cleaned) and cleaned[i][1] != "}":
                        body.append(cleaned[i])
                        i += 1
                    if i >= len(cleaned):
                        raise _Fail("missing closing '}' for function")
                    i += 1
                    functions.append(self.parse_function(ln, n, body))
                else:
                    raise _Fail(f"unexpected top-level text {ln!r}")
            except _Fail as e:
                self.error(n, str(e))
        prog = TirProgram(self.records, globals_, functions, [m for m, _ in markers])
        if not self.diags:
            Checker(prog, self.diags, dict(markers), self.record_lines).check()
        if self.diags:
            raise TirError(sorted(self.diags, key=lambda d: d.line))
        return prog

    def parse_init(self, text):
        text = text.strip()
        if text == "null":
            return None
        if text.startswith("&"):
            return AddrOf(text[1:].strip())
        if text[:1] in "{[":
            closing = "}" if text[0] == "{" else "]"
            if not text.endswith(closing):
                raise _Fail(f"unbalanced initializer {text!r}")
            return [self.parse_init(p) for p in _split_top(text[1:-1])]
        try:
            return _int(text)
        except ValueError:
            try:
                return float(text)
            except ValueError:
                raise _Fail(f"bad initializer {text!r}") from None

    def parse_global(self, ln, n):
        m = re.fullmatch(rf"(global|static)\s+({IDENT})\s*:\s*(.+?)(?:\s*=\s*(.+))?", ln)
        if not m:
            raise _Fail("malformed global declaration")
        init = self.parse_init(m.group(4)) if m.group(4) else None
        return TirGlobal(m.group(2), self.type_of(m.group(3), n), init,
                         static=m.group(1) == "static", line=n)

    def parse_function(self, ln, n, body):
        m = re.match(rf"fn\s+({IDENT})\s*\(", ln)
        close = _matching_paren(ln, m.end() - 1) if m else -1
        tail = re.fullmatch(r"\s*->\s*(.+?)\s*\{", ln[close + 1:]) if close > 0 else None
        if not tail:
            raise _Fail("malformed function header (expected 'fn name(params) -> type {')")
        params = []
        for part in _split_top(ln[m.end():close]):
            pm = re.fullmatch(rf"(%{IDENT})\s*:\s*(.+)", part)
            if not pm:
                raise _Fail(f"malformed parameter {part!r}")
            params.append((pm.group(1), self.type_of(pm.group(2), n)))
        fn = TirFunction(m.group(1), params, self.type_of(tail.group(1), n), [], line=n)
        for bn, bl in body:
            if not bl:
                continue
            try:
                fn.body.append(self.parse_instr(bl, bn))
            except _Fail as e:
                self.error(bn, str(e))
        return fn

    def operand(self, text):
        text = text.strip()
        if re.fullmatch(VREG, text):
            return Operand("vreg", text)
        if text == "null":
            return Operand("null")
        try:
            return Operand("int", _int(text))
        except ValueError:
            raise _Fail(f"bad operand {text!r}") from None

    def parse_call_args(self, text):
        return tuple(self.operand(a) for a in _split_top(text)) if text.strip() else ()

    def parse_instr(self, ln, n):
        m = re.fullmatch(rf"({IDENT}):", ln)
        if m:
            return Label(m.group(1), n)
        dest = None
        m = re.fullmatch(rf"({VREG})\s*=\s*(.+)", ln)
        if m:
            dest, ln = m.group(1), m.group(2).strip()
        op, _, rest = ln.partition(" ")
        rest = rest.strip()
        need_dest = op in ("const", "alloca", "load", "addr", "field", "index", "bitcast") + ARITH_OPS
        if need_dest and dest is None:
            raise _Fail(f"'{op}' needs a destination register")
        if op in ("store", "br", "jmp", "ret", "print") and dest is not None:
            raise _Fail(f"'{op}' produces no value")
        if op == "const":
            tm = re.fullmatch(r"(.+)\s+(\S+)", rest)
            if not tm:
                raise _Fail("expected 'const TYPE VALUE'")
            ty = self.type_of(tm.group(1), n)
            lit = tm.group(2)
            if lit == "null":
                val = Operand("null")
            elif isinstance(ty, T.FloatType):
                try:
                    val = Operand("float", float(lit))
                except ValueError:
                    raise _Fail(f"bad float literal {lit!r}") from None
            else:
                val = self.operand(lit)
            return Instr("const", dest, (val,), type=ty, line=n)
        if op == "alloca":
            return Instr("alloca", dest, type=self.type_of(rest, n), line=n)
        if op == "load":
            return Instr("load", dest, (self.operand(rest),), line=n)
        if op == "store":
            parts = _split_top(rest)
            if len(parts) != 2:
                raise _Fail("expected 'store VALUE, POINTER'")
            return Instr("store", None, tuple(self.operand(p) for p in parts), line=n)
        if op == "addr":
            am = re.fullmatch(rf"@({IDENT})", rest)
            if not am:
                raise _Fail("expected 'addr @name'")
            return Instr("addr", dest, name=am.group(1), line=n)
        if op == "field":
            parts = _split_top(rest)
            if len(parts) != 2 or not re.fullmatch(IDENT, parts[1]):
                raise _Fail("expected 'field POINTER, FIELDNAME'")
            return Instr("field", dest, (self.operand(parts[0]),), name=parts[1], line=n)
        if op == "index":
            parts = _split_top(rest)
            if len(parts) != 2:
                raise _Fail("expected 'index POINTER, INDEX'")
            return Instr("index", dest, tuple(self.operand(p) for p in parts), line=n)
        if op == "call":
            cm = re.fullmatch(rf"@({IDENT})\s*\((.*)\)", rest)
            if not cm:
                raise _Fail("expected 'call @name(args)'")
            return Instr("call", dest, self.parse_call_args(cm.group(2)), name=cm.group(1), line=n)
        if op == "icall":
            cm = re.fullmatch(rf"({VREG})\s*\((.*)\)", rest)
            if not cm:
                raise _Fail("expected 'icall %fp(args)'")
            args = (Operand("vreg", cm.group(1)),) + self.parse_call_args(cm.group(2))
            return Instr("icall", dest, args, line=n)
        if op == "bitcast":
            bm = re.fullmatch(rf"({VREG})\s+to\s+(.+)", rest)
            if not bm:
                raise _Fail("expected 'bitcast %p to TYPE'")
            return Instr("bitcast", dest, (self.operand(bm.group(1)),),
                         type=self.type_of(bm.group(2), n), line=n)
        if op in ARITH_OPS:
            parts = _split_top(rest)
            if len(parts) != 2:
                raise _Fail(f"expected '{op} A, B'")
            return Instr(op, dest, tuple(self.operand(p) for p in parts), line=n)
        if op == "br":
            cond, _, tail = rest.partition(" ")
            parts = _split_top(tail)
            if cond not in CONDS or len(parts) != 4:
                raise _Fail("expected 'br eq|ne|lt|ge A, B, LTRUE, LFALSE'")
            return Instr("br", None, tuple(self.operand(p) for p in parts[:2]), cond=cond,
                         targets=(parts[2], parts[3]), line=n)
        if op == "jmp":
            if not re.fullmatch(IDENT, rest):
                raise _Fail("expected 'jmp LABEL'")
            return Instr("jmp", None, targets=(rest,), line=n)
        if op == "ret":
            return Instr("ret", None, (self.operand(rest),) if rest else (), line=n)
        if op == "print":
            return Instr("print", None, (self.operand(rest),), line=n)
        raise _Fail(f"unknown instruction {op!r}")


class Checker:
    """Name resolution and type checking; fills ``vreg_types``."""

    def __init__(self, prog, diags, marker_lines, record_lines=None):
        self.prog = prog
        self.diags = diags
        self.marker_lines = marker_lines
        self.record_lines = record_lines or {}
        self.funcs = {f.name: f for f in prog.functions}
        self.globs = {g.name: g for g in prog.globals}

    def error(self, line, msg):
        self.diags.append(Diagnostic(line, msg))

    def check(self):
        for rec in self.prog.records.values():
            if self._contains_by_value(rec, rec, set()):
                self.error(self.record_lines.get(rec.name, 0),
                           f"record {rec.name} contains itself by value")
        names = {}
        for item in list(self.prog.globals) + list(self.prog.functions):
            if item.name in names:
                self.error(item.line, f"duplicate definition of {item.name}")
            names[item.name] = item
        mains = [f for f in self.prog.functions if f.name == "main"]
        if not mains:
            self.error(0, "program defines no 'main'")  # line 0: the whole program
        elif len(mains) > 1:
            self.error(mains[1].line, "program must define exactly one 'main'")
        elif mains[0].params:
            self.error(mains[0].line, "main takes no parameters")
        for m in self.prog.markers:
            if m not in self.funcs:
                self.error(self.marker_lines.get(m, 0), f"marker {m} is not a function")
        for g in self.prog.globals:
            self.check_init(g.type, g.init, g.line)
        for f in self.prog.functions:
            self.check_function(f)

    def _contains_by_value(self, rec, target, seen):
        for _, ft in rec.fields:
            while isinstance(ft, T.ArrayType):
                ft = ft.elem
            if isinstance(ft, T.RecordType):
                if ft is target:
                    return True
                if ft.name not in seen:
                    seen.add(ft.name)
                    if self._contains_by_value(ft, target, seen):
                        return True
        return False

    def addr_type(self, name, line):
        if name in self.globs:
            return T.PointerType(self.globs[name].type)
        if name in self.funcs:
            return T.PointerType(self.funcs[name].signature)
        self.error(line, f"unresolved name {name}")
        return None

    def check_init(self, ty, init, line):
        if init is None:
            if not isinstance(ty, (T.PointerType, T.IntType, T.FloatType, T.RecordType,
                                   T.ArrayType)):
                self.error(line, f"cannot zero-initialize {T.type_text(ty)}")
            return
        if isinstance(init, AddrOf):
            at = self.addr_type(init.name, line)
            if at is not None and at != ty:
                self.error(line, f"initializer &{init.name} has type {T.type_text(at)}, "
                                 f"expected {T.type_text(ty)}")
        elif isinstance(init, list):
            if isinstance(ty, T.RecordType):
                subs = [ft for _, ft in ty.fields]
            elif isinstance(ty, T.ArrayType):
                subs = [ty.elem] * ty.length
            else:
                self.error(line, f"aggregate initializer for {T.type_text(ty)}")
                return
            if len(subs) != len(init):
                self.error(line, f"{T.type_text(ty)} needs {len(subs)} initializers, got {len(init)}")
                return
            for st, si in zip(subs, init):
                self.check_init(st, si, line)
        elif isinstance(init, float):
            if not isinstance(ty, T.FloatType):
                self.error(line, f"float initializer for {T.type_text(ty)}")
        elif isinstance(init, int):
            if not isinstance(ty, (T.IntType, T.FloatType)):
                self.error(line, f"integer initializer for {T.type_text(ty)}")

    def check_function(self, f):
        vt = dict(f.params)
        labels = {i.name for i in f.body if isinstance(i, Label)}
        seen_labels = set()
        for item in f.body:
            if isinstance(item, Label):
                if item.name in seen_labels:
                    self.error(item.line, f"duplicate label {item.name}")
                seen_labels.add(item.name)
                continue
            try:
                ty = self.instr_type(f, item, vt, labels)
            except _Fail as e:
                self.error(item.line, str(e))
                continue
            if item.dest is not None and ty is not None:
                if item.dest in vt and vt[item.dest] != ty:
                    self.error(item.line, f"{item.dest} redefined with type {T.type_text(ty)}, "
                                          f"was {T.type_text(vt[item.dest])}")
                else:
                    vt.setdefault(item.dest, ty)
        f.vreg_types = vt

    def opty(self, op, vt):
        if op.kind == "vreg":
            if op.value not in vt:
                raise _Fail(f"use of undefined register {op.value}")
            return vt[op.value]
        return op.kind  # "int" / "null" literals

    @staticmethod
    def compatible(actual, expected):
        if actual == "int":
            return isinstance(expected, T.IntType)
        if actual == "null":
            return isinstance(expected, T.PointerType)
        return actual == expected

    def instr_type(self, f, ins, vt, labels):
        op = ins.op
        if op == "const":
            val = ins.args[0]
            if isinstance(ins.type, T.PointerType):
                if val.kind != "null" and not (val.kind == "int" and val.value == 0):
                    raise _Fail("pointer constants must be null")
            elif isinstance(ins.type, T.FloatType):
                if val.kind not in ("float", "int"):
                    raise _Fail("bad float constant")
            elif not isinstance(ins.type, T.IntType) or val.kind != "int":
                raise _Fail(f"bad constant of type {T.type_text(ins.type)}")
            return ins.type
        if op == "alloca":
            T.size_of(ins.type)
            return T.PointerType(ins.type)
        if op == "load":
            pt = self.opty(ins.args[0], vt)
            if not T.is_data_pointer(pt):
                raise _Fail(f"load through non-data-pointer {ins.args[0]}")
            if isinstance(pt.pointee, (T.RecordType, T.ArrayType, T.VoidType)):
                raise _Fail("load of aggregate values is not supported; use field/index")
            return pt.pointee
        if op == "store":
            vty, pty = self.opty(ins.args[0], vt), self.opty(ins.args[1], vt)
            if not T.is_data_pointer(pty):
                raise _Fail(f"store through non-data-pointer {ins.args[1]}")
            if not self.compatible(vty, pty.pointee):
                raise _Fail(f"type mismatch: storing {_tname(vty)} through "
                            f"{T.type_text(pty)}")
            return None
        if op == "addr":
            at = self.addr_type(ins.name, ins.line)
            if at is None:
                raise _Fail(f"unresolved name {ins.name}")
            return at
        if op == "field":
            pt = self.opty(ins.args[0], vt)
            if not (isinstance(pt, T.PointerType) and isinstance(pt.pointee, T.RecordType)):
                raise _Fail("field needs a pointer to a record")
            try:
                idx = pt.pointee.field_index(ins.name)
            except KeyError:
                raise _Fail(f"record {pt.pointee.name} has no field {ins.name}") from None
            return T.PointerType(pt.pointee.fields[idx][1])
        if op == "index":
            pt, it = self.opty(ins.args[0], vt), self.opty(ins.args[1], vt)
            if not (isinstance(pt, T.PointerType) and isinstance(pt.pointee, T.ArrayType)):
                raise _Fail("index needs a pointer to an array")
            if not self.compatible(it, T.I64) and not isinstance(it, T.IntType):
                raise _Fail("array index must be an integer")
            return T.PointerType(pt.pointee.elem)
        if op in ("call", "icall"):
            if op == "call":
                if ins.name not in self.funcs:
                    raise _Fail(f"call to unknown function {ins.name}")
                sig = self.funcs[ins.name].signature
                args = ins.args
            else:
                ft = self.opty(ins.args[0], vt)
                if not T.is_code_pointer(ft):
                    raise _Fail(f"icall through {_tname(ft)}, expected pointer to function")
                sig, args = ft.pointee, ins.args[1:]
            if len(args) != len(sig.params):
                raise _Fail(f"call passes {len(args)} arguments, expected {len(sig.params)}")
            if len(args) > 8:
                raise _Fail("more than 8 arguments")
            for a, pt in zip(args, sig.params):
                if not self.compatible(self.opty(a, vt), pt):
                    raise _Fail(f"type mismatch at call: argument {a} is "
                                f"{_tname(self.opty(a, vt))}, expected {T.type_text(pt)}")
            if ins.dest is not None and isinstance(sig.ret, T.VoidType):
                raise _Fail("void call result assigned to a register")
            return None if isinstance(sig.ret, T.VoidType) else sig.ret
        if op == "bitcast":
            st = self.opty(ins.args[0], vt)
            if not isinstance(st, T.PointerType) or not isinstance(ins.type, T.PointerType):
                raise _Fail("bitcast converts pointer to pointer only")
            if T.is_code_pointer(st) != T.is_code_pointer(ins.type):
                raise _Fail("bitcast cannot convert between code and data pointers")
            return ins.type
        if op in ARITH_OPS:
            tys = [self.opty(a, vt) for a in ins.args]
            for t in tys:
                if t != "int" and not isinstance(t, T.IntType):
                    raise _Fail(f"{op} needs integer operands")
            real = [t for t in tys if t != "int"]
            if len(real) == 2 and real[0] != real[1]:
                raise _Fail(f"{op} operand widths differ")
            return real[0] if real else T.I64
        if op == "br":
            for tgt in ins.targets:
                if tgt not in labels:
                    raise _Fail(f"unknown label {tgt}")
            a, b = (self.opty(x, vt) for x in ins.args)
            if not _comparable(a, b):
                raise _Fail(f"cannot compare {_tname(a)} with {_tname(b)}")
            return None
        if op == "jmp":
            if ins.targets[0] not in labels:
                raise _Fail(f"unknown label {ins.targets[0]}")
            return None
        if op == "ret":
            if isinstance(f.ret, T.VoidType):
                if ins.args:
                    raise _Fail("void function returns a value")
            elif not ins.args or not self.compatible(self.opty(ins.args[0], vt), f.ret):
                raise _Fail(f"return type mismatch, expected {T.type_text(f.ret)}")
            return None
        if op == "print":
            t = self.opty(ins.args[0], vt)
            if isinstance(t, (T.RecordType, T.ArrayType)):
                raise _Fail("cannot print an aggregate")
            return None
        raise _Fail(f"unknown op {op}")


def _comparable(a, b):
    def cls(t):
        if t == "int" or isinstance(t, T.IntType):
            return "int"
        if t == "null" or isinstance(t, T.PointerType):
            return "ptr"
        return None
    if cls(a) is None or cls(a) != cls(b):
        return False
    if cls(a) == "ptr" and not isinstance(a, str) and not isinstance(b, str):
        return a == b
    return True


def _tname(t):
    return t + " literal" if isinstance(t, str) else T.type_text(t)


def parse(text: str) -> TirProgram:
    return Parser(text).parse()


def _init_text(init):
    if init is None:
        return "null"
    if isinstance(init, list):
        return "{" + ", ".join(_init_text(i) for i in init) + "}"
    return str(init)


def _instr_text(ins: Instr) -> str:
    a = [str(x) for x in ins.args]
    op = ins.op
    if op == "const":
        lit = a[0]
        body = f"const {T.type_text(ins.type)} {lit}"
    elif op == "alloca":
        body = f"alloca {T.type_text(ins.type)}"
    elif op == "load":
        body = f"load {a[0]}"
    elif op == "store":
        body = f"store {a[0]}, {a[1]}"
    elif op == "addr":
        body = f"addr @{ins.name}"
    elif op == "field":
        body = f"field {a[0]}, {ins.name}"
    elif op == "index":
        body = f"index {a[0]}, {a[1]}"
    elif op == "call":
        body = f"call @{ins.name}({', '.join(a)})"
    elif op == "icall":
        body = f"icall {a[0]}({', '.join(a[1:])})"
    elif op == "bitcast":
        body = f"bitcast {a[0]} to {T.type_text(ins.type)}"
    elif op in ARITH_OPS:
        body = f"{op} {a[0]}, {a[1]}"
    elif op == "br":
        body = f"br {ins.cond} {a[0]}, {a[1]}, {ins.targets[0]}, {ins.targets[1]}"
    elif op == "jmp":
        body = f"jmp {ins.targets[0]}"
    elif op == "ret":
        body = "ret" + (f" {a[0]}" if a else "")
    elif op == "print":
        body = f"print {a[0]}"
    else:
        raise ValueError(op)
    return f"{ins.dest} = {body}" if ins.dest else body


def print_program(prog: TirProgram) -> str:
    out = []
    for rec in prog.records.values():
        fields = ", ".join(f"{n}: {T.type_text(t)}" for n, t in rec.fields)
        out.append(f"record {rec.name} {{ {fields} }}")
    for g in prog.globals:
        kw = "static" if g.static else "global"
        init = "" if g.init is None else f" = {_init_text(g.init)}"
        out.append(f"{kw} {g.name}: {T.type_text(g.type)}{init}")
    for m in prog.markers:
        out.append(f"marker {m}")
    for f in prog.functions:
        params = ", ".join(f"{n}: {T.type_text(t)}" for n, t in f.params)
        out.append("")
        out.append(f"fn {f.name}({params}) -> {T.type_text(f.ret)} {{")
        for item in f.body:
            if isinstance(item, Label):
                out.append(f"{item.name}:")
            else:
                out.append("  " + _instr_text(item))
        out.append("}")
    return "\n".join(out) + "\n"
