"""Element types of the toy IR and their structural identity.

Records are structural: two records with the same field types in the same
order are the same type whatever they are called.  Recursive occurrences of an
enclosing record encode as ``up(k)``, k counting enclosing records outward.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Union

SLOT = 8  # every scalar occupies one 64-bit slot in memory


class ElementType:
    def encode(self) -> str:
        return type_encode(self)

    def __str__(self):
        return type_text(self)


@dataclass(frozen=True, eq=False)
class IntType(ElementType):
    width: int

    def __post_init__(self):
        if self.width not in (8, 16, 32, 64):
            raise ValueError(f"bad int width {self.width}")


@dataclass(frozen=True, eq=False)
class FloatType(ElementType):
    width: int

    def __post_init__(self):
        if self.width not in (32, 64):
            raise ValueError(f"bad float width {self.width}")


@dataclass(frozen=True, eq=False)
class VoidType(ElementType):
    pass


@dataclass(frozen=True, eq=False)
class PointerType(ElementType):
    pointee: ElementType


@dataclass(frozen=True, eq=False)
class FunctionType(ElementType):
    ret: ElementType
    params: tuple


@dataclass(frozen=True, eq=False)
class ArrayType(ElementType):
    elem: ElementType
    length: int


class RecordType(ElementType):
    """A named record; fields are filled in after construction so that
    self-referential declarations can be built."""

    def __init__(self, name: str, fields: Optional[list] = None):
        self.name = name
        self.fields: list[tuple[str, ElementType]] = list(fields or [])

    def __repr__(self):
        return f"RecordType({self.name!r})"

    def field_index(self, name: str) -> int:
        for i, (fname, _) in enumerate(self.fields):
            if fname == name:
                return i
        raise KeyError(name)


# Structural equality and hashing go through the canonical encoding.
def _eq(self, other):
    return isinstance(other, ElementType) and type_encode(self) == type_encode(other)


def _hash(self):
    return hash(type_encode(self))


for _cls in (IntType, FloatType, VoidType, PointerType, FunctionType, ArrayType, RecordType):
    _cls.__eq__ = _eq
    _cls.__hash__ = _hash

I8, I16, I32, I64 = IntType(8), IntType(16), IntType(32), IntType(64)
F32, F64 = FloatType(32), FloatType(64)
VOID = VoidType()


def type_encode(t: ElementType) -> str:
    return _encode(t, [])


def _encode(t, stack):
    if isinstance(t, IntType):
        return f"i{t.width}"
    if isinstance(t, FloatType):
        return f"f{t.width}"
    if isinstance(t, VoidType):
        return "void"
    if isinstance(t, PointerType):
        return f"p({_encode(t.pointee, stack)})"
    if isinstance(t, FunctionType):
        params = ",".join(_encode(p, stack) for p in t.params)
        return f"fn({_encode(t.ret, stack)}|{params})"
    if isinstance(t, ArrayType):
        return f"arr({_encode(t.elem, stack)},{t.length})"
    if isinstance(t, RecordType):
        for depth, outer in enumerate(reversed(stack)):
            if outer is t:
                return f"up({depth})"
        inner = stack + [t]
        return "rec(" + ",".join(_encode(ft, inner) for _, ft in t.fields) + ")"
    raise TypeError(f"not an element type: {t!r}")


def type_id(t: ElementType) -> int:
    """First 8 bytes, big-endian, of SHA3-256 over the canonical encoding."""
    return int.from_bytes(hashlib.sha3_256(type_encode(t).encode()).digest()[:8], "big")


def type_text(t: ElementType) -> str:
    """Surface syntax, as accepted by the parser."""
    if isinstance(t, IntType):
        return f"i{t.width}"
    if isinstance(t, FloatType):
        return f"f{t.width}"
    if isinstance(t, VoidType):
        return "void"
    if isinstance(t, PointerType):
        return f"ptr<{type_text(t.pointee)}>"
    if isinstance(t, FunctionType):
        return f"fn({', '.join(type_text(p) for p in t.params)}) -> {type_text(t.ret)}"
    if isinstance(t, ArrayType):
        return f"[{t.length} x {type_text(t.elem)}]"
    if isinstance(t, RecordType):
        return t.name
    raise TypeError(t)


def size_of(t: ElementType) -> int:
    if isinstance(t, (IntType, FloatType, PointerType)):
        return SLOT
    if isinstance(t, ArrayType):
        return t.length * size_of(t.elem)
    if isinstance(t, RecordType):
        return sum(size_of(ft) for _, ft in t.fields)
    raise TypeError(f"type {type_text(t)} has no storage size")


def field_offset(rec: RecordType, index: int) -> int:
    return sum(size_of(ft) for _, ft in rec.fields[:index])


def is_code_pointer(t: ElementType) -> bool:
    return isinstance(t, PointerType) and isinstance(t.pointee, FunctionType)


def is_data_pointer(t: ElementType) -> bool:
    return isinstance(t, PointerType) and not isinstance(t.pointee, FunctionType)


def pointer_slots(t: ElementType, base: int = 0):
    """Yield (offset, pointer type) for every pointer stored inside ``t``."""
    if isinstance(t, PointerType):
        yield base, t
    elif isinstance(t, ArrayType):
        step = size_of(t.elem)
        for i in range(t.length):
            yield from pointer_slots(t.elem, base + i * step)
    elif isinstance(t, RecordType):
        off = base
        for _, ft in t.fields:
            yield from pointer_slots(ft, off)
            off += size_of(ft)


TypeLike = Union[ElementType, str]
