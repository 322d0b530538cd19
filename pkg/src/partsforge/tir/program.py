"""Program structure of the toy IR."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .types import ElementType, FunctionType, RecordType

ARITH_OPS = ("add", "sub", "mul", "xor")
CONDS = ("eq", "ne", "lt", "ge")


@dataclass(frozen=True)
class Operand:
    kind: str  # "vreg" | "int" | "float" | "null"
    value: Union[str, int, None] = None

    def __str__(self):
        if self.kind == "vreg":
            return self.value
        if self.kind in ("int", "float"):
            return repr(self.value) if self.kind == "float" else str(self.value)
        return "null"


@dataclass(frozen=True)
class AddrOf:
    name: str

    def __str__(self):
        return f"&{self.name}"


Init = Union[int, float, None, AddrOf, list]


@dataclass
class Instr:
    op: str
    dest: Optional[str] = None
    args: tuple = ()
    type: Optional[ElementType] = None  # const/alloca/bitcast target
    name: Optional[str] = None  # callee, global, field or label
    cond: Optional[str] = None
    targets: tuple = ()
    line: int = 0


@dataclass
class Label:
    name: str
    line: int = 0


@dataclass
class TirFunction:
    name: str
    params: list
    ret: ElementType
    body: list
    line: int = 0
    vreg_types: dict = field(default_factory=dict)

    @property
    def signature(self) -> FunctionType:
        return FunctionType(self.ret, tuple(t for _, t in self.params))

    @property
    def is_leaf(self) -> bool:
        return not any(isinstance(i, Instr) and i.op in ("call", "icall") for i in self.body)

    def instructions(self):
        return [i for i in self.body if isinstance(i, Instr)]


@dataclass
class TirGlobal:
    name: str
    type: ElementType
    init: Init = None
    static: bool = False
    line: int = 0


@dataclass
class TirProgram:
    records: dict
    globals: list
    functions: list
    markers: list = field(default_factory=list)

    def function(self, name: str) -> TirFunction:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def global_(self, name: str) -> TirGlobal:
        for g in self.globals:
            if g.name == name:
                return g
        raise KeyError(name)

    def record(self, name: str) -> RecordType:
        return self.records[name]
