"""Typed toy IR: types, program structure, parser and printer."""

from .parser import Diagnostic, TirError, parse, print_program
from .program import AddrOf, Instr, Label, Operand, TirFunction, TirGlobal, TirProgram
from .types import (F32, F64, I8, I16, I32, I64, VOID, ArrayType, ElementType, FloatType,
                    FunctionType, IntType, PointerType, RecordType, VoidType, field_offset,
                    is_code_pointer, is_data_pointer, pointer_slots, size_of, type_encode,
                    type_id, type_text)

__all__ = [
    "Diagnostic", "TirError", "parse", "print_program", "AddrOf", "Instr", "Label", "Operand",
    "TirFunction", "TirGlobal", "TirProgram", "F32", "F64", "I8", "I16", "I32", "I64", "VOID",
    "ArrayType", "ElementType", "FloatType", "FunctionType", "IntType", "PointerType",
    "RecordType", "VoidType", "field_offset", "is_code_pointer", "is_data_pointer",
    "pointer_slots", "size_of", "type_encode", "type_id", "type_text",
]
