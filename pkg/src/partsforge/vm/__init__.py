"""A small AArch64-flavoured machine with pointer-authentication instructions."""

from .asm import (CODE_BASE, COMBINED_OPCODES, DATA_BASE, EVENT_TAGS, EXIT_LABEL, PA_OPCODES,
                  STACK_SIZE, STACK_TOP, AsmError, AsmInstr, AsmProgram, assemble, split_line)
from .machine import (DEFAULT_FUEL, ExitReport, FaultRecord, Machine, MachineFault, Memory,
                      privileged_keys, process_start, run)

__all__ = [
    "CODE_BASE", "COMBINED_OPCODES", "DATA_BASE", "EVENT_TAGS", "EXIT_LABEL", "PA_OPCODES",
    "STACK_SIZE", "STACK_TOP", "AsmError", "AsmInstr", "AsmProgram", "assemble", "split_line",
    "DEFAULT_FUEL", "ExitReport", "FaultRecord", "Machine", "MachineFault", "Memory",
    "privileged_keys", "process_start", "run",
]
