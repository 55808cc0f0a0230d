from .ast import FunctionDef, Program, StatementInfo
from .cfg import EXIT, ControlFlowGraph, build_cfg, compute_postdominators
from .parser import parse
from .printer import format_program

__all__ = [
    "EXIT",
    "ControlFlowGraph",
    "FunctionDef",
    "Program",
    "StatementInfo",
    "build_cfg",
    "compute_postdominators",
    "format_program",
    "parse",
]
