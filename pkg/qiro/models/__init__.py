"""In-memory SSA IR shared by both quantum dialects and the classical core."""

from .builder import Builder, build_op, erase_op, replace_all_uses
from .module import ModuleIR, SymbolOp
from .operation import Block, Operation, RegAccess, Region, Value
from .registry import trait_query
from .verifier import Diagnostic, verify

__all__ = [
    "Block",
    "Builder",
    "Diagnostic",
    "ModuleIR",
    "Operation",
    "RegAccess",
    "Region",
    "SymbolOp",
    "Value",
    "build_op",
    "erase_op",
    "replace_all_uses",
    "trait_query",
    "verify",
]
