"""Structural equivalence of modules up to value renaming."""

from typing import Dict, Optional

from .module import ModuleIR
from .operation import Block, Operation, Region, Value


class _Mismatch(Exception):
    pass


class StructuralMatcher:
    """Pairs values and blocks of two modules while walking them in lockstep."""

    def __init__(self):
        self.values: Dict[Value, Value] = {}
        self.blocks: Dict[Block, Block] = {}

    def match_modules(self, left: ModuleIR, right: ModuleIR) -> None:
        if [s.sym_name for s in left.ops] != [s.sym_name for s in right.ops]:
            raise _Mismatch("symbol lists differ")
        for a, b in zip(left.ops, right.ops):
            if a.name != b.name or a.result_types != b.result_types:
                raise _Mismatch(f"@{a.sym_name}: signature differs")
            self.match_op(a, b)

    def match_op(self, a: Operation, b: Operation) -> None:
        where = a.name
        if a.name != b.name:
            raise _Mismatch(f"{a.name} vs {b.name}")
        if a.attributes != b.attributes:
            raise _Mismatch(f"{where}: attributes differ")
        if [r.type for r in a.results] != [r.type for r in b.results]:
            raise _Mismatch(f"{where}: result types differ")
        if len(a.operands) != len(b.operands) or a.num_main != b.num_main:
            raise _Mismatch(f"{where}: operand counts differ")
        for x, y in zip(a.operands, b.operands):
            if self.values.get(x) is not y:
                raise _Mismatch(f"{where}: operands differ")
        if a.reg_access != b.reg_access or a.entries != b.entries:
            raise _Mismatch(f"{where}: register accesses differ")
        if a.successor_sizes != b.successor_sizes or len(a.successors) != len(b.successors):
            raise _Mismatch(f"{where}: successors differ")
        for x, y in zip(a.successors, b.successors):
            if self.blocks.get(x) is not y:
                raise _Mismatch(f"{where}: successor blocks differ")
        for x, y in zip(a.results, b.results):
            self.values[x] = y
        if len(a.regions) != len(b.regions):
            raise _Mismatch(f"{where}: region counts differ")
        for x, y in zip(a.regions, b.regions):
            self.match_region(x, y)

    def match_region(self, a: Region, b: Region) -> None:
        if len(a.blocks) != len(b.blocks):
            raise _Mismatch("block counts differ")
        for x, y in zip(a.blocks, b.blocks):
            if [v.type for v in x.args] != [v.type for v in y.args]:
                raise _Mismatch("block argument types differ")
            self.blocks[x] = y
            for u, v in zip(x.args, y.args):
                self.values[u] = v
        for x, y in zip(a.blocks, b.blocks):
            if len(x.ops) != len(y.ops):
                raise _Mismatch(f"op counts differ ({len(x.ops)} vs {len(y.ops)})")
            for p, q in zip(x.ops, y.ops):
                self.match_op(p, q)


def structural_difference(left: ModuleIR, right: ModuleIR) -> Optional[str]:
    """First structural difference between two modules, or None if isomorphic."""
    try:
        StructuralMatcher().match_modules(left, right)
    except _Mismatch as exc:
        return str(exc)
    return None
