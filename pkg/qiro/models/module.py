"""Module container and symbol definitions (func / circ)."""

import logging
from typing import Any, Dict, Iterator, List, Optional, Sequence

from ..core.errors import IRError
from .operation import Block, Operation, Region, Value
from .types import TypeDesc

logger = logging.getLogger(__name__)

SYMBOL_KINDS = ("func", "q.circ", "qs.circ")


class SymbolOp(Operation):
    """A named function or circuit with a single body region."""

    def __init__(self, kind: str, sym_name: str, arg_types: Sequence[TypeDesc] = (),
                 result_types: Sequence[TypeDesc] = (), attributes: Optional[Dict[str, Any]] = None,
                 body: Optional[Region] = None):
        if kind not in SYMBOL_KINDS:
            raise IRError(f"{kind} is not a symbol kind")
        attrs = dict(attributes or {})
        attrs["sym_name"] = sym_name
        super().__init__(kind, attributes=attrs, regions=[body or Region([Block(arg_types)])])
        self.result_types: List[TypeDesc] = list(result_types)
        # Source names of the entry arguments; entry-point inputs bind to these.
        self.arg_names: List[Optional[str]] = [None] * len(self.arguments)

    def clone(self, value_map=None, block_map=None) -> "SymbolOp":
        new = super().clone(value_map, block_map)
        new.result_types = list(self.result_types)
        new.arg_names = list(self.arg_names)
        return new

    @property
    def sym_name(self) -> str:
        return self.attr("sym_name")

    @sym_name.setter
    def sym_name(self, value: str) -> None:
        self.set_attr("sym_name", value)

    @property
    def is_circuit(self) -> bool:
        return self.name != "func"

    @property
    def body(self) -> Region:
        return self.regions[0]

    @property
    def entry_block(self) -> Block:
        return self.body.entry

    @property
    def arguments(self) -> List[Value]:
        return self.entry_block.args

    @property
    def arg_types(self) -> List[TypeDesc]:
        return [a.type for a in self.arguments]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.name,
            "name": self.sym_name,
            "args": [str(t) for t in self.arg_types],
            "results": [str(t) for t in self.result_types],
            "blocks": len(self.body.blocks),
        }


class ModuleIR:
    """Top-level container: ordered symbol definitions with a symbol table."""

    def __init__(self):
        self.ops: List[SymbolOp] = []
        self.symbols: Dict[str, SymbolOp] = {}

    def add(self, op: SymbolOp, index: Optional[int] = None) -> SymbolOp:
        """Register a symbol definition.

        Args:
            op: Function or circuit to add
            index: Position among the symbols; appended when omitted

        Returns:
            `op`

        Raises:
            IRError: the symbol name is already taken
        """
        name = op.sym_name
        if name in self.symbols:
            raise IRError(f"duplicate symbol @{name}")
        self.symbols[name] = op
        if index is None:
            self.ops.append(op)
        else:
            self.ops.insert(index, op)
        return op

    def lookup(self, name: str) -> Optional[SymbolOp]:
        return self.symbols.get(name)

    def remove(self, name: str) -> SymbolOp:
        """Delete a symbol and drop the use records of its body.

        Args:
            name: Symbol name without `@`

        Returns:
            The detached definition
        """
        op = self.symbols.pop(name)
        self.ops = [o for o in self.ops if o is not op]
        op.drop_references()
        return op

    def replace(self, old: SymbolOp, new: SymbolOp) -> None:
        """Put `new` at `old`'s position (the symbol names may differ)."""
        index = next(i for i, o in enumerate(self.ops) if o is old)
        del self.symbols[old.sym_name]
        self.ops[index] = new
        self.symbols[new.sym_name] = new

    def index_of(self, op: SymbolOp) -> int:
        return next(i for i, o in enumerate(self.ops) if o is op)

    def unique_name(self, base: str) -> str:
        """`base`, or `base_N` with the smallest free N."""
        if base not in self.symbols:
            return base
        counter = 1
        while f"{base}_{counter}" in self.symbols:
            counter += 1
        return f"{base}_{counter}"

    @property
    def circuits(self) -> List[SymbolOp]:
        return [op for op in self.ops if op.is_circuit]

    @property
    def functions(self) -> List[SymbolOp]:
        return [op for op in self.ops if not op.is_circuit]

    def walk(self) -> Iterator[Operation]:
        for op in list(self.ops):
            yield from op.walk()

    def clone(self) -> "ModuleIR":
        """Deep copy sharing nothing with this module."""
        new = ModuleIR()
        for op in self.ops:
            new.add(op.clone())
        return new

    def op_count(self) -> int:
        return sum(1 for _ in self.walk())

    def to_dict(self) -> Dict[str, Any]:
        return {"symbols": [op.to_dict() for op in self.ops], "op_count": self.op_count()}
