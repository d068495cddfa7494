"""Builders and the basic IR mutation primitives."""

import logging
from typing import Any, Dict, Optional, Sequence

from ..core.constants import ATTR_PREDICATE, ATTR_VALUE
from ..core.errors import HasLiveUses, TypeMismatch
from .operation import Block, Operation, RegAccess, Region, Value
from .registry import check_signature
from .types import F64, I1, INDEX, TypeDesc

logger = logging.getLogger(__name__)


class Builder:
    """Creates operations at an insertion point (a block and a position)."""

    def __init__(self, block: Optional[Block] = None, index: Optional[int] = None):
        self.block = block
        self.index = index

    @classmethod
    def at_end(cls, block: Block) -> "Builder":
        return cls(block, None)

    @classmethod
    def before(cls, op: Operation) -> "Builder":
        return cls(op.parent, op.parent.index_of(op))

    @classmethod
    def after(cls, op: Operation) -> "Builder":
        return cls(op.parent, op.parent.index_of(op) + 1)

    def insert(self, op: Operation) -> Operation:
        check_signature(op)
        if self.block is None:
            return op
        if self.index is None:
            self.block.append(op)
        else:
            self.block.insert(self.index, op)
            self.index += 1
        return op

    def create(self, name: str, operands: Sequence[Value] = (), result_types: Sequence[TypeDesc] = (),
               attributes: Optional[Dict[str, Any]] = None, regions: Sequence[Region] = (),
               reg_access: Optional[Sequence[Optional[RegAccess]]] = None,
               entries: Optional[Sequence[RegAccess]] = None, successors: Sequence[Block] = (),
               successor_sizes: Sequence[int] = ()) -> Operation:
        op = Operation(name, operands, result_types, attributes, regions, reg_access, entries,
                       successors, successor_sizes)
        return self.insert(op)

    # Classical shortcuts

    def constant(self, value: Any, type_: TypeDesc = INDEX) -> Value:
        if type_ == F64:
            value = float(value)
        elif isinstance(value, bool):
            value = int(value)
        return self.create("constant", result_types=[type_], attributes={ATTR_VALUE: value}).result

    def binary(self, name: str, lhs: Value, rhs: Value) -> Value:
        return self.create(name, [lhs, rhs], [lhs.type]).result

    def cmpi(self, predicate: str, lhs: Value, rhs: Value) -> Value:
        return self.create("cmpi", [lhs, rhs], [I1], {ATTR_PREDICATE: predicate}).result


def build_op(name: str, operands: Sequence[Value] = (), result_types: Sequence[TypeDesc] = (),
             attrs: Optional[Dict[str, Any]] = None, regions: Sequence[Region] = (),
             builder: Optional[Builder] = None, **kwargs) -> Operation:
    """Create an operation, check it against the registry and insert it.

    Raises:
        UnknownOpName: name is not registered
        ArityMismatch: operand or result counts violate the signature
    """
    return (builder or Builder()).create(name, operands, result_types, attrs, regions, **kwargs)


def replace_all_uses(old: Value, new: Value) -> None:
    """Redirect every use of `old` to `new`.

    Raises:
        TypeMismatch: the two values have incompatible types
    """
    if old is new:
        return
    if not old.type.compatible(new.type):
        raise TypeMismatch(f"cannot replace {old.type} with {new.type}")
    old.replace_all_uses_with(new)


def erase_op(op: Operation) -> None:
    """Remove an operation whose results are all unused.

    Raises:
        HasLiveUses: a result is still used outside the op itself
    """
    for result in op.results:
        if any(not op.is_ancestor_of(use.op) for use in result.uses):
            raise HasLiveUses(f"{op.name} result #{result.index} still has {result.num_uses} use(s)")
    op.drop_references()
    if op.parent is not None:
        op.parent.remove(op)
