"""SSA values, operations, blocks and regions with def-use bookkeeping."""

from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .attributes import Attribute, attr_value, to_attr
from .types import TypeDesc


@dataclass(eq=False)
class Use:
    """One operand slot referencing a value."""
    op: "Operation"
    index: int


class Value:
    """An SSA value: an operation result or a block argument."""

    __slots__ = ("type", "owner", "index", "uses")

    def __init__(self, type_: TypeDesc, owner: Union["Operation", "Block"], index: int):
        self.type = type_
        self.owner = owner
        self.index = index
        self.uses: List[Use] = []

    @property
    def defining_op(self) -> Optional["Operation"]:
        return self.owner if isinstance(self.owner, Operation) else None

    @property
    def is_block_argument(self) -> bool:
        return isinstance(self.owner, Block)

    @property
    def parent_block(self) -> Optional["Block"]:
        if isinstance(self.owner, Block):
            return self.owner
        return self.owner.parent

    @property
    def num_uses(self) -> int:
        return len(self.uses)

    def replace_all_uses_with(self, new: "Value") -> None:
        """Point every use of this value at `new`.

        Args:
            new: Replacement value; types are not checked here
        """
        for use in list(self.uses):
            use.op.set_operand(use.index, new)

    def __repr__(self) -> str:
        where = self.owner.name if isinstance(self.owner, Operation) else "block"
        return f"<Value {self.type} #{self.index} of {where}>"


# ======================
# Register access
# ======================


@dataclass(frozen=True)
class DynIndex:
    """Position of a trailing index operand."""
    position: int


IndexPart = Union[int, DynIndex]


@dataclass(frozen=True)
class RegAccess:
    """`%r[start]`, `%r[start, stop]` or `%r[start, stop, step]` (stop exclusive).

    Parts are ints or, on user-built accesses, Values; operations store Values
    as trailing operands and keep a DynIndex in their place.
    """

    start: Any
    stop: Any = None
    step: Any = None

    @property
    def parts(self) -> Tuple[Any, ...]:
        if self.stop is None:
            return (self.start,)
        if self.step is None:
            return (self.start, self.stop)
        return (self.start, self.stop, self.step)

    @property
    def is_single(self) -> bool:
        return self.stop is None

    @staticmethod
    def from_parts(parts: Sequence[Any]) -> "RegAccess":
        if not 1 <= len(parts) <= 3:
            raise ValueError(f"register access takes 1 to 3 parts, got {len(parts)}")
        padded = list(parts) + [None] * (3 - len(parts))
        return RegAccess(*padded)


class Operation:
    """Generic IR node."""

    def __init__(
        self,
        name: str,
        operands: Sequence[Value] = (),
        result_types: Sequence[TypeDesc] = (),
        attributes: Optional[Dict[str, Any]] = None,
        regions: Sequence["Region"] = (),
        reg_access: Optional[Sequence[Optional[RegAccess]]] = None,
        entries: Optional[Sequence[RegAccess]] = None,
        successors: Sequence["Block"] = (),
        successor_sizes: Sequence[int] = (),
    ):
        self.name = name
        self.parent: Optional[Block] = None
        self.operands: List[Value] = []
        for value in operands:
            self._append_operand(value)
        self.num_main = len(self.operands)
        self.reg_access: Optional[List[Optional[RegAccess]]] = None
        if reg_access is not None:
            if len(reg_access) != self.num_main:
                raise ValueError(f"{name}: reg_access must align with operands")
            self.reg_access = [self._store_access(a) if a is not None else None for a in reg_access]
            if all(a is None for a in self.reg_access):
                self.reg_access = None
        self.entries: List[RegAccess] = [self._store_access(e) for e in (entries or [])]
        self.results: List[Value] = [Value(t, self, i) for i, t in enumerate(result_types)]
        self.attributes: Dict[str, Attribute] = {k: to_attr(v) for k, v in (attributes or {}).items()}
        self.regions: List[Region] = []
        for region in regions:
            self.add_region(region)
        self.successors: List[Block] = list(successors)
        self.successor_sizes: List[int] = list(successor_sizes)

    # Operands

    def _append_operand(self, value: Value) -> None:
        if not isinstance(value, Value):
            raise TypeError(f"{self.name}: operand {value!r} is not a Value")
        self.operands.append(value)
        value.uses.append(Use(self, len(self.operands) - 1))

    def _store_access(self, access: RegAccess) -> RegAccess:
        parts = []
        for part in access.parts:
            if isinstance(part, Value):
                self._append_operand(part)
                parts.append(DynIndex(len(self.operands) - 1))
            else:
                parts.append(part)
        return RegAccess.from_parts(parts)

    def set_operand(self, index: int, value: Value) -> None:
        """Replace operand `index`, moving its use record to `value`.

        Args:
            index: Position in `operands`, trailing index operands included
            value: New operand
        """
        old = self.operands[index]
        if old is value:
            return
        old.uses = [u for u in old.uses if not (u.op is self and u.index == index)]
        self.operands[index] = value
        value.uses.append(Use(self, index))

    def drop_references(self) -> None:
        """Remove this op's (and nested ops') use records."""
        for op in self.walk():
            for i, value in enumerate(op.operands):
                value.uses = [u for u in value.uses if not (u.op is op and u.index == i)]

    @property
    def main_operands(self) -> List[Value]:
        return self.operands[: self.num_main]

    def resolve(self, part: Any) -> Union[int, Value, None]:
        """Turn a stored access part into an int or the index Value."""
        if isinstance(part, DynIndex):
            return self.operands[part.position]
        return part

    def resolved_parts(self, access: RegAccess) -> Tuple[Union[int, Value], ...]:
        return tuple(self.resolve(p) for p in access.parts)

    def access_of(self, operand_index: int) -> Optional[RegAccess]:
        """Register access recorded for a main operand.

        Args:
            operand_index: Position among the main operands

        Returns:
            The access, or None when the operand is passed whole
        """
        if self.reg_access is None:
            return None
        return self.reg_access[operand_index]

    def user_access(self, access: RegAccess) -> RegAccess:
        """Access with Values in place of DynIndex, ready for a new op."""
        return RegAccess.from_parts(self.resolved_parts(access))

    # Successors

    def successor_operands(self, index: int) -> List[Value]:
        """Arguments forwarded to successor `index` of a branch.

        Args:
            index: Successor position

        Returns:
            The slice of operands bound to that block's arguments
        """
        start = self.num_main - sum(self.successor_sizes)
        for size in self.successor_sizes[:index]:
            start += size
        return self.operands[start:start + self.successor_sizes[index]]

    # Attributes

    def attr(self, key: str, default: Any = None) -> Any:
        if key not in self.attributes:
            return default
        return attr_value(self.attributes[key])

    def set_attr(self, key: str, value: Any) -> None:
        self.attributes[key] = to_attr(value)

    def has_attr(self, key: str) -> bool:
        return key in self.attributes

    # Naming and traits

    @property
    def dialect(self) -> str:
        return self.name.split(".", 1)[0] if "." in self.name else ""

    @property
    def short_name(self) -> str:
        return self.name.split(".", 1)[1] if "." in self.name else self.name

    @property
    def traits(self) -> frozenset:
        from .registry import op_traits

        return op_traits(self)

    def has_trait(self, trait) -> bool:
        return trait in self.traits

    @property
    def result(self) -> Value:
        if len(self.results) != 1:
            raise ValueError(f"{self.name} has {len(self.results)} results")
        return self.results[0]

    # Structure

    def add_region(self, region: "Region") -> "Region":
        region.parent = self
        self.regions.append(region)
        return region

    @property
    def parent_op(self) -> Optional["Operation"]:
        if self.parent is None or self.parent.parent is None:
            return None
        return self.parent.parent.parent

    def walk(self) -> Iterator["Operation"]:
        """Pre-order walk over this op and everything nested in it."""
        yield self
        for region in self.regions:
            for block in region.blocks:
                for op in list(block.ops):
                    yield from op.walk()

    def is_ancestor_of(self, other: "Operation") -> bool:
        current: Optional[Operation] = other
        while current is not None:
            if current is self:
                return True
            current = current.parent_op
        return False

    def is_before_in_block(self, other: "Operation") -> bool:
        block = self.parent
        return block is not None and block is other.parent and block.index_of(self) < block.index_of(other)

    def clone(self, value_map: Optional[Dict[Value, Value]] = None,
              block_map: Optional[Dict["Block", "Block"]] = None) -> "Operation":
        """Deep copy of this op and its regions.

        Args:
            value_map: Operand remapping; extended with every cloned result and block argument
            block_map: Successor remapping; extended with every cloned block

        Returns:
            The detached copy
        """
        value_map = {} if value_map is None else value_map
        block_map = {} if block_map is None else block_map
        new = type(self).__new__(type(self))
        new.name = self.name
        new.parent = None
        new.operands = []
        for value in self.operands:
            new._append_operand(value_map.get(value, value))
        new.num_main = self.num_main
        new.reg_access = list(self.reg_access) if self.reg_access is not None else None
        new.entries = list(self.entries)
        new.attributes = dict(self.attributes)
        new.results = [Value(r.type, new, r.index) for r in self.results]
        for old, fresh in zip(self.results, new.results):
            value_map[old] = fresh
        new.regions = []
        for region in self.regions:
            new.add_region(region.clone(value_map, block_map))
        new.successors = [block_map.get(b, b) for b in self.successors]
        new.successor_sizes = list(self.successor_sizes)
        return new

    def __repr__(self) -> str:
        return f"<Operation {self.name}>"


class Block:
    """Ordered operations with block arguments."""

    def __init__(self, arg_types: Sequence[TypeDesc] = ()):
        self.args: List[Value] = [Value(t, self, i) for i, t in enumerate(arg_types)]
        self.ops: List[Operation] = []
        self.parent: Optional[Region] = None

    def add_argument(self, type_: TypeDesc, index: Optional[int] = None) -> Value:
        """Insert a block argument and renumber the rest.

        Args:
            type_: Argument type
            index: Position; appended when omitted

        Returns:
            The new argument
        """
        if index is None:
            index = len(self.args)
        value = Value(type_, self, index)
        self.args.insert(index, value)
        for i, arg in enumerate(self.args):
            arg.index = i
        return value

    def append(self, op: Operation) -> Operation:
        op.parent = self
        self.ops.append(op)
        return op

    def insert(self, index: int, op: Operation) -> Operation:
        op.parent = self
        self.ops.insert(index, op)
        return op

    def remove(self, op: Operation) -> None:
        """Detach `op` without touching its uses.

        Raises:
            ValueError: `op` is not in this block
        """
        for i, existing in enumerate(self.ops):
            if existing is op:
                del self.ops[i]
                op.parent = None
                return
        raise ValueError(f"{op.name} is not in this block")

    def index_of(self, op: Operation) -> int:
        for i, existing in enumerate(self.ops):
            if existing is op:
                return i
        raise ValueError(f"{op.name} is not in this block")

    @property
    def terminator(self) -> Optional[Operation]:
        return self.ops[-1] if self.ops else None

    @property
    def parent_op(self) -> Optional[Operation]:
        return self.parent.parent if self.parent is not None else None


class Region:
    """Ordered list of blocks owned by an operation."""

    def __init__(self, blocks: Sequence[Block] = ()):
        self.blocks: List[Block] = []
        self.parent: Optional[Operation] = None
        for block in blocks:
            self.append(block)

    def append(self, block: Block) -> Block:
        block.parent = self
        self.blocks.append(block)
        return block

    @property
    def entry(self) -> Block:
        return self.blocks[0]

    def clone(self, value_map: Dict[Value, Value], block_map: Dict[Block, Block]) -> "Region":
        new = Region()
        # Blocks first so branches can refer forward.
        for block in self.blocks:
            fresh = Block([a.type for a in block.args])
            block_map[block] = fresh
            for old, arg in zip(block.args, fresh.args):
                value_map[old] = arg
            new.append(fresh)
        for block in self.blocks:
            target = block_map[block]
            for op in block.ops:
                target.append(op.clone(value_map, block_map))
        return new
