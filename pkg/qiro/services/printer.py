"""Deterministic printer for the `.qiro` textual format."""

from typing import Dict, List

from ..core.constants import ATTR_ANGLE, ATTR_CALLEE, ATTR_VALUE
from ..models.attributes import UnitAttr
from ..models.module import ModuleIR, SymbolOp
from ..models.operation import Block, Operation, RegAccess, Region, Value
from ..models.registry import is_rotation

LOOP_OPS = ("scf.for", "affine.for")
CALL_OPS = ("call", "q.call", "qs.call")
GETVAL_OPS = ("q.getval", "qs.getval")
ENTRY_OPS = ("qs.extract", "qs.combine")
INDENT = "  "


class Printer:
    """Prints one module; value names are %0, %1, ... per symbol."""

    def __init__(self):
        self.lines: List[str] = []
        self.names: Dict[Value, str] = {}
        self.block_names: Dict[Block, str] = {}

    def print_module(self, module: ModuleIR) -> str:
        self.lines = ["module {"]
        for index, symbol in enumerate(module.ops):
            if index:
                self.lines.append("")
            self.print_symbol(symbol, 1)
        self.lines.append("}")
        return "\n".join(self.lines) + "\n"

    # Naming

    def _name(self, value: Value) -> str:
        name = self.names.get(value)
        if name is None:
            name = f"%{len(self.names)}"
            self.names[value] = name
        return name

    def _name_argument(self, value: Value, preferred) -> str:
        """Keep a source argument name unless it is numeric or already taken."""
        name = f"%{preferred}"
        if not preferred or preferred.isdigit() or name in self.names.values():
            return self._name(value)
        self.names[value] = name
        return name

    def _ref(self, value: Value) -> str:
        name = self.names.get(value)
        if name is None:
            # Detached operand; give it a visible name so the problem shows up on parse.
            return f"%undef{id(value) % 10000}"
        return name

    def _label(self, block: Block) -> str:
        label = self.block_names.get(block)
        if label is None:
            label = f"^bb{len(self.block_names) + 1}"
            self.block_names[block] = label
        return label

    # Symbols and regions

    def print_symbol(self, symbol: SymbolOp, depth: int) -> None:
        self.names = {}
        self.block_names = {}
        args = ", ".join(f"{self._name_argument(a, n)}: {a.type}" for a, n in zip(symbol.arguments, symbol.arg_names))
        header = f"{INDENT * depth}{symbol.name} @{symbol.sym_name}({args})"
        if symbol.result_types:
            header += " -> (" + ", ".join(str(t) for t in symbol.result_types) + ")"
        extra = {k: v for k, v in symbol.attributes.items() if k != "sym_name"}
        if extra:
            header += " attributes " + self._attr_dict(extra)
        self.lines.append(header + " {")
        self._print_region_body(symbol.body, depth + 1, entry_named=True)
        self.lines.append(f"{INDENT * depth}}}")

    def _print_region_body(self, region: Region, depth: int, entry_named: bool) -> None:
        for block in region.blocks[1:]:
            self._label(block)
        for index, block in enumerate(region.blocks):
            if index:
                args = ", ".join(f"{self._name(a)}: {a.type}" for a in block.args)
                label = self._label(block)
                self.lines.append(f"{INDENT * (depth - 1)}{label}({args}):" if args else f"{INDENT * (depth - 1)}{label}:")
            elif not entry_named:
                for arg in block.args:
                    self._name(arg)
            for op in block.ops:
                self.print_op(op, depth)

    # Operations

    def print_op(self, op: Operation, depth: int) -> None:
        pad = INDENT * depth
        results = ", ".join(self._name(r) for r in op.results)
        prefix = f"{pad}{results} = " if results else pad
        if op.name in LOOP_OPS:
            self._print_loop(op, prefix, depth)
            return
        if op.name == "scf.if":
            self._print_if(op, prefix, depth)
            return
        self.lines.append(prefix + self.op_text(op))

    def op_text(self, op: Operation) -> str:
        name = op.name
        skip = set()
        if name == "constant":
            text = f"constant {op.attributes[ATTR_VALUE]}"
            skip.add(ATTR_VALUE)
        elif name in CALL_OPS:
            args = ", ".join(self._ref(v) for v in op.main_operands)
            text = f"{name} @{op.attr(ATTR_CALLEE)}({args})"
            skip.add(ATTR_CALLEE)
        elif name in GETVAL_OPS:
            text = f"{name} @{op.attr(ATTR_CALLEE)}"
            skip.add(ATTR_CALLEE)
        elif name == "br":
            text = f"br {self._successor(op, 0)}"
        elif name == "cond_br":
            text = f"cond_br {self._ref(op.operands[0])}, {self._successor(op, 0)}, {self._successor(op, 1)}"
        elif is_rotation(op):
            operands = op.main_operands
            if ATTR_ANGLE in op.attributes:
                angle = str(op.attributes[ATTR_ANGLE])
                skip.add(ATTR_ANGLE)
            else:
                angle, operands = self._ref(operands[0]), operands[1:]
            text = f"{name}({angle})"
            rest = self._operand_list(op, operands, offset=op.num_main - len(operands))
            if rest:
                text += " " + rest
        else:
            text = name
            rest = self._operand_list(op, op.main_operands, offset=0)
            if rest:
                text += " " + rest
        attrs = {k: v for k, v in op.attributes.items() if k not in skip}
        if attrs:
            text += " " + self._attr_dict(attrs)
        if op.results:
            text += " : " + ", ".join(str(r.type) for r in op.results)
        return text

    def _operand_list(self, op: Operation, operands: List[Value], offset: int) -> str:
        parts = []
        for index, value in enumerate(operands):
            item = self._ref(value)
            access = op.access_of(offset + index)
            if access is not None:
                item += self._access(op, access)
            if op.name in ENTRY_OPS and index == 0:
                if op.entries:
                    item += self._access(op, op.entries[0])
                    parts.append(item)
                    parts.extend(self._access(op, e) for e in op.entries[1:])
                    continue
            parts.append(item)
        return ", ".join(parts)

    def _access(self, op: Operation, access: RegAccess) -> str:
        parts = []
        for part in op.resolved_parts(access):
            parts.append(self._ref(part) if isinstance(part, Value) else str(part))
        return "[" + ", ".join(parts) + "]"

    def _successor(self, op: Operation, index: int) -> str:
        label = self._label(op.successors[index])
        args = op.successor_operands(index)
        if not args:
            return label
        return label + "(" + ", ".join(self._ref(v) for v in args) + ")"

    def _attr_dict(self, attrs) -> str:
        items = []
        for key in sorted(attrs):
            value = attrs[key]
            items.append(key if isinstance(value, UnitAttr) else f"{key} = {value}")
        return "{" + ", ".join(items) + "}"

    def _print_loop(self, op: Operation, prefix: str, depth: int) -> None:
        body = op.regions[0].entry
        lb, ub, step = (self._ref(v) for v in op.operands[:3])
        iv = self._name(body.args[0])
        text = f"{prefix}{op.name} {iv} = {lb} to {ub} step {step}"
        inits = op.operands[3:op.num_main]
        if inits:
            pairs = ", ".join(f"{self._name(arg)} = {self._ref(init)}" for arg, init in zip(body.args[1:], inits))
            text += f" iter_args({pairs}) : " + ", ".join(str(r.type) for r in op.results)
        attrs = dict(op.attributes)
        if attrs:
            text += " attributes " + self._attr_dict(attrs)
        self.lines.append(text + " {")
        self._print_region_body(op.regions[0], depth + 1, entry_named=True)
        self.lines.append(f"{INDENT * depth}}}")

    def _print_if(self, op: Operation, prefix: str, depth: int) -> None:
        text = f"{prefix}scf.if {self._ref(op.operands[0])}"
        if op.results:
            text += " : " + ", ".join(str(r.type) for r in op.results)
        if op.attributes:
            text += " attributes " + self._attr_dict(op.attributes)
        self.lines.append(text + " {")
        self._print_region_body(op.regions[0], depth + 1, entry_named=False)
        self.lines.append(f"{INDENT * depth}}} else {{")
        self._print_region_body(op.regions[1], depth + 1, entry_named=False)
        self.lines.append(f"{INDENT * depth}}}")


def print_module(module: ModuleIR) -> str:
    """Render a module as `.qiro` text."""
    return Printer().print_module(module)
