"""Resource counting conversion (`--count-resources`).

Quantum operations are replaced by classical counter increments
(`res.inc {gate = "<class>", amount = k}`, times a register size operand for
broadcast gates). Qubit states disappear, register states become the index
holding their size, measurements become `res.unknown` and circuits become
plain functions. Running the residue with the interpreter yields the counts.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from ..core.constants import (
    ATTR_CALLEE,
    ATTR_SIZE,
    CONTROLLED_ROTATION_COST,
    DEFAULT_MULTI_CONTROL_FACTOR,
    GATE_CLASSES,
    NATIVE_GATES,
    OPT_DIALECT,
)
from ..core.errors import UnloweredMetaOp, UnsupportedConstruct
from ..models import types as T
from ..models.builder import Builder
from ..models.module import ModuleIR, SymbolOp
from ..models.operation import Block, Operation, Region, Value
from ..models.registry import is_gate_value_form, is_quantum_dialect
from .analysis import describe_application

logger = logging.getLogger(__name__)

LOOP_OPS = ("scf.for", "affine.for")
YIELD_OPS = ("scf.yield", "affine.yield")
ATTR_GATE = "gate"
ATTR_AMOUNT = "amount"


# ======================
# Cost model
# ======================


def row_key(controls: int, adjoint: bool) -> str:
    return f"{controls},{'true' if adjoint else 'false'}"


class CostModel(BaseModel):
    """Counter increments charged for one application of a native gate.

    `rows` overrides entries per gate class, keyed by "<controls>,<adjoint>"
    (e.g. "1,false"). Without an override, an uncontrolled gate (adjoint or
    not) costs one of its own class. With `decompose` off every application
    costs one of its class; with it on a 1-control rotation costs three
    rotations and two CX, a 1-control X costs one CX, other 1-control gates
    cost one of their class, and each further control multiplies the cost by
    `multi_control_factor`.
    """

    name: str = "decomposed"
    decompose: bool = True
    multi_control_factor: int = Field(default=DEFAULT_MULTI_CONTROL_FACTOR, ge=1)
    rows: Dict[str, Dict[str, Dict[str, int]]] = Field(default_factory=dict)

    @field_validator("rows")
    @classmethod
    def _check_rows(cls, value: Dict[str, Dict[str, Dict[str, int]]]) -> Dict[str, Dict[str, Dict[str, int]]]:
        for gate_class, rows in value.items():
            if gate_class not in GATE_CLASSES:
                raise ValueError(f"unknown gate class {gate_class!r}")
            for key, increments in rows.items():
                parts = key.split(",")
                if len(parts) != 2 or not parts[0].isdigit() or parts[1] not in ("true", "false"):
                    raise ValueError(f"cost row key must look like '1,false', got {key!r}")
                if any(amount < 0 for amount in increments.values()):
                    raise ValueError(f"negative increment in row {gate_class}[{key}]")
                if key == "0,false" and increments != {gate_class: 1}:
                    raise ValueError(f"the uncontrolled row of {gate_class} must be {{{gate_class!r}: 1}}")
        return value

    @classmethod
    def ops(cls) -> "CostModel":
        """Count-the-op metric: every application counts once for its class."""
        return cls(name="ops", decompose=False)

    @classmethod
    def decomposed(cls) -> "CostModel":
        return cls()

    @classmethod
    def named(cls, name: str) -> "CostModel":
        if name == "ops":
            return cls.ops()
        if name == "decomposed":
            return cls.decomposed()
        raise ValueError(f"unknown cost model {name!r}; use ops, decomposed or a JSON file")

    @classmethod
    def from_json_file(cls, path: Path) -> "CostModel":
        """Load a cost model from a JSON file with the fields of this model."""
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
        model = cls(**data)
        logger.info(f"Loaded cost model {model.name!r} from {path}")
        return model

    def cost(self, gate_class: str, controls: int = 0, adjoint: bool = False) -> Dict[str, int]:
        row = self.rows.get(gate_class, {}).get(row_key(controls, adjoint))
        if row is not None:
            return dict(row)
        if not self.decompose or controls == 0:
            return {gate_class: 1}
        if gate_class == "rotation":
            base = dict(CONTROLLED_ROTATION_COST)
        elif gate_class == "X":
            base = {"CX": 1}
        else:
            base = {gate_class: 1}
        scale = self.multi_control_factor ** (controls - 1)
        return {key: amount * scale for key, amount in base.items()}


# ======================
# Conversion
# ======================


class ResourceConversion:
    """Builds the classical residue of a lowered value-semantics module."""

    def __init__(self, module: ModuleIR, cost: CostModel):
        self.source = module
        self.cost = cost
        self.value_map: Dict[Value, Value] = {}
        # Register states map to their size; qubit states map to None.
        self.sizes: Dict[Value, Optional[Value]] = {}
        self.block_map: Dict[Block, Block] = {}

    def run(self) -> ModuleIR:
        target = ModuleIR()
        for symbol in self.source.ops:
            target.add(self.convert_symbol(symbol))
        return target

    # Values and types

    @staticmethod
    def _types(types: List[T.TypeDesc]) -> List[T.TypeDesc]:
        converted = []
        for type_ in types:
            if type_.kind == T.TypeKind.RSTATE:
                converted.append(T.INDEX)
            elif type_.is_classical:
                converted.append(type_)
            elif type_.kind != T.TypeKind.QSTATE:
                raise UnsupportedConstruct(f"{type_} values cannot survive resource counting")
        return converted

    def _values(self, values: List[Value]) -> List[Value]:
        converted = []
        for value in values:
            if value.type.kind == T.TypeKind.RSTATE:
                converted.append(self.sizes[value])
            elif value.type.kind != T.TypeKind.QSTATE:
                converted.append(self.value_map.get(value, value))
        return converted

    def _bind(self, old: List[Value], new: List[Value]) -> None:
        """Map old values (any kind) onto the converted list produced from their types."""
        fresh = iter(new)
        for value in old:
            if value.type.kind == T.TypeKind.QSTATE:
                self.sizes[value] = None
            elif value.type.kind == T.TypeKind.RSTATE:
                self.sizes[value] = next(fresh)
            else:
                self.value_map[value] = next(fresh)

    # Symbols and blocks

    def convert_symbol(self, symbol: SymbolOp) -> SymbolOp:
        self.value_map, self.sizes, self.block_map = {}, {}, {}
        func = SymbolOp("func", symbol.sym_name, self._types(symbol.arg_types), self._types(symbol.result_types),
                        {k: v for k, v in symbol.attributes.items() if k != "sym_name"})
        func.arg_names = [n for n, a in zip(symbol.arg_names, symbol.arguments)
                          if a.type.kind != T.TypeKind.QSTATE]
        self._bind(symbol.arguments, func.arguments)
        for block in symbol.body.blocks[1:]:
            fresh = Block(self._types([a.type for a in block.args]))
            self._bind(block.args, fresh.args)
            self.block_map[block] = fresh
            func.body.append(fresh)
        targets = [func.entry_block] + [self.block_map[b] for b in symbol.body.blocks[1:]]
        for block, target in zip(symbol.body.blocks, targets):
            self.convert_block(block, Builder.at_end(target))
        return func

    def convert_block(self, block: Block, builder: Builder) -> None:
        for op in block.ops:
            self.convert_op(op, builder)

    def convert_op(self, op: Operation, builder: Builder) -> None:
        if op.name in LOOP_OPS:
            self._convert_loop(op, builder)
        elif op.name == "scf.if":
            self._convert_if(op, builder)
        elif op.name in YIELD_OPS or op.name in ("return", f"{OPT_DIALECT}.return"):
            name = "return" if op.name == f"{OPT_DIALECT}.return" else op.name
            builder.create(name, self._values(op.main_operands))
        elif op.name in ("br", "cond_br"):
            self._convert_branch(op, builder)
        elif not is_quantum_dialect(op):
            builder.insert(op.clone(self.value_map))
        else:
            self._convert_quantum(op, builder)

    # Quantum operations

    def _convert_quantum(self, op: Operation, builder: Builder) -> None:
        short = op.short_name
        if short == "getval" or (is_gate_value_form(op) and op.num_main <= 1):
            return
        if short == "alloc":
            self.sizes[op.result] = None
        elif short == "allocreg":
            if op.has_attr(ATTR_SIZE):
                self.sizes[op.result] = builder.constant(op.attr(ATTR_SIZE), T.INDEX)
            else:
                self.sizes[op.result] = self.value_map.get(op.operands[0], op.operands[0])
        elif short in ("free", "freereg"):
            return
        elif short == "meas":
            unknown = builder.create("res.unknown", [], [op.results[0].type])
            self.value_map[op.results[0]] = unknown.result
            self.sizes[op.results[1]] = self.sizes[op.operands[0]]
        elif short == "extract":
            for access, piece in zip(op.entries, op.results[:-1]):
                self.sizes[piece] = self._piece_size(op, access, piece, builder)
            self.sizes[op.results[-1]] = self.sizes[op.operands[0]]
        elif short == "combine":
            self.sizes[op.result] = self.sizes[op.operands[0]]
        else:
            self._convert_application(op, builder)

    def _piece_size(self, op: Operation, access, piece: Value, builder: Builder) -> Optional[Value]:
        if piece.type.kind == T.TypeKind.QSTATE:
            return None
        if piece.type.size is not None:
            return builder.constant(piece.type.size, T.INDEX)
        parts = [self.value_map.get(p, p) if isinstance(p, Value) else builder.constant(p, T.INDEX)
                 for p in op.resolved_parts(access)]
        low, high = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else builder.constant(1, T.INDEX)
        # ceil((high - low) / step), clamped at zero
        span = builder.binary("subi", builder.binary("addi", builder.binary("subi", high, low), step),
                              builder.constant(1, T.INDEX))
        count = builder.binary("divi", span, step)
        return builder.binary("maxi", count, builder.constant(0, T.INDEX))

    def _convert_application(self, op: Operation, builder: Builder) -> None:
        kind = describe_application(op)
        if kind is None:
            raise UnsupportedConstruct(f"count-resources: no counting rule for {op.name}")
        states = kind.state_operands
        if kind.is_circuit:
            if kind.adjoint or kind.controls:
                raise UnloweredMetaOp(f"{'adj' if kind.adjoint else 'ctrl'} of @{kind.base} was not lowered")
            state_iter = iter(states)
            operands = [a if a is not None else next(state_iter) for a in kind.args]
            result_types = self._types([r.type for r in op.results])
            call = builder.create("call", self._values(operands), result_types, {ATTR_CALLEE: kind.base})
            self._bind(op.results, call.results)
            return
        gate_class = NATIVE_GATES[kind.base]["gate_class"]
        targets = states[kind.controls:]
        multiplier = next((self.sizes[t] for t in targets if t.type.kind == T.TypeKind.RSTATE), None)
        for counted, amount in sorted(self.cost.cost(gate_class, kind.controls, kind.adjoint).items()):
            if amount:
                operands = [multiplier] if multiplier is not None else []
                builder.create("res.inc", operands, [], {ATTR_GATE: counted, ATTR_AMOUNT: amount})
        for result, state in zip(kind.state_results, states):
            self.sizes[result] = self.sizes.get(state)

    # Control flow

    def _convert_loop(self, op: Operation, builder: Builder) -> None:
        body = op.regions[0].entry
        new_body = Block([T.INDEX] + self._types([a.type for a in body.args[1:]]))
        self.value_map[body.args[0]] = new_body.args[0]
        self._bind(body.args[1:], new_body.args[1:])
        bounds = [self.value_map.get(v, v) for v in op.operands[:3]]
        inits = self._values(op.operands[3:op.num_main])
        self.convert_block(body, Builder.at_end(new_body))
        loop = builder.create(op.name, bounds + inits, self._types([r.type for r in op.results]),
                              dict(op.attributes), regions=[Region([new_body])])
        self._bind(op.results, loop.results)

    def _convert_if(self, op: Operation, builder: Builder) -> None:
        regions = []
        for region in op.regions:
            block = Block()
            self.convert_block(region.entry, Builder.at_end(block))
            regions.append(Region([block]))
        condition = self.value_map.get(op.operands[0], op.operands[0])
        branch = builder.create("scf.if", [condition], self._types([r.type for r in op.results]),
                                dict(op.attributes), regions=regions)
        self._bind(op.results, branch.results)

    def _convert_branch(self, op: Operation, builder: Builder) -> None:
        operands: List[Value] = []
        sizes: List[int] = []
        if op.name == "cond_br":
            operands.append(self.value_map.get(op.operands[0], op.operands[0]))
        for index in range(len(op.successors)):
            segment = self._values(op.successor_operands(index))
            operands.extend(segment)
            sizes.append(len(segment))
        builder.create(op.name, operands, successors=[self.block_map[b] for b in op.successors],
                       successor_sizes=sizes)


def count_resources_convert(module: ModuleIR, cost: Optional[CostModel] = None) -> ModuleIR:
    """Replace every quantum operation with counter increments.

    Args:
        module: Value-semantics module with all circuit meta-operations lowered
        cost: Cost model; the decomposed model when omitted

    Returns:
        A purely classical module

    Raises:
        UnloweredMetaOp: adj or ctrl of a circuit is still present
    """
    cost = cost or CostModel.decomposed()
    converted = ResourceConversion(module, cost).run()
    logger.debug(f"count-resources converted {len(converted.ops)} symbol(s) with cost model {cost.name!r}")
    return converted
