"""Memory-semantics to value-semantics lowering (`--convert-mem-to-val`).

Every quantum reference of the input dialect is replaced by a chain of state
values. A StateMap tracks the newest state of each live reference while the
ops of a region are rewritten in order; loops and branches thread the states
they touch through iteration arguments, yields and block arguments.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

from ..core.constants import INPUT_DIALECT, OPT_DIALECT
from ..core.errors import UnsupportedConstruct
from ..models import types as T
from ..models.builder import Builder
from ..models.module import ModuleIR, SymbolOp
from ..models.operation import Block, Operation, RegAccess, Region, Value
from ..models.registry import is_quantum_dialect

logger = logging.getLogger(__name__)

LOOP_OPS = ("scf.for", "affine.for")
YIELD_OPS = ("scf.yield", "affine.yield")


class StateMap:
    """Newest state value of every live quantum reference, in first-appearance order."""

    def __init__(self, entries: Optional[Dict[Value, Value]] = None):
        self.entries: Dict[Value, Value] = dict(entries or {})

    def __contains__(self, ref: Value) -> bool:
        return ref in self.entries

    def refs(self) -> List[Value]:
        return list(self.entries)

    def copy(self) -> "StateMap":
        return StateMap(self.entries)

    def get(self, ref: Value) -> Value:
        state = self.entries.get(ref)
        if state is None:
            raise UnsupportedConstruct(f"quantum reference {ref!r} is not live here")
        return state

    def set(self, ref: Value, state: Value) -> None:
        self.entries[ref] = state

    def pop(self, ref: Value) -> Value:
        state = self.get(ref)
        del self.entries[ref]
        return state


@dataclass
class _RegionContext:
    """What a region end must hand back: `carried` states, in order; `outer` refs stay live."""
    carried: List[Value] = field(default_factory=list)
    outer: Set[Value] = field(default_factory=set)


def _piece_type(access: RegAccess) -> T.TypeDesc:
    """State type of one extracted entry."""
    if access.is_single:
        return T.QSTATE
    parts = access.parts
    if all(isinstance(p, int) for p in parts):
        step = parts[2] if len(parts) == 3 else 1
        return T.rstate(len(range(parts[0], parts[1], step)) or None)
    return T.rstate(None)


def _free_op(state: Value) -> str:
    return f"{OPT_DIALECT}.freereg" if state.type.is_register else f"{OPT_DIALECT}.free"


class Mem2ValLowering:
    """Builds a value-semantics copy of an input-dialect module."""

    def __init__(self, module: ModuleIR):
        self.source = module
        self.value_map: Dict[Value, Value] = {}
        self.block_map: Dict[Block, Block] = {}
        self.live: Optional[List[Value]] = None
        self.regions: tuple = ()

    def run(self) -> ModuleIR:
        for op in self.source.walk():
            if op.dialect == OPT_DIALECT:
                raise UnsupportedConstruct(f"{op.name} is already in the value-semantics dialect")
        target = ModuleIR()
        for symbol in self.source.ops:
            target.add(self.lower_symbol(symbol))
        return target

    # Symbols

    def lower_symbol(self, symbol: SymbolOp) -> SymbolOp:
        quantum_args = [a for a in symbol.arguments if a.type.is_quantum_ref]
        if not symbol.is_circuit and quantum_args:
            raise UnsupportedConstruct(f"function @{symbol.sym_name} takes quantum arguments; use a circuit")
        arg_types = [T.state_type_for(a.type) for a in symbol.arguments]
        result_types = list(symbol.result_types)
        kind = symbol.name
        if symbol.is_circuit:
            kind = f"{OPT_DIALECT}.circ"
            result_types = [T.state_type_for(a.type) for a in quantum_args] + result_types
        attrs = {k: v for k, v in symbol.attributes.items() if k != "sym_name"}
        lowered = SymbolOp(kind, symbol.sym_name, arg_types, result_types, attrs)
        lowered.arg_names = list(symbol.arg_names)

        self.value_map = {}
        self.block_map = {}
        self.live = None
        self.regions = (symbol.body, lowered.body)
        states = StateMap()
        for old, fresh in zip(symbol.arguments, lowered.arguments):
            if old.type.is_quantum_ref:
                states.set(old, fresh)
            else:
                self.value_map[old] = fresh
        context = _RegionContext(carried=quantum_args)
        region = symbol.body
        self.lower_block(region.entry, lowered.entry_block, states, context)
        for block in region.blocks[1:]:
            fresh = self._ensure_blocks(region, lowered.body, states)[block]
            inner = StateMap(dict(zip(self.live, fresh.args[len(block.args):])))
            self.lower_block(block, fresh, inner, context)
        return lowered

    def _ensure_blocks(self, region: Region, target: Region, states: StateMap) -> Dict[Block, Block]:
        """Create the non-entry blocks once; the refs live at the first branch become block arguments."""
        if self.live is None:
            self.live = states.refs()
            for block in region.blocks[1:]:
                fresh = Block([a.type for a in block.args] + [states.get(r).type for r in self.live])
                for old, new in zip(block.args, fresh.args):
                    self.value_map[old] = new
                self.block_map[block] = fresh
                target.append(fresh)
        return self.block_map

    # Blocks

    def lower_block(self, block: Block, target: Block, states: StateMap, context: _RegionContext) -> None:
        builder = Builder.at_end(target)
        for op in block.ops:
            self.lower_op(op, builder, states, context)

    def lower_op(self, op: Operation, builder: Builder, states: StateMap, context: _RegionContext) -> None:
        if op.name in LOOP_OPS:
            self._lower_loop(op, builder, states)
        elif op.name == "scf.if":
            self._lower_if(op, builder, states)
        elif op.name in YIELD_OPS or op.name in ("return", f"{INPUT_DIALECT}.return"):
            self._lower_region_end(op, builder, states, context)
        elif op.name in ("br", "cond_br"):
            self._lower_branch(op, builder, states)
        elif not is_quantum_dialect(op):
            builder.insert(op.clone(self.value_map))
        elif op.short_name in ("alloc", "allocreg"):
            fresh = builder.create(f"{OPT_DIALECT}.{op.short_name}", [self._map(v) for v in op.operands],
                                   [T.state_type_for(op.result.type)], dict(op.attributes))
            states.set(op.result, fresh.result)
        elif op.short_name in ("free", "freereg"):
            if op.reg_access is not None:
                raise UnsupportedConstruct(f"{op.name} releases whole references only")
            builder.create(f"{OPT_DIALECT}.{op.short_name}", [states.pop(op.operands[0])], [], dict(op.attributes))
        elif any(v.type.is_quantum_ref for v in op.main_operands):
            self._lower_application(op, builder, states)
        else:
            # Gate values, getval and the value forms of adj/ctrl.
            fresh = builder.create(f"{OPT_DIALECT}.{op.short_name}", [self._map(v) for v in op.main_operands],
                                   [r.type for r in op.results], dict(op.attributes))
            self._map_results(op.results, fresh.results)

    # Quantum operations

    def _lower_application(self, op: Operation, builder: Builder, states: StateMap) -> None:
        operands = op.main_operands
        groups: Dict[Value, List[int]] = {}
        for index, value in enumerate(operands):
            if value.type.is_quantum_ref and op.access_of(index) is not None:
                groups.setdefault(value, []).append(index)

        pieces: Dict[int, Value] = {}
        remainders: Dict[Value, Operation] = {}
        for ref, indices in groups.items():
            entries = [self._map_access(op, op.access_of(i)) for i in indices]
            types = [_piece_type(op.access_of(i)) for i in indices] + [T.state_type_for(ref.type)]
            extract = builder.create(f"{OPT_DIALECT}.extract", [states.pop(ref)], types, entries=entries)
            for index, result in zip(indices, extract.results):
                pieces[index] = result
            remainders[ref] = extract

        new_operands: List[Value] = []
        slots: List[tuple] = []
        for index, value in enumerate(operands):
            if index in pieces:
                slots.append((index, None))
                new_operands.append(pieces[index])
            elif value.type.is_quantum_ref:
                slots.append((index, value))
                new_operands.append(states.pop(value))
            else:
                new_operands.append(self._map(value))
        state_types = [new_operands[i].type for i, _ in slots]
        classical_types = [r.type for r in op.results]
        measures = op.short_name == "meas"
        result_types = classical_types + state_types if measures else state_types + classical_types
        fresh = builder.create(f"{OPT_DIALECT}.{op.short_name}", new_operands, result_types, dict(op.attributes))
        if measures:
            classical, produced = fresh.results[:len(classical_types)], fresh.results[len(classical_types):]
        else:
            produced, classical = fresh.results[:len(state_types)], fresh.results[len(state_types):]
        self._map_results(op.results, classical)

        updated: Dict[int, Value] = {}
        for (index, ref), state in zip(slots, produced):
            if ref is None:
                updated[index] = state
            else:
                states.set(ref, state)
        for ref, extract in remainders.items():
            indices = groups[ref]
            entries = [extract.user_access(e) for e in extract.entries]
            combine = builder.create(f"{OPT_DIALECT}.combine", [extract.results[-1]] + [updated[i] for i in indices],
                                     [T.state_type_for(ref.type)], entries=entries)
            states.set(ref, combine.result)

    # Structured control flow

    def _touched(self, op: Operation, states: StateMap) -> List[Value]:
        """Outer references used anywhere inside `op`, in first-appearance order."""
        touched: List[Value] = []
        for nested in op.walk():
            if nested is op:
                continue
            for value in nested.main_operands:
                if value.type.is_quantum_ref and value in states and not any(value is t for t in touched):
                    touched.append(value)
        return touched

    def _lower_loop(self, op: Operation, builder: Builder, states: StateMap) -> None:
        touched = self._touched(op, states)
        outer = set(states.refs())
        bounds = [self._map(v) for v in op.operands[:3]]
        classical_inits = [self._map(v) for v in op.operands[3:op.num_main]]
        state_inits = [states.pop(ref) for ref in touched]
        classical_types = [r.type for r in op.results]
        state_types = [s.type for s in state_inits]

        body = op.regions[0].entry
        new_body = Block([T.INDEX] + classical_types + state_types)
        self._map_results(body.args, new_body.args[:1 + len(classical_types)])
        inner = states.copy()
        for ref, arg in zip(touched, new_body.args[1 + len(classical_types):]):
            inner.set(ref, arg)
        self.lower_block(body, new_body, inner, _RegionContext(carried=touched, outer=outer))

        loop = builder.create(op.name, bounds + classical_inits + state_inits, classical_types + state_types,
                              dict(op.attributes), regions=[Region([new_body])])
        self._map_results(op.results, loop.results[:len(classical_types)])
        for ref, result in zip(touched, loop.results[len(classical_types):]):
            states.set(ref, result)
        logger.debug(f"{op.name}: threading {len(touched)} state(s)")

    def _lower_if(self, op: Operation, builder: Builder, states: StateMap) -> None:
        touched = self._touched(op, states)
        outer = set(states.refs())
        condition = self._map(op.operands[0])
        classical_types = [r.type for r in op.results]
        state_types = [states.get(ref).type for ref in touched]
        regions: List[Region] = []
        for region in op.regions:
            fresh = Block()
            self.lower_block(region.entry, fresh, states.copy(), _RegionContext(carried=touched, outer=outer))
            regions.append(Region([fresh]))
        for ref in touched:
            states.pop(ref)
        branch = builder.create("scf.if", [condition], classical_types + state_types, dict(op.attributes),
                                regions=regions)
        self._map_results(op.results, branch.results[:len(classical_types)])
        for ref, result in zip(touched, branch.results[len(classical_types):]):
            states.set(ref, result)

    def _lower_region_end(self, op: Operation, builder: Builder, states: StateMap, context: _RegionContext) -> None:
        carried = context.carried
        for ref in states.refs():
            if ref not in context.outer and not any(ref is c for c in carried):
                state = states.pop(ref)
                logger.debug(f"Releasing {state.type} left live at {op.name}")
                builder.create(_free_op(state), [state])
        values = [self._map(v) for v in op.main_operands]
        carried_states = [states.get(ref) for ref in carried]
        if op.name in YIELD_OPS:
            builder.create(op.name, values + carried_states)
        elif op.name == "return":
            builder.create("return", values)
        else:
            builder.create(f"{OPT_DIALECT}.return", carried_states + values)

    def _lower_branch(self, op: Operation, builder: Builder, states: StateMap) -> None:
        blocks = self._ensure_blocks(*self.regions, states)
        if {id(r) for r in states.refs()} != {id(r) for r in self.live}:
            raise UnsupportedConstruct("quantum references allocated or released between branches")
        live_states = [states.get(ref) for ref in self.live]
        operands: List[Value] = []
        sizes: List[int] = []
        if op.name == "cond_br":
            operands.append(self._map(op.operands[0]))
        for index in range(len(op.successors)):
            segment = [self._map(v) for v in op.successor_operands(index)] + live_states
            operands.extend(segment)
            sizes.append(len(segment))
        builder.create(op.name, operands, successors=[blocks[b] for b in op.successors], successor_sizes=sizes)

    # Helpers

    def _map(self, value: Value) -> Value:
        mapped = self.value_map.get(value)
        if mapped is None:
            if value.type.is_quantum_ref:
                raise UnsupportedConstruct("quantum reference used in a classical position")
            raise UnsupportedConstruct(f"{value!r} is used before its definition")
        return mapped

    def _map_access(self, op: Operation, access: RegAccess) -> RegAccess:
        parts = [self._map(p) if isinstance(p, Value) else p for p in op.resolved_parts(access)]
        return RegAccess.from_parts(parts)

    def _map_results(self, old: List[Value], new: List[Value]) -> None:
        for a, b in zip(old, new):
            self.value_map[a] = b


def lower_module(module: ModuleIR) -> ModuleIR:
    """Translate an input-dialect module into the value-semantics dialect.

    Args:
        module: A verified input-dialect module (left untouched)

    Returns:
        A new module in the optimization dialect

    Raises:
        UnsupportedConstruct: the module already uses the value-semantics dialect,
            or a construct has no value-semantics form
    """
    lowered = Mem2ValLowering(module).run()
    logger.debug(f"convert-mem-to-val lowered {len(lowered.ops)} symbol(s)")
    return lowered
