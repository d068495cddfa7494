"""Lowering of `ctrl` and `adj` applied to circuits (`--lower-ctrl`, `--lower-adj`).

Controlled lowering generates `@C__ctl` taking one extra control state
first and controls every quantum op inside, except those marked compute or
uncompute. Several controls peel one at a time (`@C__ctl__ctl`). Adjoint
lowering generates `@C__adj` with the classical ops copied forward and the
quantum ops replayed in reverse, each adjointed. A circuit carrying the
`adjoint_of`/`control_of` marker for C is used instead of generating one.
"""

import logging
from dataclasses import replace
from typing import Dict, List, Optional

from ..core.constants import (
    ADJOINT_MARKER,
    ADJOINT_SUFFIX,
    ATTR_ANGLE,
    ATTR_CALLEE,
    ATTR_COMPUTE,
    ATTR_CTRLS,
    ATTR_SIZE,
    ATTR_UNCOMPUTE,
    CONTROL_MARKER,
    CONTROL_SUFFIX,
    OPT_DIALECT,
)
from ..core.errors import NonUnitaryCircuit, UnsupportedConstruct
from ..models import types as T
from ..models.builder import Builder, replace_all_uses
from ..models.module import ModuleIR, SymbolOp
from ..models.operation import Block, Operation, RegAccess, Region, Value
from ..models.registry import is_gate_value_form, is_quantum_dialect
from .analysis import AppliedKind, build_application, describe_application, is_defined_outside
from .classical import call_graph, check_recursion
from .peephole import erase_application

logger = logging.getLogger(__name__)

LOOP_OPS = ("scf.for", "affine.for")
YIELD_OPS = ("scf.yield", "affine.yield")
RETURN = f"{OPT_DIALECT}.return"
MARKERS = (ATTR_COMPUTE, ATTR_UNCOMPUTE)
_NOT_CARRIED = (ATTR_ANGLE, ATTR_CALLEE, ATTR_CTRLS)


# ======================
# Shared helpers
# ======================


def _carried_attrs(op: Operation) -> dict:
    return {k: v for k, v in op.attributes.items() if k not in _NOT_CARRIED}


def _carries_state(op: Operation) -> bool:
    return any(r.type.is_state for r in op.results)


def _is_value_form(op: Operation) -> bool:
    """getval and gate-value forms; rebuilt by build_application, never copied."""
    if not is_quantum_dialect(op):
        return False
    return op.short_name == "getval" or (is_gate_value_form(op) and op.num_main <= 1)


def _ensure_unitary(symbol: SymbolOp, meta: str) -> None:
    for op in symbol.walk():
        if is_quantum_dialect(op) and op.short_name == "meas":
            raise NonUnitaryCircuit(f"{meta} applied to @{symbol.sym_name}, which measures")
    if len(symbol.body.blocks) != 1:
        raise UnsupportedConstruct(f"{meta} of @{symbol.sym_name}: unstructured control flow")


def _find_marked(module: ModuleIR, marker: str, name: str) -> Optional[SymbolOp]:
    for symbol in module.circuits:
        if symbol.attr(marker) == name:
            return symbol
    return None


def _symbol_attrs(source: SymbolOp, marker: str) -> dict:
    attrs = {k: v for k, v in source.attributes.items()
             if k not in ("sym_name", ADJOINT_MARKER, CONTROL_MARKER)}
    attrs[marker] = source.sym_name
    return attrs


def _mapped_kind(kind: AppliedKind, value_map: Dict[Value, Value], **changes) -> AppliedKind:
    angle = value_map.get(kind.angle, kind.angle) if isinstance(kind.angle, Value) else kind.angle
    args = [value_map.get(a, a) if a is not None else None for a in kind.args]
    return replace(kind, angle=angle, args=args, op=None, **changes)


def _application_sites(module: ModuleIR, wanted) -> List[AppliedKind]:
    sites = []
    for op in module.walk():
        kind = describe_application(op)
        if kind is not None and kind.is_circuit and wanted(kind):
            sites.append(kind)
    return sites


def _rewrite_site(kind: AppliedKind, new_kind: AppliedKind) -> None:
    op = kind.op
    new = build_application(Builder.before(op), new_kind, kind.state_operands, _carried_attrs(op))
    for old, fresh in zip(op.results, new.results):
        replace_all_uses(old, fresh)
    erase_application(kind)


# ======================
# Controlled circuits
# ======================


class ControlLowering:
    """Generates controlled circuits on demand and rewrites controlled call sites."""

    def __init__(self, module: ModuleIR):
        self.module = module

    def controlled(self, name: str) -> SymbolOp:
        existing = _find_marked(self.module, CONTROL_MARKER, name)
        if existing is not None:
            return existing
        source = self.module.lookup(name)
        if source is None:
            raise UnsupportedConstruct(f"ctrl of unknown circuit @{name}")
        _ensure_unitary(source, "ctrl")
        symbol = SymbolOp(f"{OPT_DIALECT}.circ", self.module.unique_name(name + CONTROL_SUFFIX),
                          [T.QSTATE] + source.arg_types, [T.QSTATE] + source.result_types,
                          _symbol_attrs(source, CONTROL_MARKER))
        symbol.arg_names = ["ctl"] + list(source.arg_names)
        self.module.add(symbol, self.module.index_of(source) + 1)
        value_map = dict(zip(source.arguments, symbol.arguments[1:]))
        self._control_block(source.entry_block, Builder.at_end(symbol.entry_block), value_map,
                            symbol.arguments[0])
        logger.info(f"lower-ctrl: generated @{symbol.sym_name}")
        return symbol

    def _control_block(self, block: Block, builder: Builder, value_map: Dict[Value, Value], ctl: Value) -> None:
        for op in block.ops:
            if op.name == RETURN or op.name in YIELD_OPS:
                builder.create(op.name, [ctl] + [value_map.get(v, v) for v in op.main_operands])
                return
            ctl = self._control_op(op, builder, value_map, ctl)

    def _control_op(self, op: Operation, builder: Builder, value_map: Dict[Value, Value], ctl: Value) -> Value:
        if op.name in LOOP_OPS and _carries_state(op):
            return self._control_loop(op, builder, value_map, ctl)
        if op.name == "scf.if" and _carries_state(op):
            return self._control_if(op, builder, value_map, ctl)
        kind = describe_application(op)
        if kind is None or any(op.has_attr(m) for m in MARKERS):
            builder.insert(op.clone(value_map))
            return ctl
        controlled = _mapped_kind(kind, value_map, controls=kind.controls + 1)
        controlled.args = [None] + controlled.args
        states = [ctl] + [value_map.get(s, s) for s in kind.state_operands]
        new = build_application(builder, controlled, states, _carried_attrs(op))
        for old, fresh in zip(op.results, new.results[1:]):
            value_map[old] = fresh
        return new.results[0]

    def _control_loop(self, op: Operation, builder: Builder, value_map: Dict[Value, Value], ctl: Value) -> Value:
        body = op.regions[0].entry
        new_body = Block([T.INDEX, T.QSTATE] + [a.type for a in body.args[1:]])
        value_map[body.args[0]] = new_body.args[0]
        value_map.update(zip(body.args[1:], new_body.args[2:]))
        self._control_block(body, Builder.at_end(new_body), value_map, new_body.args[1])
        operands = [value_map.get(v, v) for v in op.operands[:3]]
        inits = [value_map.get(v, v) for v in op.operands[3:op.num_main]]
        loop = builder.create(op.name, operands + [ctl] + inits, [T.QSTATE] + [r.type for r in op.results],
                              dict(op.attributes), regions=[Region([new_body])])
        value_map.update(zip(op.results, loop.results[1:]))
        return loop.results[0]

    def _control_if(self, op: Operation, builder: Builder, value_map: Dict[Value, Value], ctl: Value) -> Value:
        regions = []
        for region in op.regions:
            block = Block()
            self._control_block(region.entry, Builder.at_end(block), value_map, ctl)
            regions.append(Region([block]))
        condition = value_map.get(op.operands[0], op.operands[0])
        branch = builder.create("scf.if", [condition], [T.QSTATE] + [r.type for r in op.results],
                                dict(op.attributes), regions=regions)
        value_map.update(zip(op.results, branch.results[1:]))
        return branch.results[0]

    def rewrite(self, kind: AppliedKind) -> None:
        """One control of the site moves into the callee: ctrl^k(C) becomes ctrl^(k-1)(C__ctl)."""
        target = self.controlled(kind.base)
        _rewrite_site(kind, replace(kind, base=target.sym_name, controls=kind.controls - 1, op=None))


def lower_control(module: ModuleIR) -> ModuleIR:
    """Rewrite every controlled circuit application to a call of a generated controlled circuit.

    Raises:
        NonUnitaryCircuit: a controlled circuit measures
        RecursionDetected: the circuit call graph has a cycle
    """
    check_recursion(call_graph(module))
    lowering = ControlLowering(module)
    rewritten = 0
    while True:
        sites = _application_sites(module, lambda k: k.controls > 0)
        if not sites:
            break
        for kind in sites:
            lowering.rewrite(kind)
            rewritten += 1
    logger.debug(f"lower-ctrl rewrote {rewritten} call site(s)")
    return module


# ======================
# Adjoint circuits
# ======================


def _swap_markers(attributes: dict) -> dict:
    swapped = {}
    for key, value in attributes.items():
        if key == ATTR_COMPUTE:
            swapped[ATTR_UNCOMPUTE] = value
        elif key == ATTR_UNCOMPUTE:
            swapped[ATTR_COMPUTE] = value
        else:
            swapped[key] = value
    return swapped


def _mapped_access(op: Operation, access: RegAccess, value_map: Dict[Value, Value]) -> RegAccess:
    parts = [value_map.get(p, p) if isinstance(p, Value) else p for p in op.resolved_parts(access)]
    return RegAccess.from_parts(parts)


def _origin_allocreg(state: Value) -> Optional[Operation]:
    """The allocreg a register state descends from, following same-register links."""
    value = state
    while True:
        op = value.defining_op
        if op is None:
            return None
        if op.short_name == "allocreg":
            return op
        if op.short_name == "combine" or (op.short_name == "extract" and value is op.results[-1]):
            value = op.operands[0]
            continue
        if op.name in LOOP_OPS:
            value = op.operands[3 + value.index]
            continue
        kind = describe_application(op)
        if kind is not None and value.index < kind.num_states:
            value = kind.state_operands[value.index]
            continue
        return None


class AdjointLowering:
    """Generates adjoint circuits on demand and rewrites adjoint call sites."""

    def __init__(self, module: ModuleIR):
        self.module = module

    def adjoint(self, name: str) -> SymbolOp:
        existing = _find_marked(self.module, ADJOINT_MARKER, name)
        if existing is not None:
            return existing
        source = self.module.lookup(name)
        if source is None:
            raise UnsupportedConstruct(f"adj of unknown circuit @{name}")
        _ensure_unitary(source, "adj")
        symbol = SymbolOp(f"{OPT_DIALECT}.circ", self.module.unique_name(name + ADJOINT_SUFFIX),
                          source.arg_types, source.result_types, _symbol_attrs(source, ADJOINT_MARKER))
        symbol.arg_names = list(source.arg_names)
        self.module.add(symbol, self.module.index_of(source) + 1)

        forward = {a: b for a, b in zip(source.arguments, symbol.arguments) if not a.type.is_state}
        source_states = [a for a in source.arguments if a.type.is_state]
        new_states = [a for a in symbol.arguments if a.type.is_state]
        terminator = source.entry_block.terminator
        returned = terminator.main_operands
        states = dict(zip(returned[:len(source_states)], new_states))
        builder = Builder.at_end(symbol.entry_block)
        self._reverse_block(source.entry_block, builder, forward, states)
        builder.create(RETURN, [states[a] for a in source_states]
                       + [forward.get(v, v) for v in returned[len(source_states):]])
        logger.info(f"lower-adj: generated @{symbol.sym_name}")
        return symbol

    def _is_quantum(self, op: Operation) -> bool:
        if op.name in LOOP_OPS or op.name == "scf.if":
            return _carries_state(op) or any(is_quantum_dialect(n) for n in op.walk())
        return is_quantum_dialect(op)

    def _reverse_block(self, block: Block, builder: Builder, forward: Dict[Value, Value],
                       states: Dict[Value, Value]) -> None:
        quantum: List[Operation] = []
        for op in block.ops:
            if op is block.terminator:
                break
            if _is_value_form(op):
                continue
            if self._is_quantum(op):
                quantum.append(op)
            else:
                builder.insert(op.clone(forward))
        for op in reversed(quantum):
            self._reverse_op(op, builder, forward, states)

    def _reverse_op(self, op: Operation, builder: Builder, forward: Dict[Value, Value],
                    states: Dict[Value, Value]) -> None:
        if any(r.uses for r in op.results if not r.type.is_state):
            raise UnsupportedConstruct(f"adj: classical results of {op.name} are used")
        if op.name in LOOP_OPS:
            self._reverse_loop(op, builder, forward, states)
            return
        if op.name == "scf.if":
            self._reverse_if(op, builder, forward, states)
            return
        short = op.short_name
        if short == "meas":
            raise NonUnitaryCircuit("adj of a circuit that measures")
        if short in ("alloc", "allocreg"):
            release = f"{OPT_DIALECT}.freereg" if short == "allocreg" else f"{OPT_DIALECT}.free"
            builder.create(release, [states[op.result]])
        elif short in ("free", "freereg"):
            states[op.operands[0]] = self._reallocate(op, builder, forward)
        elif short == "extract":
            pieces = [states[r] for r in op.results[:-1]]
            entries = [_mapped_access(op, e, forward) for e in op.entries]
            merged = builder.create(f"{OPT_DIALECT}.combine", [states[op.results[-1]]] + pieces,
                                    [op.operands[0].type], entries=entries)
            states[op.operands[0]] = merged.result
        elif short == "combine":
            inserted = op.main_operands[1:]
            entries = [_mapped_access(op, e, forward) for e in op.entries]
            split = builder.create(f"{OPT_DIALECT}.extract", [states[op.result]],
                                   [s.type for s in inserted] + [op.operands[0].type], entries=entries)
            for value, piece in zip(inserted, split.results):
                states[value] = piece
            states[op.operands[0]] = split.results[-1]
        else:
            kind = describe_application(op)
            if kind is None:
                raise UnsupportedConstruct(f"adj: {op.name} has no adjoint")
            flipped = _mapped_kind(kind, forward, adjoint=not kind.adjoint)
            new = build_application(builder, flipped, [states[r] for r in kind.state_results],
                                    _swap_markers(_carried_attrs(op)))
            for value, fresh in zip(kind.state_operands, new.results):
                states[value] = fresh

    def _reallocate(self, op: Operation, builder: Builder, forward: Dict[Value, Value]) -> Value:
        released = op.operands[0]
        if op.short_name == "free":
            return builder.create(f"{OPT_DIALECT}.alloc", [], [T.QSTATE]).result
        if released.type.size is not None:
            return builder.create(f"{OPT_DIALECT}.allocreg", [], [released.type],
                                  {ATTR_SIZE: released.type.size}).result
        origin = _origin_allocreg(released)
        if origin is not None and origin.has_attr(ATTR_SIZE):
            return builder.create(f"{OPT_DIALECT}.allocreg", [], [released.type],
                                  {ATTR_SIZE: origin.attr(ATTR_SIZE)}).result
        if origin is None or origin.operands[0] not in forward:
            raise UnsupportedConstruct("adj: size of a released register is not recoverable")
        return builder.create(f"{OPT_DIALECT}.allocreg", [forward[origin.operands[0]]], [released.type]).result

    def _reverse_loop(self, op: Operation, builder: Builder, forward: Dict[Value, Value],
                      states: Dict[Value, Value]) -> None:
        if any(not r.type.is_state for r in op.results):
            raise UnsupportedConstruct(f"adj: {op.name} carries classical values")
        lower, upper, step = [forward.get(v, v) for v in op.operands[:3]]
        # last = lb + ((ub - lb - 1) / step) * step; iteration j runs iv = last + lb - j
        span = builder.binary("subi", builder.binary("subi", upper, lower), builder.constant(1))
        last = builder.binary("addi", lower, builder.binary("muli", builder.binary("divi", span, step), step))
        body = op.regions[0].entry
        new_body = Block([a.type for a in body.args])
        inner = Builder.at_end(new_body)
        inner_forward = dict(forward)
        inner_forward[body.args[0]] = inner.binary("subi", inner.binary("addi", last, lower), new_body.args[0])
        inner_states = dict(zip(body.terminator.main_operands, new_body.args[1:]))
        self._reverse_block(body, inner, inner_forward, inner_states)
        inner.create(body.terminator.name, [inner_states[a] for a in body.args[1:]])
        loop = builder.create(op.name, [lower, upper, step] + [states[r] for r in op.results],
                              [r.type for r in op.results], dict(op.attributes), regions=[Region([new_body])])
        for init, result in zip(op.operands[3:op.num_main], loop.results):
            states[init] = result

    def _reverse_if(self, op: Operation, builder: Builder, forward: Dict[Value, Value],
                    states: Dict[Value, Value]) -> None:
        if any(not r.type.is_state for r in op.results):
            raise UnsupportedConstruct("adj: scf.if yields classical values")
        consumed: List[Value] = []
        for nested in op.walk():
            for value in nested.main_operands:
                if value.type.is_state and is_defined_outside(value, op) and not any(value is c for c in consumed):
                    consumed.append(value)
        regions = []
        for region in op.regions:
            block = Block()
            inner = Builder.at_end(block)
            branch_states = dict(zip(region.entry.terminator.main_operands, [states[r] for r in op.results]))
            self._reverse_block(region.entry, inner, dict(forward), branch_states)
            inner.create("scf.yield", [branch_states[c] for c in consumed])
            regions.append(Region([block]))
        condition = forward.get(op.operands[0], op.operands[0])
        branch = builder.create("scf.if", [condition], [c.type for c in consumed], dict(op.attributes),
                                regions=regions)
        for value, result in zip(consumed, branch.results):
            states[value] = result

    def rewrite(self, kind: AppliedKind) -> None:
        target = self.adjoint(kind.base)
        _rewrite_site(kind, replace(kind, base=target.sym_name, adjoint=False, op=None))


def lower_adjoint(module: ModuleIR) -> ModuleIR:
    """Rewrite every adjoint circuit application to a call of the adjoint circuit.

    Raises:
        NonUnitaryCircuit: an adjointed circuit measures
        RecursionDetected: the circuit call graph has a cycle
    """
    check_recursion(call_graph(module))
    lowering = AdjointLowering(module)
    rewritten = 0
    while True:
        sites = _application_sites(module, lambda k: k.adjoint)
        if not sites:
            break
        for kind in sites:
            lowering.rewrite(kind)
            rewritten += 1
    logger.debug(f"lower-adj rewrote {rewritten} call site(s)")
    return module
