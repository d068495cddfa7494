"""Def-use analyses shared by the quantum passes.

`describe_application` normalizes every way of applying a unitary in the
value-semantics dialect (direct native gate, `apply`, the apply forms of
`adj`/`ctrl`, `call`) into an AppliedKind; `build_application` turns a kind
back into IR.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, List, Optional, Sequence, Union

from ..core.constants import (
    ANGLE_EPSILON,
    ATTR_ANGLE,
    ATTR_CALLEE,
    ATTR_CTRLS,
    ATTR_VALUE,
    HERMITIAN_GATES,
    NATIVE_GATES,
    OPT_DIALECT,
    ROTATION_GATES,
)
from ..models import types as T
from ..models.builder import Builder, erase_op
from ..models.operation import Operation, Value
from ..models.registry import angle_of, gate_targets, is_native_gate, is_pure

logger = logging.getLogger(__name__)

Angle = Union[float, Value, None]

APPLY_OPS = (f"{OPT_DIALECT}.apply", f"{OPT_DIALECT}.adj", f"{OPT_DIALECT}.ctrl")


@dataclass(frozen=True)
class GateValueInfo:
    """What a gate value computes: a native gate or a circuit, with meta-operations folded in."""
    base: str
    is_circuit: bool
    adjoint: bool = False
    controls: int = 0
    angle: Angle = None


@dataclass
class AppliedKind:
    """One application of a unitary to state values.

    `args` is the operand list after the gate value, with None marking the
    slots that take state values; classical arguments stay in place.
    """
    base: str
    is_circuit: bool
    adjoint: bool
    controls: int
    angle: Angle
    args: List[Optional[Value]]
    classical_result_types: List[T.TypeDesc] = field(default_factory=list)
    op: Optional[Operation] = None

    @property
    def classical_args(self) -> List[Value]:
        return [a for a in self.args if a is not None]

    @property
    def state_operands(self) -> List[Value]:
        if self.op is None:
            return []
        offset = len(self.op.main_operands) - len(self.args)
        return [self.op.operands[offset + i] for i, a in enumerate(self.args) if a is None]

    @property
    def state_results(self) -> List[Value]:
        if self.op is None:
            return []
        return self.op.results[:self.num_states]

    @property
    def num_states(self) -> int:
        return sum(1 for a in self.args if a is None)

    @property
    def is_native(self) -> bool:
        return not self.is_circuit

    @property
    def is_hermitian(self) -> bool:
        return self.is_native and self.base in HERMITIAN_GATES

    @property
    def is_rotation(self) -> bool:
        return self.is_native and self.base in ROTATION_GATES

    def same_target(self, other: "AppliedKind") -> bool:
        """Same unitary up to adjoint parity and angle."""
        return (
            self.base == other.base
            and self.is_circuit == other.is_circuit
            and self.controls == other.controls
            and len(self.args) == len(other.args)
            and all(a is b for a, b in zip(self.args, other.args))
        )


# ======================
# Reading applications
# ======================


def constant_value(value: Value) -> Any:
    """Literal behind a `constant` op, or None."""
    op = value.defining_op
    if op is not None and op.name == "constant":
        return op.attr(ATTR_VALUE)
    return None


def resolve_gate_value(value: Value) -> Optional[GateValueInfo]:
    """Follow getval, native value forms and the value forms of adj/ctrl.

    Args:
        value: Gate value operand of an apply

    Returns:
        Base gate or circuit with its adjoint parity and control count, or
        None when the value is not built from those forms
    """
    op = value.defining_op
    if op is None or op.dialect != OPT_DIALECT:
        return None
    if op.short_name == "getval":
        return GateValueInfo(op.attr(ATTR_CALLEE), True)
    if is_native_gate(op) and not gate_targets(op):
        return GateValueInfo(op.short_name, False, angle=angle_of(op))
    if op.short_name in ("adj", "ctrl") and op.num_main == 1:
        inner = resolve_gate_value(op.operands[0])
        if inner is None:
            return None
        if op.short_name == "adj":
            return replace(inner, adjoint=not inner.adjoint)
        return replace(inner, controls=inner.controls + op.attr(ATTR_CTRLS, 1))
    return None


def describe_application(op: Operation) -> Optional[AppliedKind]:
    """Describe a unitary application in the optimization dialect.

    Args:
        op: Any operation

    Returns:
        The applied gate or circuit with folded adj and ctrl, or None when
        `op` applies no unitary
    """
    if op.dialect != OPT_DIALECT:
        return None
    if is_native_gate(op):
        targets = gate_targets(op)
        if not targets:
            return None
        return AppliedKind(op.short_name, False, False, 0, angle_of(op), [None] * len(targets), op=op)
    if op.short_name == "call":
        args = [None if v.type.is_state else v for v in op.main_operands]
        classical = [r.type for r in op.results[sum(1 for a in args if a is None):]]
        return AppliedKind(op.attr(ATTR_CALLEE), True, False, 0, None, args, classical, op)
    if op.name in APPLY_OPS and op.num_main > 1:
        info = resolve_gate_value(op.operands[0])
        if info is None:
            return None
        adjoint, controls = info.adjoint, info.controls
        if op.short_name == "adj":
            adjoint = not adjoint
        elif op.short_name == "ctrl":
            controls += op.attr(ATTR_CTRLS, 1)
        args = [None if v.type.is_state else v for v in op.main_operands[1:]]
        classical = [r.type for r in op.results[sum(1 for a in args if a is None):]]
        return AppliedKind(info.base, info.is_circuit, adjoint, controls, info.angle, args, classical, op)
    return None


def angles_equal(a: Angle, b: Angle) -> bool:
    """Constant angles within epsilon, or the very same dynamic angle value."""
    if isinstance(a, Value) or isinstance(b, Value):
        return a is b
    if a is None or b is None:
        return a is b
    return abs(a - b) < ANGLE_EPSILON


def states_linked(first: AppliedKind, second: AppliedKind) -> bool:
    """Every state operand of `second` is the matching state result of `first`, in order."""
    produced = first.state_results
    consumed = second.state_operands
    if len(produced) != len(consumed) or not produced:
        return False
    return all(p is c for p, c in zip(produced, consumed))


def is_defined_outside(value: Value, op: Operation) -> bool:
    """Whether `value` is available on entry to `op` (defined outside its regions)."""
    owner = value.defining_op
    if owner is None:
        block = value.owner
        owner = block.parent_op
        if owner is op:
            return False
    return owner is None or not op.is_ancestor_of(owner)


# ======================
# Building applications
# ======================


def _angle_operand(builder: Builder, angle: Angle, negate: bool) -> Angle:
    if isinstance(angle, Value):
        if negate:
            return builder.create("negf", [angle], [T.F64]).result
        return angle
    if angle is None:
        return None
    return -angle if negate else angle


def build_gate_value(builder: Builder, kind: AppliedKind) -> Value:
    """Gate value (getval or native value form) wrapped in adj and ctrl as needed."""
    if kind.is_circuit:
        value = builder.create(f"{OPT_DIALECT}.getval", [], [T.CIRC], {ATTR_CALLEE: kind.base}).result
    else:
        operands: List[Value] = []
        attrs = {}
        if isinstance(kind.angle, Value):
            operands.append(kind.angle)
        elif kind.angle is not None:
            attrs[ATTR_ANGLE] = float(kind.angle)
        gate_type = T.gate_value_type(NATIVE_GATES[kind.base]["qubits"])
        value = builder.create(f"{OPT_DIALECT}.{kind.base}", operands, [gate_type], attrs).result
    if kind.adjoint:
        value = builder.create(f"{OPT_DIALECT}.adj", [value], [value.type]).result
    if kind.controls:
        value = builder.create(f"{OPT_DIALECT}.ctrl", [value], [T.cop(kind.controls, value.type)],
                               {ATTR_CTRLS: kind.controls}).result
    return value


def build_application(builder: Builder, kind: AppliedKind, states: Sequence[Value],
                      attributes: Optional[dict] = None) -> Operation:
    """Emit `kind` applied to `states`; the new op's first results are the output states in order.

    Native gates without controls become direct gate ops (adjoint hermitian
    gates stay bare, adjoint rotations get the negated angle); plain circuits
    become calls; everything else is a gate-value chain plus `apply`.

    Args:
        builder: Insertion point
        kind: Gate or circuit to apply; its `op` is ignored
        states: Input states, controls first
        attributes: Extra attributes for the new op

    Returns:
        The application op

    Raises:
        ValueError: the number of states does not fit `kind`
    """
    states = list(states)
    if len(states) != kind.num_states:
        raise ValueError(f"{kind.base} takes {kind.num_states} state(s), got {len(states)}")
    attrs = dict(attributes or {})
    state_iter = iter(states)
    args = [a if a is not None else next(state_iter) for a in kind.args]
    state_types = [s.type for s in states]

    if kind.is_native and is_direct_form(kind):
        operands = list(states)
        angle = _angle_operand(builder, kind.angle, kind.adjoint and kind.is_rotation)
        if isinstance(angle, Value):
            operands.insert(0, angle)
        elif angle is not None:
            attrs[ATTR_ANGLE] = float(angle)
        return builder.create(f"{OPT_DIALECT}.{kind.base}", operands, state_types, attrs)
    if kind.is_circuit and is_direct_form(kind):
        attrs[ATTR_CALLEE] = kind.base
        return builder.create(f"{OPT_DIALECT}.call", args, state_types + kind.classical_result_types, attrs)
    value = build_gate_value(builder, kind)
    return builder.create(f"{OPT_DIALECT}.apply", [value] + args, state_types + kind.classical_result_types, attrs)


def erase_gate_value_chain(value: Value) -> None:
    """Drop a now-unused getval/value-form chain feeding an erased application."""
    op = value.defining_op
    while op is not None and not value.uses and is_pure(op) and op.dialect == OPT_DIALECT:
        inner = op.operands[0] if op.num_main and op.operands[0].type.is_gate_value else None
        erase_op(op)
        if inner is None:
            return
        value, op = inner, inner.defining_op


def available_before(value: Value, op: Operation) -> bool:
    """Whether `value` is defined at the program point just before `op`."""
    definer = value.defining_op
    current: Optional[Operation] = op
    while current is not None:
        if definer is None:
            if current.parent is value.owner:
                return True
        elif current.parent is definer.parent:
            return definer.is_before_in_block(current)
        current = current.parent_op
    return False


def is_direct_form(kind: AppliedKind) -> bool:
    """Whether build_application emits `kind` as a direct gate or a plain call."""
    if kind.is_circuit:
        return not kind.adjoint and kind.controls == 0
    return kind.controls == 0 and (not kind.adjoint or kind.is_hermitian or kind.is_rotation)
