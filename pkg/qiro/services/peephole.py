"""Gate-pair peephole rewrites and the quantum canonicalization patterns.

A pair is two applications where every state operand of the second is the
matching state result of the first. Hermitian and adjoint pairs cancel,
same-axis rotations merge into one rotation by the summed angle.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional

from ..core.constants import ANGLE_EPSILON, ATTR_ANGLE, DEFAULT_FIXPOINT_CAP, OPT_DIALECT, Trait
from ..core.utils import is_zero_angle
from ..models import types as T
from ..models.builder import Builder, erase_op, replace_all_uses
from ..models.module import ModuleIR
from ..models.operation import Operation, Value
from ..models.registry import angle_of, is_native_gate, is_rotation
from ..models.verifier import Verifier
from .analysis import (
    APPLY_OPS,
    AppliedKind,
    angles_equal,
    build_application,
    describe_application,
    erase_gate_value_chain,
    is_direct_form,
    states_linked,
)
from .rewriter import RewritePattern, apply_patterns

logger = logging.getLogger(__name__)


class PairKind(str, Enum):
    HERMITIAN = "HermitianPair"
    ADJOINT = "AdjointPair"
    ROTATION = "RotationPair"


@dataclass
class GatePairMatch:
    first: AppliedKind
    second: AppliedKind
    kind: PairKind


def find_pair(op: Operation) -> Optional[GatePairMatch]:
    """Pair ending at `op`, if its state operands all come from one matching application."""
    second = describe_application(op)
    if second is None or second.num_states == 0:
        return None
    producer = second.state_operands[0].defining_op
    if producer is None:
        return None
    first = describe_application(producer)
    if first is None or not states_linked(first, second) or not first.same_target(second):
        return None
    if any(r.num_uses != 1 for r in first.state_results):
        return None
    if any(r.uses for r in first.op.results[first.num_states:]):
        return None
    if any(r.uses for r in op.results[second.num_states:]):
        return None
    if first.is_hermitian:
        return GatePairMatch(first, second, PairKind.HERMITIAN)
    if first.adjoint != second.adjoint and angles_equal(first.angle, second.angle):
        return GatePairMatch(first, second, PairKind.ADJOINT)
    if first.is_rotation and not first.adjoint and not second.adjoint:
        return GatePairMatch(first, second, PairKind.ROTATION)
    return None


def _gate_value(kind: AppliedKind) -> Optional[Value]:
    op = kind.op
    if op.name in APPLY_OPS and op.num_main and op.operands[0].type.is_gate_value:
        return op.operands[0]
    return None


def erase_application(kind: AppliedKind) -> None:
    value = _gate_value(kind)
    erase_op(kind.op)
    if value is not None:
        erase_gate_value_chain(value)


def cancel_pair(match: GatePairMatch) -> None:
    """Drop both applications; consumers of the second see the first's inputs."""
    inputs = match.first.state_operands
    for result, original in zip(match.second.state_results, inputs):
        replace_all_uses(result, original)
    erase_application(match.second)
    erase_application(match.first)


def summed_angle(builder: Builder, a, b):
    """a + b, folded when both are static, otherwise an addf at the builder."""
    if not isinstance(a, Value) and not isinstance(b, Value):
        return float(a) + float(b)
    lhs = a if isinstance(a, Value) else builder.constant(float(a), T.F64)
    rhs = b if isinstance(b, Value) else builder.constant(float(b), T.F64)
    return builder.create("addf", [lhs, rhs], [T.F64]).result


def merge_rotation_pair(match: GatePairMatch) -> None:
    first, second = match.first, match.second
    builder = Builder.before(second.op)
    angle = summed_angle(builder, first.angle, second.angle)
    if not isinstance(angle, Value) and is_zero_angle(angle, ANGLE_EPSILON):
        cancel_pair(match)
        return
    merged = AppliedKind(first.base, False, False, first.controls, angle, list(first.args))
    attrs = {k: v for k, v in second.op.attributes.items() if k != ATTR_ANGLE}
    new = build_application(builder, merged, first.state_operands, attrs)
    for old, fresh in zip(second.state_results, new.results):
        replace_all_uses(old, fresh)
    erase_application(second)
    erase_application(first)


class _PairPattern(RewritePattern):
    pair_kind: PairKind = PairKind.HERMITIAN
    benefit = 2

    def match(self, op: Operation, module: ModuleIR):
        found = find_pair(op)
        if found is None or found.kind != self.pair_kind:
            return None
        return found

    def rewrite(self, op: Operation, match: GatePairMatch, module: ModuleIR) -> None:
        logger.debug(f"{match.kind.value}: {match.first.op.name} / {op.name}")
        cancel_pair(match)


class HermitianPairPattern(_PairPattern):
    pair_kind = PairKind.HERMITIAN


class AdjointPairPattern(_PairPattern):
    pair_kind = PairKind.ADJOINT


class RotationPairPattern(_PairPattern):
    pair_kind = PairKind.ROTATION
    benefit = 1

    def rewrite(self, op: Operation, match: GatePairMatch, module: ModuleIR) -> None:
        logger.debug(f"RotationPair: {op.name}")
        merge_rotation_pair(match)


PAIR_PATTERNS = {
    "hermitian": HermitianPairPattern,
    "adjoint": AdjointPairPattern,
    "rotation": RotationPairPattern,
}


def pair_patterns(parts: Iterable[str] = tuple(PAIR_PATTERNS)) -> List[RewritePattern]:
    return [PAIR_PATTERNS[p]() for p in parts if p in PAIR_PATTERNS]


def _run_pairs(module: ModuleIR, part: str, fixpoint_cap: int) -> ModuleIR:
    rewrites = apply_patterns(module, pair_patterns([part]), fixpoint_cap)
    logger.debug(f"{part} pairs: {rewrites} rewrite(s)")
    return module


def peephole_hermitian(module: ModuleIR, fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> ModuleIR:
    """Cancel adjacent identical self-inverse gates on linked states."""
    return _run_pairs(module, "hermitian", fixpoint_cap)


def peephole_adjoint(module: ModuleIR, fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> ModuleIR:
    """Cancel an application followed by its adjoint, natives and circuits alike."""
    return _run_pairs(module, "adjoint", fixpoint_cap)


def merge_rotations(module: ModuleIR, fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> ModuleIR:
    return _run_pairs(module, "rotation", fixpoint_cap)


# ======================
# Quantum canonicalization
# ======================

ADJ = f"{OPT_DIALECT}.adj"


class AdjOfAdj(RewritePattern):
    """adj(adj g) is g."""

    root = ADJ

    def match(self, op: Operation, module: ModuleIR):
        if op.num_main != 1:
            return None
        inner = op.operands[0].defining_op
        if inner is None or inner.name != ADJ or inner.num_main != 1:
            return None
        return inner.operands[0]

    def rewrite(self, op: Operation, value: Value, module: ModuleIR) -> None:
        replace_all_uses(op.result, value)
        erase_gate_value_chain(op.result)


class AdjOfNativeValue(RewritePattern):
    """adj of a hermitian gate value is the gate; adj of a rotation negates its angle."""

    root = ADJ

    def match(self, op: Operation, module: ModuleIR):
        if op.num_main != 1:
            return None
        inner = op.operands[0].defining_op
        if inner is None or not is_native_gate(inner) or inner.dialect != OPT_DIALECT:
            return None
        if inner.has_trait(Trait.HERMITIAN) or is_rotation(inner):
            return inner
        return None

    def rewrite(self, op: Operation, inner: Operation, module: ModuleIR) -> None:
        if is_rotation(inner):
            builder = Builder.before(op)
            angle = angle_of(inner)
            if isinstance(angle, Value):
                operands = [builder.create("negf", [angle], [T.F64]).result]
                attrs = {}
            else:
                operands, attrs = [], {ATTR_ANGLE: -angle}
            value = builder.create(inner.name, operands, [inner.result.type], attrs).result
        else:
            value = inner.result
        replace_all_uses(op.result, value)
        erase_gate_value_chain(op.result)


class DirectApplication(RewritePattern):
    """Applications that need no gate value (uncontrolled native gates, plain circuits) become direct ops."""

    benefit = 2

    def match(self, op: Operation, module: ModuleIR):
        if op.name not in APPLY_OPS:
            return None
        kind = describe_application(op)
        if kind is None or not is_direct_form(kind):
            return None
        return kind

    def rewrite(self, op: Operation, kind: AppliedKind, module: ModuleIR) -> None:
        new = build_application(Builder.before(op), kind, kind.state_operands, dict(op.attributes))
        for old, fresh in zip(op.results, new.results):
            replace_all_uses(old, fresh)
        erase_application(kind)


class AllocThenFree(RewritePattern):
    """A qubit released right after allocation was never needed."""

    def match(self, op: Operation, module: ModuleIR):
        if op.name not in (f"{OPT_DIALECT}.free", f"{OPT_DIALECT}.freereg"):
            return None
        source = op.operands[0].defining_op
        if source is None or source.name not in (f"{OPT_DIALECT}.alloc", f"{OPT_DIALECT}.allocreg"):
            return None
        return source

    def rewrite(self, op: Operation, source: Operation, module: ModuleIR) -> None:
        erase_op(op)
        erase_op(source)


def _free_name(value: Value) -> str:
    return f"{OPT_DIALECT}.freereg" if value.type.is_register else f"{OPT_DIALECT}.free"


class UnitaryBeforeFree(RewritePattern):
    """A unitary whose every output state is released is dead: release its inputs instead."""

    def match(self, op: Operation, module: ModuleIR):
        if op.name not in (f"{OPT_DIALECT}.free", f"{OPT_DIALECT}.freereg"):
            return None
        producer = op.operands[0].defining_op
        if producer is None:
            return None
        kind = describe_application(producer)
        if kind is None:
            return None
        if kind.is_circuit and not Verifier(module).is_unitary_circuit(kind.base):
            return None
        for result in kind.state_results:
            if result.num_uses != 1 or result.uses[0].op.name not in (
                    f"{OPT_DIALECT}.free", f"{OPT_DIALECT}.freereg"):
                return None
            if result.uses[0].op.parent is not producer.parent:
                return None
        if any(r.uses for r in producer.results[kind.num_states:]):
            return None
        return kind

    def rewrite(self, op: Operation, kind: AppliedKind, module: ModuleIR) -> None:
        builder = Builder.before(kind.op)
        for state in kind.state_operands:
            builder.create(_free_name(state), [state])
        for result in kind.state_results:
            erase_op(result.uses[0].op)
        erase_application(kind)


def quantum_canonical_patterns() -> List[RewritePattern]:
    return [AdjOfAdj(), AdjOfNativeValue(), DirectApplication(), AllocThenFree(), UnitaryBeforeFree()]
