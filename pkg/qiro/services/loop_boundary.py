"""Loop-boundary optimization.

When the first application in a loop body (on iteration arguments) is the
inverse of the last one (feeding the yield on the same positions), the pair
cancels across every back-edge. The first instance is hoisted before the loop
and the last after it. Same-axis rotations merge across iterations instead:
R(a) goes before the loop, the body keeps a single R(a+b), and R(-a) follows
the loop. Rotations only merge when the trip count is known to be at least
three; cancelling pairs also hoist out of loops with dynamic bounds, under an
`lb < ub` guard.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional

from ..core.constants import ANGLE_EPSILON, ATTR_ANGLE, DEFAULT_FIXPOINT_CAP
from ..core.errors import FixpointOverflow
from ..core.utils import is_zero_angle
from ..models.builder import Builder, replace_all_uses
from ..models.module import ModuleIR
from ..models.operation import Block, Operation, Region, Value
from .analysis import (
    AppliedKind,
    angles_equal,
    build_application,
    describe_application,
    is_defined_outside,
)
from .classical import trip_count
from .peephole import erase_application, summed_angle

logger = logging.getLogger(__name__)

LOOP_OPS = ("scf.for", "affine.for")

# Merging rotations across k iterations costs k + 2 rotations instead of 2k.
MIN_ROTATION_TRIPS = 3


@dataclass
class BoundaryMatch:
    prefix: AppliedKind
    suffix: AppliedKind
    positions: List[int]
    rotation: bool


def _invariant(kind: AppliedKind, loop: Operation) -> bool:
    values = list(kind.classical_args)
    if isinstance(kind.angle, Value):
        values.append(kind.angle)
    if any(r.uses for r in kind.op.results[kind.num_states:]):
        return False
    return all(is_defined_outside(v, loop) for v in values)


def _prefixes(loop: Operation) -> List[tuple]:
    """Applications in the body consuming only iteration arguments, with their positions."""
    body = loop.regions[0].entry
    found = []
    seen = set()
    for arg in body.args[1:]:
        if not arg.type.is_state or arg.num_uses != 1:
            continue
        user = arg.uses[0].op
        if user.parent is not body or id(user) in seen:
            continue
        seen.add(id(user))
        kind = describe_application(user)
        if kind is None or not _invariant(kind, loop):
            continue
        positions = []
        for state in kind.state_operands:
            if state.owner is not body or state.index == 0 or state.num_uses != 1:
                break
            positions.append(state.index - 1)
        else:
            found.append((kind, positions))
    return found


def _suffixes(loop: Operation) -> List[tuple]:
    """Applications whose state results go straight to the yield, with the yield positions."""
    body = loop.regions[0].entry
    terminator = body.terminator
    found = []
    seen = set()
    for value in terminator.main_operands:
        producer = value.defining_op
        if producer is None or producer.parent is not body or id(producer) in seen:
            continue
        seen.add(id(producer))
        kind = describe_application(producer)
        if kind is None or not _invariant(kind, loop):
            continue
        positions = []
        for result in kind.state_results:
            if result.num_uses != 1 or result.uses[0].op is not terminator:
                break
            positions.append(result.uses[0].index)
        else:
            found.append((kind, positions))
    return found


def find_boundary_match(loop: Operation) -> Optional[BoundaryMatch]:
    count = trip_count(loop)
    # A dynamic trip count may be 1 or 2, where merging adds rotations.
    merge_rotations = count is not None and count >= MIN_ROTATION_TRIPS
    for prefix, in_positions in _prefixes(loop):
        for suffix, out_positions in _suffixes(loop):
            if prefix.op is suffix.op or in_positions != out_positions:
                continue
            if any(s.defining_op is prefix.op for s in suffix.state_operands):
                continue
            if not prefix.same_target(suffix):
                continue
            if prefix.is_hermitian:
                return BoundaryMatch(prefix, suffix, in_positions, False)
            if prefix.adjoint != suffix.adjoint and angles_equal(prefix.angle, suffix.angle):
                return BoundaryMatch(prefix, suffix, in_positions, False)
            if merge_rotations and prefix.is_rotation and not prefix.adjoint and not suffix.adjoint:
                return BoundaryMatch(prefix, suffix, in_positions, True)
    return None


def _guarded(builder: Builder, guard: Optional[Value], states: List[Value],
             emit: Callable[[Builder, List[Value]], List[Value]]) -> List[Value]:
    """Emit gates on `states`, under `scf.if guard` when the loop may not run."""
    if guard is None:
        return emit(builder, states)
    then_block, else_block = Block(), Block()
    inner = Builder.at_end(then_block)
    inner.create("scf.yield", emit(inner, states))
    Builder.at_end(else_block).create("scf.yield", states)
    branch = builder.create("scf.if", [guard], [s.type for s in states],
                            regions=[Region([then_block]), Region([else_block])])
    return list(branch.results)


def _remove_inside(kind: AppliedKind) -> None:
    for result, original in zip(kind.state_results, kind.state_operands):
        replace_all_uses(result, original)
    erase_application(kind)


def _attrs(kind: AppliedKind) -> dict:
    return {k: v for k, v in kind.op.attributes.items() if k != ATTR_ANGLE}


def hoist(loop: Operation, match: BoundaryMatch) -> bool:
    """Apply one boundary match; False when the loop provably never runs."""
    count = trip_count(loop)
    if count == 0:
        logger.info(f"loop-boundary: skipping {loop.name} with zero iterations")
        return False
    before = Builder.before(loop)
    guard = None
    if count is None:
        guard = before.cmpi("slt", loop.operands[0], loop.operands[1])
    prefix, suffix = match.prefix, match.suffix
    n = len(match.positions)
    pre_kind = replace(prefix, op=None)
    pre_attrs = _attrs(prefix)
    if match.rotation:
        post_kind = replace(prefix, op=None, adjoint=True)
        total = summed_angle(before, prefix.angle, suffix.angle)
    else:
        post_kind = replace(suffix, op=None)
    post_attrs = _attrs(suffix)

    inits = [loop.operands[3 + p] for p in match.positions]
    hoisted = _guarded(before, guard, inits,
                       lambda b, s: build_application(b, pre_kind, s, pre_attrs).results[:n])
    for p, value in zip(match.positions, hoisted):
        loop.set_operand(3 + p, value)

    if match.rotation:
        _remove_inside(prefix)
        if isinstance(total, Value) or not is_zero_angle(total, ANGLE_EPSILON):
            merged = build_application(Builder.before(suffix.op), replace(suffix, op=None, angle=total),
                                       suffix.state_operands, post_attrs)
            for old, fresh in zip(suffix.state_results, merged.results):
                replace_all_uses(old, fresh)
            erase_application(suffix)
        else:
            _remove_inside(suffix)
    else:
        _remove_inside(prefix)
        _remove_inside(suffix)

    results = [loop.results[p] for p in match.positions]
    old_uses = [list(r.uses) for r in results]
    after = Builder.after(loop)
    outputs = _guarded(after, guard, results,
                       lambda b, s: build_application(b, post_kind, s, post_attrs).results[:n])
    for uses, value in zip(old_uses, outputs):
        for use in uses:
            use.op.set_operand(use.index, value)
    logger.debug(f"loop-boundary: hoisted {prefix.base} pair out of {loop.name}"
                 f"{' under a trip-count guard' if guard is not None else ''}")
    return True


def loop_boundary(module: ModuleIR, fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> bool:
    """Hoist boundary pairs out of every value-semantics loop until none is left.

    Returns:
        Whether anything changed

    Raises:
        FixpointOverflow: a single loop kept matching past the cap times its body size
    """
    changed = False
    skipped: set = set()
    budget = fixpoint_cap * max(1, module.op_count())
    while True:
        progress = False
        for op in list(module.walk()):
            if op.name not in LOOP_OPS or id(op) in skipped:
                continue
            if not any(a.type.is_state for a in op.regions[0].entry.args):
                continue
            match = find_boundary_match(op)
            if match is None:
                continue
            if hoist(op, match):
                progress = changed = True
                budget -= 1
            else:
                skipped.add(id(op))
        if not progress:
            return changed
        if budget <= 0:
            raise FixpointOverflow("loop-boundary did not converge")
