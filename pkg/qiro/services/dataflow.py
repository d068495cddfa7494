"""Local register dataflow: consolidating extract/combine pairs.

Index relations are decided from constants and value identity only; a pair
whose indices cannot be proven equal or distinct is left alone.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..core.constants import DEFAULT_FIXPOINT_CAP, OPT_DIALECT
from ..models import types as T
from ..models.builder import Builder, erase_op, replace_all_uses
from ..models.module import ModuleIR
from ..models.operation import Operation, RegAccess, Value
from .analysis import available_before, constant_value
from .rewriter import RewritePattern, apply_patterns

logger = logging.getLogger(__name__)

EXTRACT = f"{OPT_DIALECT}.extract"
COMBINE = f"{OPT_DIALECT}.combine"

EQUAL = "equal"
DISTINCT = "distinct"


@dataclass(frozen=True)
class Entry:
    """One extract/combine entry in builder form (Values in place of operand positions)."""
    access: RegAccess

    @property
    def single(self) -> bool:
        return self.access.is_single

    @property
    def folded(self) -> Tuple:
        parts = []
        for part in self.access.parts:
            if isinstance(part, Value):
                literal = constant_value(part)
                parts.append(literal if isinstance(literal, int) else part)
            else:
                parts.append(part)
        return tuple(parts)

    def index_set(self) -> Optional[frozenset]:
        parts = self.folded
        if not all(isinstance(p, int) for p in parts):
            return None
        if self.single:
            return frozenset({parts[0]})
        step = parts[2] if len(parts) == 3 else 1
        return frozenset(range(parts[0], parts[1], step))

    @property
    def values(self) -> List[Value]:
        return [p for p in self.access.parts if isinstance(p, Value)]


def entries_of(op: Operation) -> List[Entry]:
    return [Entry(op.user_access(e)) for e in op.entries]


def relation(a: Entry, b: Entry) -> Optional[str]:
    """EQUAL, DISTINCT or None when the indices cannot be decided."""
    left, right = a.index_set(), b.index_set()
    if left is not None and right is not None:
        if not left & right:
            return DISTINCT
        if left == right and a.single == b.single:
            return EQUAL
        return None
    if a.single == b.single and len(a.folded) == len(b.folded):
        if all(p is q or (isinstance(p, int) and p == q) for p, q in zip(a.folded, b.folded)):
            return EQUAL
    return None


def _extract(builder: Builder, register: Value, entries: Sequence[Entry], piece_types: Sequence[T.TypeDesc],
             remainder_type: T.TypeDesc) -> Operation:
    return builder.create(EXTRACT, [register], list(piece_types) + [remainder_type],
                          entries=[e.access for e in entries])


def _combine(builder: Builder, register: Value, entries: Sequence[Entry], states: Sequence[Value],
             result_type: T.TypeDesc) -> Operation:
    return builder.create(COMBINE, [register] + list(states), [result_type],
                          entries=[e.access for e in entries])


def _single_user_in_block(value: Value, user: Operation) -> bool:
    producer = value.defining_op
    return (
        producer is not None
        and value.num_uses == 1
        and value.uses[0].op is user
        and producer.parent is user.parent
    )


# ======================
# Patterns
# ======================


class CombineThenExtract(RewritePattern):
    """combine feeding an extract: cancel equal indices, hoist the rest of the extract."""

    root = EXTRACT
    benefit = 3

    def match(self, op: Operation, module: ModuleIR):
        combine = op.operands[0].defining_op
        if combine is None or combine.name != COMBINE or not op.entries or not combine.entries:
            return None
        if not _single_user_in_block(combine.result, op):
            return None
        extracted, combined = entries_of(op), entries_of(combine)
        equal: Dict[int, int] = {}
        for j, entry in enumerate(extracted):
            for i, other in enumerate(combined):
                found = relation(entry, other)
                if found is None:
                    return None
                if found == EQUAL:
                    equal[j] = i
        for j, entry in enumerate(extracted):
            if j not in equal and not all(available_before(v, combine) for v in entry.values):
                return None
        return equal

    def rewrite(self, op: Operation, equal: Dict[int, int], module: ModuleIR) -> None:
        combine = op.operands[0].defining_op
        extracted, combined = entries_of(op), entries_of(combine)
        states = combine.main_operands[1:]
        pieces = op.results[:-1]
        kept_e = [j for j in range(len(extracted)) if j not in equal]
        kept_c = [i for i in range(len(combined)) if i not in equal.values()]
        register = combine.operands[0]

        replacement: Dict[int, Value] = {j: states[i] for j, i in equal.items()}
        remainder = register
        if kept_e:
            hoisted = _extract(Builder.before(combine), register, [extracted[j] for j in kept_e],
                               [pieces[j].type for j in kept_e], register.type)
            for j, piece in zip(kept_e, hoisted.results):
                replacement[j] = piece
            remainder = hoisted.results[-1]
        merged = remainder
        if kept_c:
            merged = _combine(Builder.before(op), remainder, [combined[i] for i in kept_c],
                              [states[i] for i in kept_c], combine.result.type).result
        for j, piece in enumerate(pieces):
            replace_all_uses(piece, replacement[j])
        replace_all_uses(op.results[-1], merged)
        erase_op(op)
        erase_op(combine)
        logger.debug(f"combine/extract: {len(equal)} index pair(s) cancelled, {len(kept_e)} hoisted")


class CombineThenCombine(RewritePattern):
    """Two combines on distinct indices merge into one."""

    root = COMBINE
    benefit = 2

    def match(self, op: Operation, module: ModuleIR):
        first = op.operands[0].defining_op
        if first is None or first.name != COMBINE or not _single_user_in_block(first.result, op):
            return None
        for a in entries_of(first):
            for b in entries_of(op):
                if relation(a, b) != DISTINCT:
                    return None
        return first

    def rewrite(self, op: Operation, first: Operation, module: ModuleIR) -> None:
        merged = _combine(Builder.before(op), first.operands[0], entries_of(first) + entries_of(op),
                          first.main_operands[1:] + op.main_operands[1:], op.result.type)
        replace_all_uses(op.result, merged.result)
        erase_op(op)
        erase_op(first)


class ExtractThenExtract(RewritePattern):
    """An extract from another extract's remainder merges into it."""

    root = EXTRACT
    benefit = 2

    def match(self, op: Operation, module: ModuleIR):
        first = op.operands[0].defining_op
        if first is None or first.name != EXTRACT or op.operands[0] is not first.results[-1]:
            return None
        if not _single_user_in_block(first.results[-1], op):
            return None
        for a in entries_of(first):
            for b in entries_of(op):
                if relation(a, b) != DISTINCT:
                    return None
        if not all(available_before(v, first) for e in entries_of(op) for v in e.values):
            return None
        return first

    def rewrite(self, op: Operation, first: Operation, module: ModuleIR) -> None:
        pieces = first.results[:-1] + op.results[:-1]
        merged = _extract(Builder.before(first), first.operands[0], entries_of(first) + entries_of(op),
                          [p.type for p in pieces], op.results[-1].type)
        for old, new in zip(pieces + [op.results[-1]], merged.results):
            replace_all_uses(old, new)
        erase_op(op)
        erase_op(first)


class ExtractThenCombine(RewritePattern):
    """Putting an extracted state back at the index it came from is the identity."""

    root = COMBINE
    benefit = 3

    def match(self, op: Operation, module: ModuleIR):
        source = op.operands[0].defining_op
        if source is None or source.name != EXTRACT or op.operands[0] is not source.results[-1]:
            return None
        extracted = entries_of(source)
        pairs: Dict[int, int] = {}
        for k, (entry, state) in enumerate(zip(entries_of(op), op.main_operands[1:])):
            if state.defining_op is source and state.index < len(extracted):
                if relation(extracted[state.index], entry) == EQUAL:
                    pairs[k] = state.index
        return pairs or None

    def rewrite(self, op: Operation, pairs: Dict[int, int], module: ModuleIR) -> None:
        source = op.operands[0].defining_op
        extracted, combined = entries_of(source), entries_of(op)
        pieces = source.results[:-1]
        states = op.main_operands[1:]
        kept_e = [j for j in range(len(extracted)) if j not in pairs.values()]
        kept_c = [k for k in range(len(combined)) if k not in pairs]
        register = source.operands[0]
        remainder = register
        new_pieces: Dict[int, Value] = {}
        if kept_e:
            shrunk = _extract(Builder.before(source), register, [extracted[j] for j in kept_e],
                              [pieces[j].type for j in kept_e], source.results[-1].type)
            new_pieces = dict(zip(kept_e, shrunk.results))
            remainder = shrunk.results[-1]
        result = remainder
        if kept_c:
            result = _combine(Builder.before(op), remainder, [combined[k] for k in kept_c],
                              [new_pieces.get(states[k].index, states[k]) if states[k].defining_op is source
                               else states[k] for k in kept_c], op.result.type).result
        replace_all_uses(op.result, result)
        erase_op(op)
        for j, piece in enumerate(pieces):
            if j in new_pieces:
                replace_all_uses(piece, new_pieces[j])
        erase_op(source)


class EmptyExtract(RewritePattern):
    root = EXTRACT
    benefit = 4

    def match(self, op: Operation, module: ModuleIR):
        return True if not op.entries else None

    def rewrite(self, op: Operation, match, module: ModuleIR) -> None:
        replace_all_uses(op.results[-1], op.operands[0])
        erase_op(op)


class EmptyCombine(RewritePattern):
    root = COMBINE
    benefit = 4

    def match(self, op: Operation, module: ModuleIR):
        return True if not op.entries else None

    def rewrite(self, op: Operation, match, module: ModuleIR) -> None:
        replace_all_uses(op.result, op.operands[0])
        erase_op(op)


def dataflow_patterns() -> List[RewritePattern]:
    return [
        EmptyExtract(),
        EmptyCombine(),
        ExtractThenCombine(),
        CombineThenExtract(),
        CombineThenCombine(),
        ExtractThenExtract(),
    ]


def register_dataflow(module: ModuleIR, fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> ModuleIR:
    """Consolidate extract/combine pairs until none applies."""
    rewrites = apply_patterns(module, dataflow_patterns(), fixpoint_cap)
    logger.debug(f"register dataflow: {rewrites} rewrite(s)")
    return module
