"""Classical passes reused on both quantum dialects.

canonicalize, cse, circuit inlining, affine unrolling and strip-circ.
"""

import logging
from typing import Dict, List, Optional, Tuple

import networkx as nx

from ..core.constants import (
    ATTR_CALLEE,
    ATTR_COMPUTE,
    ATTR_NO_INLINE,
    ATTR_NO_INLINE_TARGET,
    ATTR_PREDICATE,
    ATTR_UNCOMPUTE,
    ADJOINT_MARKER,
    CONTROL_MARKER,
    DEFAULT_ENTRY,
    DEFAULT_FIXPOINT_CAP,
    INPUT_DIALECT,
    OPT_DIALECT,
)
from ..core.errors import RecursionDetected, Trap
from ..models import types as T
from ..models.builder import Builder, erase_op, replace_all_uses
from ..models.module import ModuleIR, SymbolOp
from ..models.operation import Block, Operation, Region, Value
from ..models.registry import is_pure, is_quantum_dialect
from .analysis import constant_value, describe_application, erase_gate_value_chain
from .arith import FOLDABLE, evaluate
from .dataflow import dataflow_patterns
from .peephole import quantum_canonical_patterns
from .rewriter import GreedyRewriteDriver, RewritePattern

logger = logging.getLogger(__name__)

LOOP_OPS = ("scf.for", "affine.for")


# ======================
# Canonicalization patterns
# ======================


class FoldConstants(RewritePattern):
    """Evaluate a classical op whose operands are all constants."""

    def match(self, op: Operation, module: ModuleIR):
        if op.name not in FOLDABLE or len(op.results) != 1:
            return None
        values = [constant_value(v) for v in op.operands]
        if any(v is None for v in values):
            return None
        try:
            return evaluate(op.name, values, op.result.type, op.attr(ATTR_PREDICATE, ""))
        except Trap:
            return None

    def rewrite(self, op: Operation, value, module: ModuleIR) -> None:
        constant = Builder.before(op).constant(value, op.result.type)
        replace_all_uses(op.result, constant)
        erase_op(op)


class UniqueConstants(RewritePattern):
    """A constant repeated in the same block reuses the first one."""

    root = "constant"

    def match(self, op: Operation, module: ModuleIR):
        for other in op.parent.ops:
            if other is op:
                return None
            if other.name == "constant" and other.attributes == op.attributes and \
                    other.result.type == op.result.type:
                return other
        return None

    def rewrite(self, op: Operation, other: Operation, module: ModuleIR) -> None:
        replace_all_uses(op.result, other.result)
        erase_op(op)


class EraseDeadPure(RewritePattern):
    """Side-effect-free ops whose results go unused."""

    def match(self, op: Operation, module: ModuleIR):
        if op.results and is_pure(op) and all(not r.uses for r in op.results):
            return True
        return None

    def rewrite(self, op: Operation, match, module: ModuleIR) -> None:
        erase_op(op)


def _splice_region(op: Operation, region_index: int) -> List[Value]:
    """Move a single-block region's ops in front of `op`; returns the terminator's operands."""
    block = op.regions[region_index].entry
    terminator = block.terminator
    yielded = list(terminator.main_operands)
    erase_op(terminator)
    target = op.parent
    for nested in list(block.ops):
        block.remove(nested)
        target.insert(target.index_of(op), nested)
    return yielded


class ConstantIf(RewritePattern):
    """scf.if on a constant condition becomes the taken branch."""

    root = "scf.if"

    def match(self, op: Operation, module: ModuleIR):
        value = constant_value(op.operands[0])
        return None if value is None else int(bool(value))

    def rewrite(self, op: Operation, taken: int, module: ModuleIR) -> None:
        yielded = _splice_region(op, 0 if taken else 1)
        for result, value in zip(op.results, yielded):
            replace_all_uses(result, value)
        erase_op(op)


class TrivialIf(RewritePattern):
    """scf.if with empty branches yielding the same values."""

    root = "scf.if"

    def match(self, op: Operation, module: ModuleIR):
        then_block, else_block = op.regions[0].entry, op.regions[1].entry
        if len(then_block.ops) != 1 or len(else_block.ops) != 1:
            return None
        a, b = then_block.terminator.main_operands, else_block.terminator.main_operands
        if all(x is y for x, y in zip(a, b)):
            return a
        return None

    def rewrite(self, op: Operation, values: List[Value], module: ModuleIR) -> None:
        values = list(values)
        for result, value in zip(op.results, values):
            replace_all_uses(result, value)
        erase_op(op)


def trip_count(op: Operation) -> Optional[int]:
    """Static iteration count of a loop, or None."""
    bounds = [constant_value(v) for v in op.operands[:3]]
    if any(not isinstance(b, int) for b in bounds):
        return None
    lower, upper, step = bounds
    if step <= 0:
        return None
    return len(range(lower, upper, step))


class ZeroTripLoop(RewritePattern):
    """A loop that never runs forwards its initial values."""

    def match(self, op: Operation, module: ModuleIR):
        if op.name not in LOOP_OPS or trip_count(op) != 0:
            return None
        return True

    def rewrite(self, op: Operation, match, module: ModuleIR) -> None:
        for result, init in zip(op.results, op.operands[3:op.num_main]):
            replace_all_uses(result, init)
        erase_op(op)


class EmptyLoop(RewritePattern):
    """A body that only yields its own iteration arguments does nothing."""

    def match(self, op: Operation, module: ModuleIR):
        if op.name not in LOOP_OPS:
            return None
        body = op.regions[0].entry
        if len(body.ops) != 1:
            return None
        yielded = body.terminator.main_operands
        if all(v is a for v, a in zip(yielded, body.args[1:])):
            return True
        return None

    def rewrite(self, op: Operation, match, module: ModuleIR) -> None:
        for result, init in zip(op.results, op.operands[3:op.num_main]):
            replace_all_uses(result, init)
        erase_op(op)


def classical_patterns() -> List[RewritePattern]:
    return [FoldConstants(), UniqueConstants(), EraseDeadPure(), ConstantIf(), TrivialIf(),
            ZeroTripLoop(), EmptyLoop()]


def canonical_patterns() -> List[RewritePattern]:
    return classical_patterns() + quantum_canonical_patterns() + dataflow_patterns()


def canonicalize(module: ModuleIR, fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> ModuleIR:
    """Fold, erase dead code and apply every canonicalization pattern to a fixpoint.

    Raises:
        FixpointOverflow: still changing after `fixpoint_cap` sweeps
    """
    driver = GreedyRewriteDriver(canonical_patterns(), fixpoint_cap)
    sweeps = driver.run(module)
    logger.debug(f"canonicalize converged after {sweeps} sweep(s): {dict(driver.applied)}")
    return module


# ======================
# CSE
# ======================


def _cse_key(op: Operation) -> Optional[Tuple]:
    if op.regions or is_quantum_dialect(op) or not is_pure(op) or not op.results:
        return None
    return (
        op.name,
        tuple(id(v) for v in op.operands),
        tuple(sorted((k, str(v)) for k, v in op.attributes.items())),
        tuple(str(r.type) for r in op.results),
    )


def _cse_block(block: Block) -> int:
    seen: Dict[Tuple, Operation] = {}
    merged = 0
    for op in list(block.ops):
        for region in op.regions:
            for nested in region.blocks:
                merged += _cse_block(nested)
        key = _cse_key(op)
        if key is None:
            continue
        earlier = seen.get(key)
        if earlier is None:
            seen[key] = op
            continue
        for old, new in zip(op.results, earlier.results):
            replace_all_uses(old, new)
        erase_op(op)
        merged += 1
    return merged


def cse(module: ModuleIR) -> ModuleIR:
    """Merge identical side-effect-free classical ops within each block."""
    merged = sum(_cse_block(block) for symbol in module.ops for block in symbol.body.blocks)
    logger.debug(f"cse merged {merged} op(s)")
    return module


# ======================
# Call graph, inlining and stripping
# ======================


def _references(symbol: SymbolOp) -> List[str]:
    names = []
    for op in symbol.walk():
        callee = op.attr(ATTR_CALLEE)
        if callee is not None and op is not symbol:
            names.append(callee)
    return names


def call_graph(module: ModuleIR) -> nx.DiGraph:
    """Symbol reference graph (calls and getval)."""
    graph = nx.DiGraph()
    for symbol in module.ops:
        graph.add_node(symbol.sym_name)
    for symbol in module.ops:
        for callee in _references(symbol):
            if module.lookup(callee) is not None:
                graph.add_edge(symbol.sym_name, callee)
    return graph


def check_recursion(graph: nx.DiGraph) -> None:
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return
    names = [edge[0] for edge in cycle] + [cycle[0][0]]
    raise RecursionDetected(names)


def _inlinable(op: Operation, module: ModuleIR) -> Optional[SymbolOp]:
    if op.has_attr(ATTR_NO_INLINE_TARGET):
        return None
    if op.short_name == "call" and op.dialect in (INPUT_DIALECT, OPT_DIALECT):
        callee_name = op.attr(ATTR_CALLEE)
    else:
        kind = describe_application(op)
        if kind is None or not kind.is_circuit or kind.adjoint or kind.controls:
            return None
        callee_name = kind.base
    callee = module.lookup(callee_name)
    if callee is None or not callee.is_circuit or callee.has_attr(ATTR_NO_INLINE):
        return None
    if len(callee.body.blocks) != 1:
        logger.info(f"Not inlining @{callee_name}: unstructured body")
        return None
    return callee


def inline_call(op: Operation, callee: SymbolOp) -> None:
    """Replace one call site with a copy of the callee body."""
    if op.short_name != "call":
        kind = describe_application(op)
        state_iter = iter(kind.state_operands)
        operands = [a if a is not None else next(state_iter) for a in kind.args]
        gate_value = op.operands[0]
    else:
        operands, gate_value = op.main_operands, None
    value_map: Dict[Value, Value] = dict(zip(callee.arguments, operands))
    markers = {k: v for k, v in op.attributes.items() if k in (ATTR_COMPUTE, ATTR_UNCOMPUTE)}
    target = op.parent
    returned: List[Value] = []
    for nested in callee.entry_block.ops:
        if nested is callee.entry_block.terminator:
            returned = [value_map.get(v, v) for v in nested.main_operands]
            break
        copy = nested.clone(value_map)
        if markers and is_quantum_dialect(copy):
            copy.attributes.update(markers)
        target.insert(target.index_of(op), copy)
    for result, value in zip(op.results, returned):
        replace_all_uses(result, value)
    erase_op(op)
    if gate_value is not None:
        erase_gate_value_chain(gate_value)


def inline_circuits(module: ModuleIR) -> ModuleIR:
    """Inline circuit calls bottom-up over the call graph.

    Raises:
        RecursionDetected: the call graph has a cycle
    """
    graph = call_graph(module)
    check_recursion(graph)
    inlined = 0
    for name in reversed(list(nx.topological_sort(graph))):
        symbol = module.lookup(name)
        if symbol is None:
            continue
        for op in list(symbol.walk()):
            if op is symbol:
                continue
            callee = _inlinable(op, module)
            if callee is not None:
                inline_call(op, callee)
                inlined += 1
    logger.debug(f"circuit-inline inlined {inlined} call(s)")
    return module


def strip_circuits(module: ModuleIR, entry: str = DEFAULT_ENTRY) -> ModuleIR:
    """Delete circuits no function (or the entry point) transitively references."""
    graph = call_graph(module)
    for symbol in module.circuits:
        for marker in (ADJOINT_MARKER, CONTROL_MARKER):
            target = symbol.attr(marker)
            if target and graph.has_node(target):
                graph.add_edge(target, symbol.sym_name)
    roots = {s.sym_name for s in module.functions}
    if module.lookup(entry) is not None:
        roots.add(entry)
    keep = set(roots)
    for root in roots:
        keep |= nx.descendants(graph, root)
    removed = [s.sym_name for s in module.circuits if s.sym_name not in keep]
    for name in removed:
        module.remove(name)
    if removed:
        logger.debug(f"strip-circ removed {', '.join('@' + n for n in removed)}")
    return module


# ======================
# Affine unrolling
# ======================


def _clone_iteration(body: Block, builder: Builder, iv: Value, carried: List[Value]) -> List[Value]:
    value_map: Dict[Value, Value] = {body.args[0]: iv}
    value_map.update(zip(body.args[1:], carried))
    for nested in body.ops[:-1]:
        builder.insert(nested.clone(value_map))
    return [value_map.get(v, v) for v in body.terminator.main_operands]


def unroll_loop(op: Operation, factor: Optional[int] = None) -> Optional[List[Operation]]:
    """Unroll one affine.for fully, or by `factor` with a remainder epilogue.

    Returns:
        The strided loop left by a partial unroll (empty after a full one),
        or None when the bounds are dynamic
    """
    count = trip_count(op)
    if count is None:
        logger.info("affine-unroll: skipping a loop with dynamic bounds")
        return None
    lower, _, step = (constant_value(v) for v in op.operands[:3])
    body = op.regions[0].entry
    carried = list(op.operands[3:op.num_main])
    builder = Builder.before(op)
    created: List[Operation] = []
    if factor is None or factor <= 1 or factor >= count:
        for k in range(count):
            carried = _clone_iteration(body, builder, builder.constant(lower + k * step, T.INDEX), carried)
    else:
        main = count // factor
        upper = lower + main * factor * step
        new_body = Block([T.INDEX] + [v.type for v in carried])
        inner = Builder.at_end(new_body)
        inner_carried = list(new_body.args[1:])
        for k in range(factor):
            iv = new_body.args[0]
            if k:
                iv = inner.binary("addi", new_body.args[0], inner.constant(k * step, T.INDEX))
            inner_carried = _clone_iteration(body, inner, iv, inner_carried)
        inner.create("affine.yield", inner_carried)
        loop = builder.create(
            "affine.for",
            [builder.constant(lower, T.INDEX), builder.constant(upper, T.INDEX),
             builder.constant(factor * step, T.INDEX)] + carried,
            [v.type for v in carried], dict(op.attributes), regions=[Region([new_body])])
        created.append(loop)
        carried = list(loop.results)
        for k in range(count - main * factor):
            carried = _clone_iteration(body, builder, builder.constant(upper + k * step, T.INDEX), carried)
    for result, value in zip(op.results, carried):
        replace_all_uses(result, value)
    erase_op(op)
    return created


def unroll_affine(module: ModuleIR, factor: Optional[int] = None) -> ModuleIR:
    """Unroll every affine.for with static bounds, innermost first.

    Loops whose bounds become static once an enclosing loop is unrolled are
    picked up by the next round.
    """
    unrolled = 0
    skipped: set = set()
    while True:
        loops = [op for op in module.walk() if op.name == "affine.for" and id(op) not in skipped]
        progress = False
        for op in reversed(loops):
            created = unroll_loop(op, factor if factor and factor > 1 else None)
            if created is None:
                skipped.add(id(op))
                continue
            unrolled += 1
            progress = True
            skipped.update(id(loop) for loop in created)
        if not progress:
            break
    logger.debug(f"affine-unroll unrolled {unrolled} loop(s)")
    return module
