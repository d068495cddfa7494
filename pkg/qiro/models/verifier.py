"""Module verifier: structural, dominance, linearity and meta-operation checks."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Set

import networkx as nx

from ..core.constants import ATTR_CALLEE, INPUT_DIALECT, Trait
from ..core.errors import ArityMismatch, UnknownOpName
from .module import ModuleIR, SymbolOp
from .operation import Block, Operation, Region, Use, Value
from .registry import check_signature, is_quantum_dialect, lookup

logger = logging.getLogger(__name__)

LOOP_OPS = ("scf.for", "affine.for")

EXPECTED_TERMINATOR = {
    "func": "return",
    "q.circ": "q.return",
    "qs.circ": "qs.return",
    "scf.for": "scf.yield",
    "scf.if": "scf.yield",
    "affine.for": "affine.yield",
}


@dataclass
class Diagnostic:
    """One verifier finding."""
    kind: str
    message: str
    op_name: Optional[str] = None
    symbol: Optional[str] = None
    severity: str = "error"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "message": self.message,
            "op": self.op_name,
            "symbol": self.symbol,
            "severity": self.severity,
        }

    def __str__(self) -> str:
        where = f" in @{self.symbol}" if self.symbol else ""
        op = f" ({self.op_name})" if self.op_name else ""
        return f"{self.kind}{where}{op}: {self.message}"


class _LinearityIssue(Exception):
    pass


class Verifier:
    """Collects diagnostics for one module; never raises on malformed IR."""

    def __init__(self, module: ModuleIR):
        self.module = module
        self.diagnostics: List[Diagnostic] = []
        self._symbol: Optional[str] = None
        self._positions: Dict[int, int] = {}
        self._dominators: Dict[int, Dict[Block, Block]] = {}
        self._unitary_cache: Dict[str, bool] = {}

    def report(self, kind: str, message: str, op: Optional[Operation] = None) -> None:
        self.diagnostics.append(Diagnostic(kind, message, op.name if op is not None else None, self._symbol))

    def run(self) -> List[Diagnostic]:
        for symbol in self.module.ops:
            self._symbol = symbol.sym_name
            self._positions = {}
            for op in symbol.walk():
                if op.parent is not None:
                    self._positions[id(op)] = op.parent.index_of(op)
            self._verify_symbol(symbol)
        self._symbol = None
        return self.diagnostics

    # Structure

    def _verify_symbol(self, symbol: SymbolOp) -> None:
        if not symbol.body.blocks:
            self.report("Structure", "symbol has no body", symbol)
            return
        self._verify_region(symbol.body, symbol)
        state_values: List[Value] = []
        for op in symbol.walk():
            if op is not symbol:
                self._verify_op(op)
            for region in op.regions:
                for block in region.blocks:
                    state_values.extend(a for a in block.args if a.type.is_state)
            if op is not symbol:
                state_values.extend(r for r in op.results if r.type.is_state)
        for value in state_values:
            self._check_linearity(value)

    def _verify_region(self, region: Region, owner: Operation) -> None:
        expected = EXPECTED_TERMINATOR.get(owner.name)
        for block in region.blocks:
            if not block.ops:
                self.report("Terminator", "block has no terminator", owner)
                continue
            for op in block.ops[:-1]:
                if self._is_terminator(op):
                    self.report("Terminator", "terminator in the middle of a block", op)
            last = block.ops[-1]
            if not self._is_terminator(last):
                self.report("Terminator", f"block must end with {expected or 'a terminator'}", owner)
            elif last.name in ("br", "cond_br"):
                if len(region.blocks) == 1 or owner.name not in ("func", "q.circ", "qs.circ"):
                    self.report("Terminator", "branches are only allowed in function bodies", last)
                for target in last.successors:
                    if target.parent is not region:
                        self.report("Terminator", "branch target outside the region", last)
                for i, target in enumerate(last.successors):
                    if len(last.successor_operands(i)) != len(target.args):
                        self.report("Terminator", "branch operand count does not match block arguments", last)
            elif expected is not None and last.name != expected:
                self.report("Terminator", f"expected {expected}, found {last.name}", last)
            else:
                self._check_terminator_values(last, owner)
            for op in block.ops:
                for nested in op.regions:
                    self._verify_region(nested, op)

    def _is_terminator(self, op: Operation) -> bool:
        try:
            return Trait.TERMINATOR in lookup(op.name).traits
        except UnknownOpName:
            return False

    def _check_terminator_values(self, term: Operation, owner: Operation) -> None:
        if isinstance(owner, SymbolOp):
            expected = owner.result_types
        elif owner.name in LOOP_OPS or owner.name == "scf.if":
            expected = [r.type for r in owner.results]
        else:
            return
        values = term.main_operands
        if len(values) != len(expected):
            self.report("Terminator", f"{term.name} yields {len(values)} value(s), expected {len(expected)}", term)
            return
        for value, type_ in zip(values, expected):
            if not type_.compatible(value.type):
                self.report("TypeMismatch", f"{term.name} yields {value.type}, expected {type_}", term)

    # Per-operation checks

    def _verify_op(self, op: Operation) -> None:
        try:
            check_signature(op)
        except UnknownOpName as exc:
            self.report("UnknownOpName", str(exc), op)
            return
        except ArityMismatch as exc:
            self.report("ArityMismatch", str(exc), op)
        for result in op.results:
            if result.owner is not op:
                self.report("SSA", "result registered on a different operation", op)
        for index, value in enumerate(op.operands):
            if not any(u.op is op and u.index == index for u in value.uses):
                self.report("DefUse", f"operand #{index} has no matching use record", op)
            self._check_dominance(value, op)
        for result in op.results:
            for use in result.uses:
                if use.index >= len(use.op.operands) or use.op.operands[use.index] is not result:
                    self.report("DefUse", "stale use record", op)
        self._check_access(op)
        self._check_symbols(op)
        if op.short_name in ("adj", "ctrl") and is_quantum_dialect(op):
            self._check_meta_target(op)

    def _check_access(self, op: Operation) -> None:
        if op.reg_access is not None:
            for index, access in enumerate(op.reg_access):
                if access is not None and not op.operands[index].type.is_register:
                    self.report("InvalidAccess", "register access on a non-register operand", op)
        if op.dialect == INPUT_DIALECT and is_quantum_dialect(op):
            seen: Set[Any] = set()
            whole: Set[int] = set()
            touched: Set[int] = set()
            for index, value in enumerate(op.main_operands):
                if not value.type.is_quantum:
                    continue
                access = op.access_of(index)
                # A value passed whole overlaps every other access to it, in either order.
                aliased = id(value) in whole or (access is None and id(value) in touched)
                if not aliased and access is not None and access.is_single and isinstance(access.start, int):
                    key = (id(value), access.start)
                    aliased = key in seen
                    seen.add(key)
                # Two dynamic indices are left to a run-time check.
                if aliased:
                    self.report("StaticAliasing", "the same qubit is passed more than once", op)
                touched.add(id(value))
                if access is None:
                    whole.add(id(value))
        if op.entries:
            static = [e.start for e in op.entries if e.is_single and isinstance(e.start, int)]
            if len(static) != len(set(static)):
                self.report("StaticAliasing", f"{op.short_name} names the same index twice", op)

    def _check_symbols(self, op: Operation) -> None:
        callee_name = op.attr(ATTR_CALLEE)
        if callee_name is None:
            return
        callee = self.module.lookup(callee_name)
        if callee is None:
            self.report("UnresolvedSymbol", f"@{callee_name} is not defined", op)
            return
        if op.name == "call" and callee.is_circuit:
            self.report("UnresolvedSymbol", f"@{callee_name} is a circuit; use a quantum call", op)
        if op.short_name == "call" and op.dialect and not callee.is_circuit:
            self.report("UnresolvedSymbol", f"@{callee_name} is not a circuit", op)
        if op.short_name == "call":
            args = op.main_operands
            if len(args) != len(callee.arguments):
                self.report("CallSignature", f"@{callee_name} takes {len(callee.arguments)} argument(s), got {len(args)}", op)
            else:
                for arg, param in zip(args, callee.arguments):
                    if not param.type.compatible(arg.type):
                        self.report("CallSignature", f"argument type {arg.type} does not match {param.type}", op)

    def _check_meta_target(self, op: Operation) -> None:
        name = resolve_circuit_symbol(op.operands[0])
        if name is None or self.module.lookup(name) is None:
            return
        if not self.is_unitary_circuit(name):
            self.report("NonUnitaryCircuit", f"@{name} contains measurements and cannot be inverted or controlled", op)

    def is_unitary_circuit(self, name: str) -> bool:
        if name in self._unitary_cache:
            return self._unitary_cache[name]
        self._unitary_cache[name] = True
        symbol = self.module.lookup(name)
        unitary = True
        if symbol is not None:
            for op in symbol.walk():
                if op.short_name == "meas" and is_quantum_dialect(op):
                    unitary = False
                    break
                callee = op.attr(ATTR_CALLEE)
                if callee and is_quantum_dialect(op) and not self.is_unitary_circuit(callee):
                    unitary = False
                    break
        self._unitary_cache[name] = unitary
        return unitary

    # Dominance

    def _dominator_tree(self, region: Region) -> Dict[Block, Block]:
        key = id(region)
        if key not in self._dominators:
            graph = nx.DiGraph()
            for block in region.blocks:
                graph.add_node(block)
                term = block.terminator
                if term is not None:
                    for target in term.successors:
                        if target.parent is region:
                            graph.add_edge(block, target)
            self._dominators[key] = nx.immediate_dominators(graph, region.entry)
        return self._dominators[key]

    def _block_dominates(self, a: Block, b: Block) -> bool:
        idom = self._dominator_tree(a.parent)
        if b not in idom:
            return True
        current = b
        while True:
            if current is a:
                return True
            parent = idom[current]
            if parent is current:
                return False
            current = parent

    def _check_dominance(self, value: Value, user: Operation) -> None:
        def_block = value.parent_block
        if def_block is None:
            self.report("Dominance", "operand is detached from the IR", user)
            return
        current = user
        while True:
            block = current.parent
            if block is None:
                self.report("Dominance", "operand defined outside the enclosing symbol", user)
                return
            if block is def_block:
                if value.is_block_argument:
                    return
                if self._positions.get(id(value.owner), -1) < self._positions.get(id(current), -1):
                    return
                self.report("Dominance", "operand used before its definition", user)
                return
            if def_block.parent is block.parent:
                if not self._block_dominates(def_block, block):
                    self.report("Dominance", "definition does not dominate the use", user)
                return
            owner = block.parent.parent if block.parent is not None else None
            if owner is None:
                self.report("Dominance", "operand defined outside the enclosing symbol", user)
                return
            if Trait.ISOLATED_BODY in lookup(owner.name).traits:
                self.report("Isolation", "body refers to a value from outside its symbol", user)
                return
            current = owner

    # Linearity

    def _check_linearity(self, value: Value) -> None:
        home = value.parent_block
        if home is None or home.parent is None:
            return
        try:
            count = self._count_uses(value.uses, home.parent)
        except _LinearityIssue as issue:
            self._report_linearity(value, str(issue))
            return
        if count == 0:
            self._report_linearity(value, "state value is never consumed")
        elif count > 1:
            self._report_linearity(value, f"state value is consumed {count} times")

    def _report_linearity(self, value: Value, message: str) -> None:
        owner = value.owner if isinstance(value.owner, Operation) else value.owner.parent_op
        self.report("LinearityViolation", message, owner)

    def _count_uses(self, uses: List[Use], region: Region) -> int:
        groups: Dict[int, List[Use]] = {}
        anchors: Dict[int, Operation] = {}
        for use in uses:
            anchor = use.op
            while anchor.parent is not None and anchor.parent.parent is not region:
                anchor = anchor.parent_op
                if anchor is None:
                    break
            if anchor is None:
                continue
            groups.setdefault(id(anchor), []).append(use)
            anchors[id(anchor)] = anchor
        total = 0
        for key, group in groups.items():
            total += self._count_at(anchors[key], group)
        return total

    def _count_at(self, anchor: Operation, uses: List[Use]) -> int:
        direct = [u for u in uses if u.op is anchor]
        nested = [u for u in uses if u.op is not anchor]
        count = len(direct)
        if anchor.name == "cond_br" and direct:
            # A value forwarded to both successors is consumed on one path only.
            start = anchor.num_main - sum(anchor.successor_sizes)
            per_segment = []
            for size in anchor.successor_sizes:
                per_segment.append(sum(1 for u in direct if start <= u.index < start + size))
                start += size
            leading = sum(1 for u in direct if u.index < anchor.num_main - sum(anchor.successor_sizes))
            count = max(per_segment) + leading
        if not nested:
            return count
        if anchor.name == "scf.if":
            branch_counts = []
            for region in anchor.regions:
                inside = [u for u in nested if _within(u.op, region)]
                branch_counts.append(self._count_uses(inside, region))
            if len(set(branch_counts)) > 1:
                raise _LinearityIssue(f"branches consume the state {branch_counts[0]} and {branch_counts[1]} times")
            return count + branch_counts[0]
        if anchor.name in LOOP_OPS:
            raise _LinearityIssue("state value used inside a loop body; it must be carried as an iteration argument")
        raise _LinearityIssue(f"state value captured by the region of {anchor.name}")


def _within(op: Operation, region: Region) -> bool:
    current: Optional[Operation] = op
    while current is not None and current.parent is not None:
        if current.parent.parent is region:
            return True
        current = current.parent_op
    return False


def resolve_circuit_symbol(value: Value) -> Optional[str]:
    """Circuit named by a gate value built from getval through adj/ctrl."""
    op = value.defining_op
    while op is not None:
        if op.short_name == "getval":
            return op.attr(ATTR_CALLEE)
        if op.short_name in ("adj", "ctrl") and op.num_main == 1:
            op = op.operands[0].defining_op
            continue
        return None
    return None


def verify(module: ModuleIR) -> List[Diagnostic]:
    """Return every problem found in `module`; an empty list means well-formed."""
    diagnostics = Verifier(module).run()
    if diagnostics:
        logger.debug(f"Verifier found {len(diagnostics)} problem(s)")
    return diagnostics
