"""Interpreter for the classical residue left by resource counting.

Executes integer/float arithmetic, memref buffers, structured and
unstructured control flow and calls; `res.inc` bumps the gate counters.
Measurement outcomes are the UNKNOWN value: an `scf.if` on UNKNOWN charges
the element-wise maximum of both branches.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..core.constants import (
    ATTR_CALLEE,
    ATTR_PREDICATE,
    ATTR_VALUE,
    COUNTER_MAX,
    DEFAULT_STEP_LIMIT,
    GATE_CLASSES,
)
from ..core.errors import StepLimitExceeded, Trap
from ..core.utils import saturating_add
from ..models import types as T
from ..models.module import ModuleIR, SymbolOp
from ..models.operation import Block, Operation, Value
from .arith import FOLDABLE, evaluate, wrap
from .resources import ATTR_AMOUNT, ATTR_GATE

logger = logging.getLogger(__name__)


class _Unknown:
    """A classical value that depends on a measurement outcome."""

    _instance: Optional["_Unknown"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "unknown"


UNKNOWN = _Unknown()


@dataclass
class ResourceReport:
    """Counts produced by one interpreted run."""
    entry: str
    args: Dict[str, Any]
    counts: Dict[str, int]
    results: List[Any] = field(default_factory=list)
    printed: List[Any] = field(default_factory=list)
    elapsed: float = 0.0
    steps: int = 0

    def count(self, gate_class: str) -> int:
        return self.counts.get(gate_class, 0)

    def lines(self) -> List[str]:
        """`<class>: <count>` per gate class, known classes first, then returned values."""
        ordered = [c for c in GATE_CLASSES if c in self.counts]
        ordered += sorted(c for c in self.counts if c not in GATE_CLASSES)
        lines = [f"{c}: {self.counts[c]}" for c in ordered]
        return lines + [f"result: {r!r}" for r in self.results]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entry": self.entry,
            "args": [f"{k}={v}" for k, v in self.args.items()],
            "counts": dict(self.counts),
            "results": [repr(r) if r is UNKNOWN else r for r in self.results],
            "elapsed": round(self.elapsed, 6),
            "steps": self.steps,
        }


# Outcome of running a block: ("return" | "yield", values) or ("branch", (block, values)).
Outcome = Tuple[str, Any]


class Interpreter:
    """Runs one entry symbol of a classical module."""

    def __init__(self, module: ModuleIR, step_limit: int = DEFAULT_STEP_LIMIT, counter_max: int = COUNTER_MAX):
        self.module = module
        self.step_limit = step_limit
        self.counter_max = counter_max
        self.counts: Dict[str, int] = {}
        self.printed: List[Any] = []
        self.steps = 0
        self.handlers: Dict[str, Callable[[Operation, Dict[Value, Any]], Optional[Outcome]]] = {
            "constant": self._constant,
            "scf.for": self._for,
            "affine.for": self._for,
            "scf.if": self._if,
            "scf.yield": self._yield,
            "affine.yield": self._yield,
            "return": self._return,
            "br": self._br,
            "cond_br": self._cond_br,
            "call": self._call,
            "alloc": self._alloc,
            "load": self._load,
            "store": self._store,
            "print": self._print,
            "res.inc": self._inc,
            "res.unknown": self._unknown,
        }

    # Entry points

    def run(self, entry: str, args: Optional[Dict[str, Any]] = None) -> ResourceReport:
        """Interpret `entry` with inputs bound by argument name.

        Raises:
            Trap: missing entry symbol or a runtime fault
            StepLimitExceeded: more operations executed than the step limit
            ValueError: inputs do not match the entry signature
        """
        args = dict(args or {})
        symbol = self.module.lookup(entry)
        if symbol is None:
            raise Trap(f"missing entry symbol @{entry}")
        values = self.bind_args(symbol, args)
        start = time.perf_counter()
        results = self.call(symbol, values)
        elapsed = time.perf_counter() - start
        logger.info(f"Interpreted @{entry} in {self.steps} steps ({elapsed:.3f}s)")
        return ResourceReport(entry, args, dict(self.counts), results, list(self.printed), elapsed, self.steps)

    @staticmethod
    def bind_args(symbol: SymbolOp, args: Dict[str, Any]) -> List[Any]:
        names = [n or f"arg{i}" for i, n in enumerate(symbol.arg_names)]
        unknown = set(args) - set(names)
        if unknown:
            raise ValueError(f"@{symbol.sym_name} has no argument(s) {', '.join(sorted(unknown))}")
        values = []
        for name, argument in zip(names, symbol.arguments):
            if name not in args:
                raise ValueError(f"missing value for argument {name} of @{symbol.sym_name}")
            values.append(_coerce(args[name], argument.type, name))
        return values

    def call(self, symbol: SymbolOp, values: List[Any]) -> List[Any]:
        env: Dict[Value, Any] = dict(zip(symbol.arguments, values))
        block = symbol.entry_block
        while True:
            kind, payload = self.exec_block(block, env)
            if kind == "branch":
                block, block_values = payload
                env.update(zip(block.args, block_values))
                continue
            return payload

    def exec_block(self, block: Block, env: Dict[Value, Any]) -> Outcome:
        for op in block.ops:
            self.steps += 1
            if self.steps > self.step_limit:
                raise StepLimitExceeded(f"step limit of {self.step_limit} exceeded")
            handler = self.handlers.get(op.name)
            if handler is not None:
                outcome = handler(op, env)
                if outcome is not None:
                    return outcome
            elif op.name in FOLDABLE:
                operands = [env[v] for v in op.operands]
                if any(v is UNKNOWN for v in operands):
                    env[op.result] = UNKNOWN
                else:
                    env[op.result] = evaluate(op.name, operands, op.result.type, op.attr(ATTR_PREDICATE, ""))
            else:
                raise Trap(f"cannot interpret {op.name}")
        return "yield", []

    # Handlers

    def _constant(self, op: Operation, env: Dict[Value, Any]) -> None:
        env[op.result] = op.attr(ATTR_VALUE)

    def _for(self, op: Operation, env: Dict[Value, Any]) -> None:
        lower, upper, step = (env[v] for v in op.operands[:3])
        if UNKNOWN in (lower, upper, step):
            raise Trap(f"{op.name} bounds depend on a measurement outcome")
        if step <= 0:
            raise Trap(f"{op.name} step must be positive, got {step}")
        body = op.regions[0].entry
        carried = [env[v] for v in op.operands[3:op.num_main]]
        iv = lower
        while iv < upper:
            env[body.args[0]] = iv
            env.update(zip(body.args[1:], carried))
            _, carried = self.exec_block(body, env)
            iv += step
        env.update(zip(op.results, carried))

    def _if(self, op: Operation, env: Dict[Value, Any]) -> None:
        condition = env[op.operands[0]]
        if condition is not UNKNOWN:
            region = op.regions[0] if condition else op.regions[1]
            _, values = self.exec_block(region.entry, env)
            env.update(zip(op.results, values))
            return
        before = dict(self.counts)
        _, then_values = self.exec_block(op.regions[0].entry, env)
        after_then = self.counts
        self.counts = dict(before)
        _, else_values = self.exec_block(op.regions[1].entry, env)
        after_else = self.counts
        merged = dict(before)
        for key in set(after_then) | set(after_else):
            delta = max(after_then.get(key, 0) - before.get(key, 0), after_else.get(key, 0) - before.get(key, 0))
            merged[key] = saturating_add(before.get(key, 0), delta, self.counter_max)
        self.counts = merged
        for result, a, b in zip(op.results, then_values, else_values):
            env[result] = a if a == b and a is not UNKNOWN else UNKNOWN

    def _yield(self, op: Operation, env: Dict[Value, Any]) -> Outcome:
        return "yield", [env[v] for v in op.main_operands]

    def _return(self, op: Operation, env: Dict[Value, Any]) -> Outcome:
        return "return", [env[v] for v in op.main_operands]

    def _br(self, op: Operation, env: Dict[Value, Any]) -> Outcome:
        return "branch", (op.successors[0], [env[v] for v in op.successor_operands(0)])

    def _cond_br(self, op: Operation, env: Dict[Value, Any]) -> Outcome:
        condition = env[op.operands[0]]
        if condition is UNKNOWN:
            raise Trap("cond_br on a measurement outcome; use scf.if for measurement-dependent control")
        index = 0 if condition else 1
        return "branch", (op.successors[index], [env[v] for v in op.successor_operands(index)])

    def _call(self, op: Operation, env: Dict[Value, Any]) -> None:
        callee = self.module.lookup(op.attr(ATTR_CALLEE))
        if callee is None:
            raise Trap(f"call to missing symbol @{op.attr(ATTR_CALLEE)}")
        results = self.call(callee, [env[v] for v in op.main_operands])
        env.update(zip(op.results, results))

    def _alloc(self, op: Operation, env: Dict[Value, Any]) -> None:
        buffer_type = op.result.type
        size = env[op.operands[0]] if op.num_main else buffer_type.size
        if size is None or size is UNKNOWN or size < 0:
            raise Trap(f"alloc needs a known non-negative size, got {size}")
        zero = 0.0 if buffer_type.elem is not None and buffer_type.elem.kind == T.TypeKind.FLOAT64 else 0
        env[op.result] = [zero] * size

    def _checked_index(self, buffer: List[Any], index: Any) -> int:
        if index is UNKNOWN or not 0 <= index < len(buffer):
            raise Trap(f"memref index {index} out of bounds for size {len(buffer)}")
        return index

    def _load(self, op: Operation, env: Dict[Value, Any]) -> None:
        buffer = env[op.operands[0]]
        env[op.result] = buffer[self._checked_index(buffer, env[op.operands[1]])]

    def _store(self, op: Operation, env: Dict[Value, Any]) -> None:
        buffer = env[op.operands[1]]
        buffer[self._checked_index(buffer, env[op.operands[2]])] = env[op.operands[0]]

    def _print(self, op: Operation, env: Dict[Value, Any]) -> None:
        values = [env[v] for v in op.main_operands]
        self.printed.append(values[0] if len(values) == 1 else values)

    def _inc(self, op: Operation, env: Dict[Value, Any]) -> None:
        amount = op.attr(ATTR_AMOUNT, 1)
        if op.num_main:
            size = env[op.operands[0]]
            if size is UNKNOWN:
                raise Trap("register size depends on a measurement outcome")
            amount *= size
        gate = op.attr(ATTR_GATE)
        self.counts[gate] = saturating_add(self.counts.get(gate, 0), amount, self.counter_max)

    def _unknown(self, op: Operation, env: Dict[Value, Any]) -> None:
        env[op.result] = UNKNOWN


def _coerce(value: Any, type_: T.TypeDesc, name: str) -> Any:
    if type_.kind in (T.TypeKind.INT, T.TypeKind.INDEX, T.TypeKind.BITVEC):
        if isinstance(value, float) and not value.is_integer():
            raise ValueError(f"argument {name} expects an integer, got {value}")
        return wrap(int(value), type_)
    if type_.kind == T.TypeKind.FLOAT64:
        return float(value)
    raise ValueError(f"argument {name} has type {type_}, which cannot be supplied from the command line")


def interpret(module: ModuleIR, entry: str, args: Optional[Dict[str, Any]] = None,
              step_limit: int = DEFAULT_STEP_LIMIT) -> ResourceReport:
    return Interpreter(module, step_limit).run(entry, args)
