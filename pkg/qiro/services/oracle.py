"""Gate-trace oracle.

Runs a lowered value-semantics module with concrete classical inputs,
allocating a fresh physical id per qubit, and records every native gate
in execution order. Control flow disappears in the trace, so a peephole
over it sees every cancellation a run-time optimizer could find. The
ratio of rotations removed statically to rotations removed on the trace
measures how much of that the compile-time pipeline recovers.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

from ..core.constants import (
    ANGLE_EPSILON,
    ATTR_SIZE,
    BASELINE_PIPELINE,
    DEFAULT_ENTRY,
    DEFAULT_PIPELINE,
    DEFAULT_STEP_LIMIT,
    HERMITIAN_GATES,
    NATIVE_GATES,
    OPT_DIALECT,
    ROTATION_GATES,
)
from ..core.errors import Trap, UnloweredMetaOp
from ..core.utils import is_zero_angle
from ..models.module import ModuleIR
from ..models.operation import Operation, Value
from .analysis import describe_application
from .interpreter import UNKNOWN, Interpreter
from .pipeline import PassContext, PassPipeline, estimate
from .resources import CostModel

logger = logging.getLogger(__name__)

# Lowers meta-operations without optimizing anything.
ORACLE_PIPELINE = ["convert-mem-to-val", "lower-ctrl", "lower-adj"]

MEASURE = "meas"


@dataclass(frozen=True)
class GateRecord:
    """One native gate on physical qubit ids."""
    base: str
    targets: Tuple[int, ...]
    controls: FrozenSet[int] = frozenset()
    adjoint: bool = False
    angle: Optional[float] = None

    @property
    def qubits(self) -> Tuple[int, ...]:
        return tuple(sorted(self.controls)) + self.targets

    @property
    def is_rotation(self) -> bool:
        return self.base in ROTATION_GATES

    def same_wires(self, other: "GateRecord") -> bool:
        if self.controls != other.controls:
            return False
        if self.base == "SWAP":
            return set(self.targets) == set(other.targets)
        return self.targets == other.targets


class TraceInterpreter(Interpreter):
    """Executes an optimization-dialect module and records its gates."""

    def __init__(self, module: ModuleIR, step_limit: int = DEFAULT_STEP_LIMIT):
        super().__init__(module, step_limit)
        self.trace: List[GateRecord] = []
        self.next_qubit = 0
        for gate in NATIVE_GATES:
            self.handlers[f"{OPT_DIALECT}.{gate}"] = self._application
        for short in ("apply", "adj", "ctrl", "call"):
            self.handlers[f"{OPT_DIALECT}.{short}"] = self._application
        self.handlers.update({
            f"{OPT_DIALECT}.alloc": self._qalloc,
            f"{OPT_DIALECT}.allocreg": self._qallocreg,
            f"{OPT_DIALECT}.free": self._release,
            f"{OPT_DIALECT}.freereg": self._release,
            f"{OPT_DIALECT}.meas": self._measure,
            f"{OPT_DIALECT}.extract": self._extract,
            f"{OPT_DIALECT}.combine": self._combine,
            f"{OPT_DIALECT}.getval": self._skip,
            f"{OPT_DIALECT}.return": self._return,
        })

    def record(self) -> List[GateRecord]:
        return list(self.trace)

    def _fresh(self, count: int) -> List[Optional[int]]:
        ids = list(range(self.next_qubit, self.next_qubit + count))
        self.next_qubit += count
        return ids

    # Handlers

    def _skip(self, op: Operation, env: Dict[Value, Any]) -> None:
        for result in op.results:
            env[result] = None

    def _qalloc(self, op: Operation, env: Dict[Value, Any]) -> None:
        env[op.result] = self._fresh(1)

    def _qallocreg(self, op: Operation, env: Dict[Value, Any]) -> None:
        size = op.attr(ATTR_SIZE) if op.has_attr(ATTR_SIZE) else env[op.operands[0]]
        if size is UNKNOWN or size < 0:
            raise Trap(f"register size must be a known non-negative integer, got {size}")
        env[op.result] = self._fresh(size)

    def _release(self, op: Operation, env: Dict[Value, Any]) -> None:
        pass

    def _measure(self, op: Operation, env: Dict[Value, Any]) -> None:
        qubits = env[op.operands[0]]
        for qubit in qubits:
            if qubit is not None:
                self.trace.append(GateRecord(MEASURE, (qubit,)))
        env[op.results[0]] = UNKNOWN
        env[op.results[1]] = qubits

    def _indices(self, op: Operation, access, env: Dict[Value, Any], size: int) -> List[int]:
        parts = [env[p] if isinstance(p, Value) else p for p in op.resolved_parts(access)]
        if any(p is UNKNOWN for p in parts):
            raise Trap("register index depends on a measurement outcome")
        if len(parts) == 1:
            indices = [parts[0]]
        else:
            step = parts[2] if len(parts) == 3 else 1
            indices = list(range(parts[0], parts[1], step))
        for index in indices:
            if not 0 <= index < size:
                raise Trap(f"register index {index} out of bounds for size {size}")
        return indices

    def _extract(self, op: Operation, env: Dict[Value, Any]) -> None:
        register = list(env[op.operands[0]])
        for access, piece in zip(op.entries, op.results[:-1]):
            indices = self._indices(op, access, env, len(register))
            ids = [register[i] for i in indices]
            if any(q is None for q in ids):
                raise Trap(f"extract of an already extracted qubit at {indices}")
            for index in indices:
                register[index] = None
            env[piece] = ids
        env[op.results[-1]] = register

    def _combine(self, op: Operation, env: Dict[Value, Any]) -> None:
        register = list(env[op.operands[0]])
        for access, state in zip(op.entries, op.main_operands[1:]):
            indices = self._indices(op, access, env, len(register))
            for index, qubit in zip(indices, env[state]):
                register[index] = qubit
        env[op.result] = register

    def _application(self, op: Operation, env: Dict[Value, Any]) -> None:
        kind = describe_application(op)
        if kind is None:
            self._skip(op, env)
            return
        states = kind.state_operands
        if kind.is_circuit:
            if kind.adjoint or kind.controls:
                raise UnloweredMetaOp(f"{'adj' if kind.adjoint else 'ctrl'} of @{kind.base} was not lowered")
            callee = self.module.lookup(kind.base)
            if callee is None:
                raise Trap(f"call to missing circuit @{kind.base}")
            state_iter = iter(states)
            operands = [a if a is not None else next(state_iter) for a in kind.args]
            results = self.call(callee, [env[v] for v in operands])
            env.update(zip(op.results, results))
            return

        angle = env[kind.angle] if isinstance(kind.angle, Value) else kind.angle
        if angle is UNKNOWN:
            raise Trap(f"{kind.base} angle depends on a measurement outcome")
        adjoint = kind.adjoint and kind.base not in HERMITIAN_GATES
        if adjoint and kind.is_rotation:
            angle, adjoint = -angle, False
        controls = frozenset(q for s in states[:kind.controls] for q in env[s] if q is not None)
        targets = [env[s] for s in states[kind.controls:]]
        if len(targets) == 1:
            for qubit in targets[0]:
                if qubit is not None:
                    self.trace.append(GateRecord(kind.base, (qubit,), controls, adjoint, angle))
        else:
            wires = tuple(ids[0] for ids in targets)
            self.trace.append(GateRecord(kind.base, wires, controls, adjoint, angle))
        for result, state in zip(kind.state_results, states):
            env[result] = env[state]

    def _if(self, op: Operation, env: Dict[Value, Any]) -> None:
        # The trace follows one path; an unknown outcome takes the then-branch.
        if env[op.operands[0]] is UNKNOWN:
            _, values = self.exec_block(op.regions[0].entry, env)
            env.update(zip(op.results, values))
            return
        super()._if(op, env)


# ======================
# Trace peephole
# ======================


def _merge(first: GateRecord, second: GateRecord) -> Tuple[bool, Optional[GateRecord]]:
    """(matched, survivor): survivor is None when the pair cancels."""
    if first.base != second.base or first.base == MEASURE or not first.same_wires(second):
        return False, None
    if first.base in HERMITIAN_GATES:
        return True, None
    if first.is_rotation:
        total = first.angle + second.angle
        if is_zero_angle(total, ANGLE_EPSILON):
            return True, None
        return True, replace(first, angle=total)
    if first.adjoint != second.adjoint:
        return True, None
    return False, None


def _peephole_pass(trace: Sequence[GateRecord]) -> List[GateRecord]:
    live: List[Optional[GateRecord]] = []
    stacks: Dict[int, List[int]] = defaultdict(list)
    for gate in trace:
        qubits = gate.qubits
        tops = {stacks[q][-1] if stacks[q] else None for q in qubits}
        if len(tops) == 1:
            top = tops.pop()
            if top is not None:
                matched, survivor = _merge(live[top], gate)
                if matched:
                    if survivor is None:
                        live[top] = None
                        for q in qubits:
                            stacks[q].pop()
                    else:
                        live[top] = survivor
                    continue
        position = len(live)
        live.append(gate)
        for q in qubits:
            stacks[q].append(position)
    return [g for g in live if g is not None]


def optimize_trace(trace: Sequence[GateRecord]) -> List[GateRecord]:
    """Cancel and merge adjacent gates per qubit until nothing changes."""
    current = list(trace)
    while True:
        optimized = _peephole_pass(current)
        if optimized == current:
            return optimized
        current = optimized


def count_rotations(trace: Sequence[GateRecord]) -> int:
    return sum(1 for gate in trace if gate.is_rotation)


# ======================
# Parity
# ======================


@dataclass
class ParityReport:
    """Rotations removed by the static pipeline against rotations removed on the trace."""
    entry: str
    args: Dict[str, Any]
    disabled: List[str]
    static_baseline: int
    static_optimized: int
    oracle_raw: int
    oracle_optimized: int
    gates: Dict[str, int] = field(default_factory=dict)

    @property
    def static_cancelled(self) -> int:
        return self.static_baseline - self.static_optimized

    @property
    def oracle_cancelled(self) -> int:
        return self.oracle_raw - self.oracle_optimized

    @property
    def ratio(self) -> Optional[float]:
        if self.oracle_cancelled == 0:
            return None
        return self.static_cancelled / self.oracle_cancelled

    def lines(self) -> List[str]:
        ratio = "n/a" if self.ratio is None else f"{self.ratio:.4f}"
        return [
            f"static rotations: {self.static_baseline} -> {self.static_optimized}",
            f"oracle rotations: {self.oracle_raw} -> {self.oracle_optimized}",
            f"ratio: {ratio}",
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entry": self.entry,
            "args": [f"{k}={v}" for k, v in self.args.items()],
            "disabled": list(self.disabled),
            "static": {"baseline": self.static_baseline, "optimized": self.static_optimized},
            "oracle": {"raw": self.oracle_raw, "optimized": self.oracle_optimized},
            "ratio": self.ratio,
            "oracle_gates": dict(self.gates),
        }


def gate_trace(module: ModuleIR, entry: str = DEFAULT_ENTRY, args: Optional[Dict[str, Any]] = None,
               step_limit: int = DEFAULT_STEP_LIMIT) -> List[GateRecord]:
    """Lower a parsed input module and record the gates its entry point executes."""
    context = PassContext(entry=entry, step_limit=step_limit)
    lowered = PassPipeline(ORACLE_PIPELINE, context).run(module)
    interpreter = TraceInterpreter(lowered, step_limit)
    interpreter.run(entry, args)
    logger.info(f"Traced {len(interpreter.trace)} gate(s) on {interpreter.next_qubit} qubit(s)")
    return interpreter.record()


def parity(module: ModuleIR, entry: str = DEFAULT_ENTRY, args: Optional[Dict[str, Any]] = None,
           disabled: Sequence[str] = (), step_limit: int = DEFAULT_STEP_LIMIT) -> ParityReport:
    """Compare static rotation cancellation with the trace oracle.

    Both sides count each rotation application once, controlled or not.

    Args:
        module: Parsed input-dialect program (not modified)
        entry: Entry symbol
        args: Entry inputs by argument name
        disabled: quantum-gate-opt parts left out of the static pipeline
        step_limit: Interpreter budget for each run

    Returns:
        Counts on both sides and their ratio
    """
    args = dict(args or {})
    context = PassContext(entry=entry, disabled=tuple(disabled), step_limit=step_limit,
                          cost=CostModel.ops())
    baseline = estimate(module.clone(), BASELINE_PIPELINE, args, context).count("rotation")
    optimized = estimate(module.clone(), DEFAULT_PIPELINE, args, context).count("rotation")
    trace = gate_trace(module.clone(), entry, args, step_limit)
    reduced = optimize_trace(trace)
    gates: Dict[str, int] = defaultdict(int)
    for gate in reduced:
        gates[gate.base] += 1
    report = ParityReport(entry, args, list(disabled), baseline, optimized,
                          count_rotations(trace), count_rotations(reduced), dict(gates))
    logger.info(f"Parity for @{entry}: static {report.static_cancelled}, "
                f"oracle {report.oracle_cancelled}, ratio {report.ratio}")
    return report
