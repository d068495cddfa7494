"""Random programs keep their unitary through the optimizing pipeline and through each transform alone."""

from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pytest

from qiro.core.constants import DEFAULT_PIPELINE
from qiro.models.equivalence import structural_difference
from qiro.models.module import ModuleIR
from qiro.models.verifier import verify
from qiro.services.loop_boundary import loop_boundary
from qiro.services.meta_lowering import lower_adjoint, lower_control
from qiro.services.oracle import MEASURE, GateRecord, TraceInterpreter, gate_trace
from qiro.services.parser import parse
from qiro.services.peephole import merge_rotations, peephole_adjoint, peephole_hermitian
from qiro.services.pipeline import PassContext, PassPipeline
from qiro.services.printer import print_module

NUM_QUBITS = 3
ANGLES = (0.25, -0.25, 0.5, 1.0, -1.5)
ONE_QUBIT = ("H", "X", "Y", "Z", "S", "T")
SELF_INVERSE = ("H", "X", "Y", "Z")
ROTATIONS = ("R", "Rx", "Ry", "Rz")
CALL_FORMS = ("plain", "adj", "ctrl", "undo")

COMPILE = [name for name in DEFAULT_PIPELINE if name != "count-resources"]
UNROLLED = COMPILE[:1] + ["affine-unroll"] + COMPILE[1:]


class ProgramWriter:
    """Emits a random input-dialect program over a fixed set of wires.

    Alongside the text it keeps the gates the program should execute, with
    adjoint and controlled calls expanded by hand.
    """

    def __init__(self, rng: np.random.Generator, forms: Sequence[str] = CALL_FORMS):
        self.rng = rng
        self.forms = list(forms)
        self.counter = 0
        self.sub: List[GateRecord] = []
        self.expected: List[GateRecord] = []

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"%{prefix}{self.counter}"

    def wires(self, count: int, pool):
        return [pool[int(i)] for i in self.rng.choice(len(pool), size=count, replace=False)]

    def gate(self, pool) -> Tuple[str, GateRecord]:
        choice = int(self.rng.integers(4))
        if choice == 0:
            [q] = self.wires(1, pool)
            base = str(self.rng.choice(ONE_QUBIT))
            return f"q.{base} {q}", GateRecord(base, (q,))
        if choice == 1:
            [q] = self.wires(1, pool)
            base = str(self.rng.choice(ROTATIONS))
            angle = float(self.rng.choice(ANGLES))
            return f"q.{base}({angle}) {q}", GateRecord(base, (q,), angle=angle)
        a, b = self.wires(2, pool)
        base = "CX" if choice == 2 else "SWAP"
        return f"q.{base} {a}, {b}", GateRecord(base, (a, b))

    def gates(self, pool, low: int, high: int) -> Tuple[List[str], List[GateRecord]]:
        pairs = [self.gate(pool) for _ in range(int(self.rng.integers(low, high + 1)))]
        return [line for line, _ in pairs], [record for _, record in pairs]

    def subcircuit(self) -> str:
        lines, self.sub = self.gates(["%a", "%b"], 1, 5)
        body = "\n".join(f"  {line}" for line in lines)
        return f"q.circ @sub(%a: !q.qubit, %b: !q.qubit) {{\n{body}\n}}\n"

    def sub_gates(self, a: str, b: str, adjoint: bool = False,
                  control: Optional[str] = None) -> List[GateRecord]:
        wires = {"%a": a, "%b": b}
        records = [replace(r, targets=tuple(wires[t] for t in r.targets)) for r in self.sub]
        if adjoint:
            records = [replace(r, adjoint=not r.adjoint) for r in reversed(records)]
        if control is not None:
            records = [replace(r, controls=frozenset([control])) for r in records]
        return records

    def call_site(self, pool) -> Tuple[List[str], List[GateRecord]]:
        a, b, c = self.wires(3, pool)
        form = self.forms[int(self.rng.integers(len(self.forms)))]
        plain = f"q.call @sub({a}, {b})"
        if form == "plain":
            return [plain], self.sub_gates(a, b)
        value = self.fresh("g")
        meta = self.fresh("m")
        if form == "ctrl":
            return ([f"{value} = q.getval @sub : !q.circ",
                     f"{meta} = q.ctrl {value} {{ctrls = 1}} : !q.cop<1, !q.circ>",
                     f"q.apply {meta}, {c}, {a}, {b}"],
                    self.sub_gates(a, b, control=c))
        lines = [f"{value} = q.getval @sub : !q.circ",
                 f"{meta} = q.adj {value} : !q.circ",
                 f"q.apply {meta}, {a}, {b}"]
        records = self.sub_gates(a, b, adjoint=True)
        if form == "undo":
            return [plain] + lines, self.sub_gates(a, b) + records
        return lines, records

    def loop(self, pool) -> Tuple[List[str], List[GateRecord]]:
        trips = int(self.rng.integers(4))
        lines, records = self.gates(pool, 1, 4)
        return self._wrap(trips, lines), records * trips

    def boundary_loop(self, pool) -> Tuple[List[str], List[GateRecord]]:
        """A loop whose body starts and ends on the same wire with a matching gate."""
        trips = int(self.rng.integers(5))
        [q] = self.wires(1, pool)
        if self.rng.integers(2):
            base = str(self.rng.choice(SELF_INVERSE))
            first = last = (f"q.{base} {q}", GateRecord(base, (q,)))
        else:
            base = str(self.rng.choice(ROTATIONS))
            angles = [float(a) for a in self.rng.choice(ANGLES, size=2)]
            first, last = [(f"q.{base}({angle}) {q}", GateRecord(base, (q,), angle=angle)) for angle in angles]
        lines, records = self.gates(pool, 0, 3)
        lines = [first[0]] + lines + [last[0]]
        records = [first[1]] + records + [last[1]]
        return self._wrap(trips, lines), records * trips

    def _wrap(self, trips: int, body: List[str]) -> List[str]:
        index = self.fresh("i")
        return [f"affine.for {index} = 0 to {trips} {{"] + [f"  {line}" for line in body] + ["}"]

    def program(self) -> str:
        pool = [f"%q{i}" for i in range(NUM_QUBITS)]
        header = self.subcircuit()
        lines = [f"{q} = q.alloc : !q.qubit" for q in pool]
        records: List[GateRecord] = []
        for _ in range(int(self.rng.integers(4, 9))):
            kind = int(self.rng.integers(6))
            if kind == 0:
                more = self.call_site(pool)
            elif kind == 1:
                more = self.loop(pool)
            elif kind == 2:
                more = self.boundary_loop(pool)
            else:
                more = self.gates(pool, 1, 4)
            lines += more[0]
            records += more[1]
        ids = {q: i for i, q in enumerate(pool)}
        self.expected = [replace(r, targets=tuple(ids[t] for t in r.targets),
                                 controls=frozenset(ids[c] for c in r.controls)) for r in records]
        lines += [f"%r{i} = q.meas {q} : i1" for i, q in enumerate(pool)]
        lines += [f"q.free {q}" for q in pool]
        main = "\n".join(f"  {line}" for line in lines)
        return header + f"q.circ @mlir_main() {{\n{main}\n}}\n"


def _unitary_part(trace):
    return [gate for gate in trace if gate.base != MEASURE]


def _assert_same_up_to_phase(expected, actual):
    pivot = np.unravel_index(np.argmax(np.abs(expected)), expected.shape)
    assert abs(actual[pivot]) > 1e-9
    phase = expected[pivot] / actual[pivot]
    assert np.max(np.abs(expected - phase * actual)) < 1e-9


def _traced(module: ModuleIR) -> List[GateRecord]:
    interpreter = TraceInterpreter(module)
    interpreter.run("mlir_main", {})
    trace = interpreter.record()
    assert sum(1 for gate in trace if gate.base == MEASURE) == NUM_QUBITS
    return _unitary_part(trace)


def _flags(*names: str) -> Callable[[ModuleIR], ModuleIR]:
    return lambda module: PassPipeline(list(names), PassContext()).run(module)


def _in_place(transform: Callable[[ModuleIR], object]) -> Callable[[ModuleIR], ModuleIR]:
    def run(module: ModuleIR) -> ModuleIR:
        transform(module)
        return module
    return run


LOWER_CTRL = ("convert-mem-to-val", "lower-ctrl")
LOWERINGS = ("lower-ctrl", "lower-adj")

# name: (call forms, passes before, transform, passes after)
TRANSFORMS: Dict[str, tuple] = {
    "hermitian": (CALL_FORMS, LOWER_CTRL, peephole_hermitian, ("lower-adj",)),
    "adjoint": (CALL_FORMS, LOWER_CTRL, peephole_adjoint, ("lower-adj",)),
    "rotation": (CALL_FORMS, LOWER_CTRL, merge_rotations, ("lower-adj",)),
    "loop-boundary": (CALL_FORMS, LOWER_CTRL + ("lower-adj",), _in_place(loop_boundary), ()),
    "lower-ctrl": (("plain", "ctrl"), ("convert-mem-to-val",), lower_control, ()),
    "lower-adj": (("plain", "adj", "undo"), ("convert-mem-to-val",), lower_adjoint, ()),
}


@pytest.mark.parametrize("passes", [COMPILE, UNROLLED], ids=["default", "unrolled"])
@pytest.mark.parametrize("seed", range(50))
def test_pipeline_preserves_the_unitary(parse_text, unitary_of, passes, seed):
    writer = ProgramWriter(np.random.default_rng(seed))
    text = writer.program()
    reference = _unitary_part(gate_trace(parse_text(text)))

    compiled = PassPipeline(passes, PassContext()).run(parse_text(text))
    assert verify(compiled) == [], text
    optimized = _traced(compiled)

    assert len(optimized) <= len(reference)
    expected = unitary_of(writer.expected, NUM_QUBITS)
    _assert_same_up_to_phase(expected, unitary_of(reference, NUM_QUBITS))
    _assert_same_up_to_phase(expected, unitary_of(optimized, NUM_QUBITS))


@pytest.mark.parametrize("name", list(TRANSFORMS))
@pytest.mark.parametrize("seed", range(50))
def test_each_transform_preserves_the_unitary(parse_text, unitary_of, name, seed):
    forms, before, transform, after = TRANSFORMS[name]
    writer = ProgramWriter(np.random.default_rng(1000 + seed), forms)
    text = writer.program()

    module = transform(_flags(*before)(parse_text(text)))
    assert verify(module) == [], text
    traced = _traced(_flags(*after)(module))

    if name not in LOWERINGS:
        assert len(traced) <= len(_unitary_part(gate_trace(parse_text(text))))
    _assert_same_up_to_phase(unitary_of(writer.expected, NUM_QUBITS), unitary_of(traced, NUM_QUBITS))


def test_loop_boundary_hoists_in_some_random_programs(parse_text):
    changed = 0
    for seed in range(50):
        text = ProgramWriter(np.random.default_rng(1000 + seed)).program()
        module = _flags("convert-mem-to-val", "lower-ctrl", "lower-adj")(parse_text(text))
        changed += loop_boundary(module)
    assert changed > 0


def test_random_modules_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(250):
        source = parse(ProgramWriter(rng).program())
        lowered = PassPipeline(["convert-mem-to-val"], PassContext()).run(source)
        for module in (source, lowered):
            printed = print_module(module)
            reparsed = parse(printed)
            assert structural_difference(module, reparsed) is None, printed
            assert print_module(reparsed) == printed
