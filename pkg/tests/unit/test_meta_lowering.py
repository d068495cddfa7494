"""Tests for lowering ctrl and adj of circuits."""

import numpy as np
import pytest

from qiro.core.errors import NonUnitaryCircuit
from qiro.models.verifier import verify
from qiro.services.lower_mem2val import lower_module
from qiro.services.meta_lowering import lower_adjoint, lower_control
from qiro.services.oracle import GateRecord, gate_trace

BODY = """
q.circ @C(%q: !q.qubit, %x: f64) {
  q.H %q
  q.T %q
  q.R(%x) %q
}
"""


def _apply_sites(module):
    return [op for op in module.walk() if op.name in ("qs.apply", "qs.adj", "qs.ctrl") and op.num_main > 1]


def test_adjoint_undoes_the_circuit(parse_text, unitary_of):
    module = parse_text(BODY + """
    q.circ @mlir_main() {
      %q = q.alloc : !q.qubit
      %x = constant 0.3 : f64
      q.call @C(%q, %x)
      %g = q.getval @C : !q.circ
      %a = q.adj %g : !q.circ
      q.apply %a, %q, %x
      q.free %q
    }
    """)
    trace = gate_trace(module)
    assert len(trace) == 6
    assert np.allclose(unitary_of(trace, 1), np.eye(2))


def test_adjoint_circuit_is_generated_once(parse_text):
    module = lower_module(parse_text(BODY + """
    q.circ @mlir_main(%q: !q.qubit) {
      %x = constant 0.3 : f64
      %g = q.getval @C : !q.circ
      %a = q.adj %g : !q.circ
      q.apply %a, %q, %x
      q.apply %a, %q, %x
    }
    """))
    lower_adjoint(module)
    assert verify(module) == []
    assert [op.sym_name for op in module.ops] == ["C", "C__adj", "mlir_main"]
    assert module.lookup("C__adj").attr("adjoint_of") == "C"
    main = module.lookup("mlir_main")
    assert _apply_sites(main) == []
    assert [op.attr("callee") for op in main.walk() if op.name == "qs.call"] == ["C__adj", "C__adj"]


def test_marked_adjoint_is_used_instead_of_generating(parse_text):
    module = lower_module(parse_text("""
    q.circ @S2(%q: !q.qubit) {
      q.S %q
    }
    q.circ @S2dag(%q: !q.qubit) attributes {adjoint_of = "S2"} {
      q.Z %q
      q.S %q
    }
    q.circ @mlir_main(%q: !q.qubit) {
      %g = q.getval @S2 : !q.circ
      %a = q.adj %g : !q.circ
      q.apply %a, %q
    }
    """))
    lower_adjoint(module)
    assert module.lookup("S2__adj") is None
    [call] = [op for op in module.lookup("mlir_main").walk() if op.name == "qs.call"]
    assert call.attr("callee") == "S2dag"


def test_controlled_circuit_matches_cx(parse_text, unitary_of):
    module = parse_text("""
    q.circ @flip(%t: !q.qubit) {
      q.X %t
    }
    q.circ @mlir_main() {
      %c = q.alloc : !q.qubit
      %t = q.alloc : !q.qubit
      %g = q.getval @flip : !q.circ
      %cg = q.ctrl %g {ctrls = 1} : !q.cop<1, !q.circ>
      q.apply %cg, %c, %t
      q.free %c
      q.free %t
    }
    """)
    trace = gate_trace(module)
    assert trace == [GateRecord("X", (1,), frozenset({0}))]
    assert np.allclose(unitary_of(trace, 2), unitary_of([GateRecord("CX", (0, 1))], 2))


def test_controlled_circuit_signature(parse_text):
    module = lower_module(parse_text(BODY + """
    q.circ @mlir_main(%k: !q.qubit, %q: !q.qubit) {
      %x = constant 0.3 : f64
      %g = q.getval @C : !q.circ
      %cg = q.ctrl %g {ctrls = 1} : !q.cop<1, !q.circ>
      q.apply %cg, %k, %q, %x
    }
    """))
    lower_control(module)
    assert verify(module) == []
    controlled = module.lookup("C__ctl")
    assert controlled.arg_names == ["ctl", "q", "x"]
    assert controlled.attr("control_of") == "C"
    assert _apply_sites(module.lookup("mlir_main")) == []


def test_two_controls_peel_one_at_a_time(parse_text):
    module = lower_module(parse_text(BODY + """
    q.circ @mlir_main(%k: !q.qubit, %l: !q.qubit, %q: !q.qubit) {
      %x = constant 0.3 : f64
      %g = q.getval @C : !q.circ
      %cg = q.ctrl %g {ctrls = 2} : !q.cop<2, !q.circ>
      q.apply %cg, %k, %l, %q, %x
    }
    """))
    lower_control(module)
    assert verify(module) == []
    assert module.lookup("C__ctl") is not None
    assert module.lookup("C__ctl__ctl") is not None


def test_compute_marked_ops_stay_uncontrolled(parse_text):
    module = lower_module(parse_text("""
    q.circ @V(%a: !q.qubit, %t: !q.qubit) {
      q.X %a {compute}
      q.CX %a, %t
      q.X %a {uncompute}
    }
    q.circ @mlir_main(%k: !q.qubit, %a: !q.qubit, %t: !q.qubit) {
      %g = q.getval @V : !q.circ
      %cg = q.ctrl %g {ctrls = 1} : !q.cop<1, !q.circ>
      q.apply %cg, %k, %a, %t
    }
    """))
    lower_control(module)
    body = list(module.lookup("V__ctl").walk())
    assert sum(1 for op in body if op.name == "qs.X") == 2
    assert sum(1 for op in body if op.name == "qs.ctrl") == 1


def test_adjoint_of_measuring_circuit_is_rejected(parse_text):
    module = lower_module(parse_text("""
    q.circ @M(%q: !q.qubit) {
      %m = q.meas %q : i1
    }
    q.circ @mlir_main(%q: !q.qubit) {
      %g = q.getval @M : !q.circ
      %a = q.adj %g : !q.circ
      q.apply %a, %q
    }
    """, verify_module=False))
    with pytest.raises(NonUnitaryCircuit):
        lower_adjoint(module)
