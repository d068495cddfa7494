"""Tests for the module verifier."""

import numpy as np
import pytest

from qiro.models.verifier import verify


def _kinds(module):
    return {d.kind for d in verify(module)}


def test_corpus_programs_verify(load_corpus):
    for name in ("cx_pair.qiro", "entangle.qiro", "mod.qiro", "qft.qiro", "shor.qiro"):
        assert verify(load_corpus(name)) == []


def test_unresolved_symbol(parse_text):
    module = parse_text("q.circ @mlir_main() {\n  q.call @missing()\n}", verify_module=False)
    diagnostics = verify(module)
    assert [d.kind for d in diagnostics] == ["UnresolvedSymbol"]
    assert diagnostics[0].symbol == "mlir_main"
    assert "@missing" in str(diagnostics[0])


def test_classical_call_to_circuit_is_rejected(parse_text):
    module = parse_text("""
    q.circ @c() {
    }
    func @f() {
      call @c()
      return
    }
    """, verify_module=False)
    assert "UnresolvedSymbol" in _kinds(module)


def test_call_argument_count(parse_text):
    module = parse_text("""
    func @g(%a: index) -> index {
      return %a
    }
    func @f() {
      %x = call @g() : index
      return
    }
    """, verify_module=False)
    assert "CallSignature" in _kinds(module)


def test_static_aliasing(parse_text):
    module = parse_text("""
    q.circ @mlir_main() {
      %r = q.allocreg {size = 2} : !q.qureg<2>
      q.CX %r[0], %r[0]
      q.freereg %r
    }
    """, verify_module=False)
    assert "StaticAliasing" in _kinds(module)


@pytest.mark.parametrize("operands", ["%r, %r[0]", "%r[0], %r", "%r[%i], %r", "%r, %r"])
def test_whole_register_aliases_any_access(parse_text, operands):
    module = parse_text(f"""
    q.circ @pair(%a: !q.qureg<?>, %b: !q.qureg<?>) {{
    }}
    q.circ @mlir_main(%i: index) {{
      %r = q.allocreg {{size = 2}} : !q.qureg<2>
      %g = q.getval @pair : !q.circ
      q.apply %g, {operands}
      q.freereg %r
    }}
    """, verify_module=False)
    assert [d.kind for d in verify(module)] == ["StaticAliasing"]


def test_distinct_indices_of_one_register_verify(parse_text):
    module = parse_text("""
    q.circ @mlir_main() {
      %r = q.allocreg {size = 2} : !q.qureg<2>
      q.CX %r[0], %r[1]
      q.freereg %r
    }
    """)
    assert verify(module) == []


def test_dynamic_indices_are_not_flagged(parse_text):
    module = parse_text("""
    q.circ @c(%r: !q.qureg<?>, %i: index, %j: index) {
      q.CX %r[%i], %r[%j]
    }
    """, verify_module=False)
    assert verify(module) == []


def test_adjoint_of_measuring_circuit(parse_text):
    module = parse_text("""
    q.circ @measures(%q: !q.qubit) {
      %m = q.meas %q : i1
    }
    q.circ @mlir_main(%q: !q.qubit) {
      %g = q.getval @measures : !q.circ
      %a = q.adj %g : !q.circ
      q.apply %a, %q
    }
    """, verify_module=False)
    assert "NonUnitaryCircuit" in _kinds(module)


def test_state_consumed_twice(parse_text):
    module = parse_text("""
    qs.circ @f(%q: !qs.qstate) -> (!qs.qstate) {
      %a = qs.H %q : !qs.qstate
      %b = qs.X %q : !qs.qstate
      qs.return %b
    }
    """, verify_module=False)
    messages = [d.message for d in verify(module) if d.kind == "LinearityViolation"]
    assert "state value is consumed 2 times" in messages
    assert "state value is never consumed" in messages


def test_state_captured_by_loop_body(parse_text):
    module = parse_text("""
    qs.circ @f(%q: !qs.qstate) -> (!qs.qstate) {
      affine.for %i = 0 to 2 {
        %a = qs.H %q : !qs.qstate
      }
      qs.return %q
    }
    """, verify_module=False)
    assert "LinearityViolation" in _kinds(module)


def test_wrong_terminator_arity(parse_text):
    module = parse_text("""
    func @f(%a: i64) -> i64 {
      return
    }
    """, verify_module=False)
    assert "Terminator" in _kinds(module)


@pytest.mark.parametrize("body", [
    "%x = q.H %q : !q.u1",
    "q.meas %q",
])
def test_arity_mismatch(parse_text, body):
    module = parse_text(f"q.circ @c(%q: !q.qubit) {{\n  {body}\n}}", verify_module=False)
    assert "ArityMismatch" in _kinds(module)


# ======================
# Linearity property
# ======================


def _linear_circuit(rng):
    """A random value-dialect circuit; returns its text pieces and the states consumed once."""
    live = [f"%q{i}" for i in range(int(rng.integers(1, 5)))]
    args = ", ".join(f"{q}: !qs.qstate" for q in live)
    results = ", ".join("!qs.qstate" for _ in live)
    lines, consumed, counter = [], [], 0
    for _ in range(int(rng.integers(1, 13))):
        if len(live) > 1 and rng.integers(2):
            i, j = (int(k) for k in rng.choice(len(live), size=2, replace=False))
            a, b = f"%v{counter}", f"%v{counter + 1}"
            lines.append(f"{a}, {b} = qs.CX {live[i]}, {live[j]} : !qs.qstate, !qs.qstate")
            consumed += [live[i], live[j]]
            live[i], live[j] = a, b
            counter += 2
        else:
            i = int(rng.integers(len(live)))
            gate = rng.choice(["H", "X", "T", "Rz(0.5)"])
            lines.append(f"%v{counter} = qs.{gate} {live[i]} : !qs.qstate")
            consumed.append(live[i])
            live[i] = f"%v{counter}"
            counter += 1
    header = f"qs.circ @f({args}) -> ({results}) {{"
    footer = [f"qs.return {', '.join(live)}", "}"]
    return header, lines, footer, consumed


def test_injected_double_use_is_reported_once(parse_text):
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        header, lines, footer, consumed = _linear_circuit(rng)
        clean = "\n".join([header] + lines + footer)
        assert verify(parse_text(clean, verify_module=False)) == [], clean

        victim = consumed[int(rng.integers(len(consumed)))]
        broken = "\n".join([header] + lines + [f"qs.free {victim}"] + footer)
        diagnostics = verify(parse_text(broken, verify_module=False))
        violations = [d for d in diagnostics if d.kind == "LinearityViolation"]
        assert len(violations) == 1, broken
        assert violations[0].message == "state value is consumed 2 times"
