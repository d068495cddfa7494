"""Tests for the memory-semantics to value-semantics lowering."""

import pytest

from qiro.core.errors import UnsupportedConstruct
from qiro.models import types as T
from qiro.models.registry import is_quantum_dialect
from qiro.models.verifier import verify
from qiro.services.lower_mem2val import lower_module


def _ops(symbol, name):
    return [op for op in symbol.walk() if op.name == name]


def test_entangle_circuit_threads_states(load_corpus):
    lowered = lower_module(load_corpus("entangle.qiro"))
    assert verify(lowered) == []
    entangle = lowered.lookup("entangle")
    assert entangle.name == "qs.circ"
    assert entangle.result_types == [T.QSTATE, T.rstate(None)]

    [loop] = _ops(entangle, "affine.for")
    assert [r.type for r in loop.results] == [T.QSTATE, T.rstate(None)]
    body_names = [op.name for op in loop.regions[0].entry.ops]
    assert body_names == ["qs.extract", "qs.CX", "qs.combine", "affine.yield"]

    terminator = entangle.entry_block.ops[-1]
    assert terminator.name == "qs.return"
    assert list(terminator.operands) == list(loop.results)


def test_no_input_dialect_ops_remain(load_corpus):
    lowered = lower_module(load_corpus("shor.qiro"))
    assert verify(lowered) == []
    assert not any(is_quantum_dialect(op) and op.dialect == "q" for op in lowered.walk())
    assert all(op.name != "q.circ" for op in lowered.ops)


def test_source_module_is_left_untouched(load_corpus):
    source = load_corpus("entangle.qiro")
    lower_module(source)
    assert source.lookup("entangle").name == "q.circ"


def test_measurement_puts_classical_result_first(parse_text):
    lowered = lower_module(parse_text("""
    q.circ @c(%q: !q.qubit) -> i1 {
      %m = q.meas %q : i1
      q.return %m
    }
    """))
    [meas] = _ops(lowered.lookup("c"), "qs.meas")
    assert [r.type for r in meas.results] == [T.I1, T.QSTATE]
    assert lowered.lookup("c").result_types == [T.QSTATE, T.I1]


def test_loop_carries_classical_before_states(parse_text):
    lowered = lower_module(parse_text("""
    q.circ @c(%q: !q.qubit, %n: index) -> index {
      %c0 = constant 0 : index
      %c1 = constant 1 : index
      %sum = scf.for %i = %c0 to %n step %c1 iter_args(%acc = %c0) : index {
        q.H %q
        %next = addi %acc, %i : index
        scf.yield %next
      }
      q.return %sum
    }
    """))
    assert verify(lowered) == []
    [loop] = _ops(lowered.lookup("c"), "scf.for")
    assert [r.type for r in loop.results] == [T.INDEX, T.QSTATE]
    assert [a.type for a in loop.regions[0].entry.args] == [T.INDEX, T.INDEX, T.QSTATE]


def test_if_threads_touched_references(parse_text):
    lowered = lower_module(parse_text("""
    q.circ @c(%q: !q.qubit, %flag: i1) {
      scf.if %flag {
        q.X %q
      }
    }
    """))
    [branch] = _ops(lowered.lookup("c"), "scf.if")
    assert [r.type for r in branch.results] == [T.QSTATE]
    else_yield = branch.regions[1].entry.ops[-1]
    assert else_yield.name == "scf.yield" and len(else_yield.operands) == 1


def test_unreleased_allocation_is_freed_at_return(parse_text):
    lowered = lower_module(parse_text("""
    q.circ @mlir_main() {
      %q = q.alloc : !q.qubit
      q.H %q
    }
    """))
    names = [op.name for op in lowered.lookup("mlir_main").entry_block.ops]
    assert names == ["qs.alloc", "qs.H", "qs.free", "qs.return"]


def test_function_with_quantum_argument_is_rejected(parse_text):
    module = parse_text("""
    func @f(%q: !q.qubit) {
      return
    }
    """)
    with pytest.raises(UnsupportedConstruct, match="quantum arguments"):
        lower_module(module)


def test_lowering_twice_is_rejected(load_corpus):
    lowered = lower_module(load_corpus("cx_pair.qiro"))
    with pytest.raises(UnsupportedConstruct):
        lower_module(lowered)


def test_unstructured_function_keeps_blocks(load_corpus):
    lowered = lower_module(load_corpus("mod.qiro"))
    assert len(lowered.lookup("mod_exp").body.blocks) == 3
    assert verify(lowered) == []
