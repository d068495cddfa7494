"""Tests for canonicalization, CSE, inlining, strip-circ and affine unrolling."""

import pytest

from qiro.core.errors import RecursionDetected, Trap
from qiro.models import types as T
from qiro.models.verifier import verify
from qiro.services.analysis import constant_value
from qiro.services.arith import evaluate, wrap
from qiro.services.classical import (
    call_graph,
    canonicalize,
    cse,
    inline_circuits,
    strip_circuits,
    trip_count,
    unroll_affine,
)
from qiro.services.lower_mem2val import lower_module


def _returned(module, name):
    return module.lookup(name).entry_block.terminator.operands


def _count(module, name):
    return sum(1 for op in module.walk() if op.name == name)


# ======================
# Arithmetic
# ======================


class TestArith:
    def test_wrap_to_width(self):
        assert wrap(128, T.int_type(8)) == -128
        assert wrap(2 ** 64, T.INDEX) == 0
        assert wrap(3, T.I1) == 1

    def test_signed_division_truncates(self):
        assert evaluate("divi", [-7, 2], T.I64) == -3
        assert evaluate("remi", [-7, 2], T.I64) == -1

    @pytest.mark.parametrize("name, operands", [
        ("divi", [1, 0]),
        ("remi", [1, 0]),
        ("shli", [1, 64]),
        ("fptosi", [float("nan")]),
    ])
    def test_traps(self, name, operands):
        with pytest.raises(Trap):
            evaluate(name, operands, T.I64)

    def test_float_division_by_zero_is_infinite(self):
        assert evaluate("divf", [1.0, 0.0], T.F64) == float("inf")

    def test_compare_and_bit_at(self):
        assert evaluate("cmpi", [2, 3], T.I1, "slt") == 1
        assert evaluate("bit_at", [0b1010, 1], T.I1) == 1
        assert evaluate("bit_at", [-1, 40], T.I1) == 1


# ======================
# Canonicalization
# ======================


def test_constant_folding(parse_text):
    module = parse_text("""
    func @f() -> i64 {
      %a = constant 6 : i64
      %b = constant 7 : i64
      %c = muli %a, %b : i64
      return %c
    }
    """)
    canonicalize(module)
    assert [op.name for op in module.lookup("f").entry_block.ops] == ["constant", "return"]
    assert constant_value(_returned(module, "f")[0]) == 42


def test_folding_wraps_to_the_result_width(parse_text):
    module = parse_text("""
    func @f() -> i8 {
      %a = constant 127 : i8
      %b = constant 1 : i8
      %c = addi %a, %b : i8
      return %c
    }
    """)
    canonicalize(module)
    assert constant_value(_returned(module, "f")[0]) == -128


def test_trapping_op_is_not_folded(parse_text):
    module = parse_text("""
    func @f() -> i64 {
      %a = constant 1 : i64
      %z = constant 0 : i64
      %c = divi %a, %z : i64
      return %c
    }
    """)
    canonicalize(module)
    assert _count(module, "divi") == 1


def test_repeated_constants_are_shared(parse_text):
    module = parse_text("""
    func @f() -> (index, index) {
      %a = constant 1 : index
      %b = constant 1 : index
      return %a, %b
    }
    """)
    canonicalize(module)
    first, second = _returned(module, "f")
    assert first is second


def test_dead_pure_ops_are_erased(parse_text):
    module = parse_text("""
    func @f(%x: index) -> index {
      %unused = addi %x, %x : index
      return %x
    }
    """)
    canonicalize(module)
    assert _count(module, "addi") == 0


def test_constant_condition_selects_branch(parse_text):
    module = parse_text("""
    func @f() -> index {
      %t = constant true : i1
      %r = scf.if %t : index {
        %one = constant 1 : index
        scf.yield %one
      } else {
        %two = constant 2 : index
        scf.yield %two
      }
      return %r
    }
    """)
    canonicalize(module)
    assert _count(module, "scf.if") == 0
    assert constant_value(_returned(module, "f")[0]) == 1


def test_zero_trip_loop_forwards_initial_values(parse_text):
    module = parse_text("""
    func @f(%x: index) -> index {
      %c0 = constant 0 : index
      %c1 = constant 1 : index
      %r = scf.for %i = %c0 to %c0 step %c1 iter_args(%a = %x) : index {
        %b = addi %a, %c1 : index
        scf.yield %b
      }
      return %r
    }
    """)
    canonicalize(module)
    assert _count(module, "scf.for") == 0
    assert _returned(module, "f")[0] is module.lookup("f").arguments[0]


def test_trip_count(parse_text):
    module = parse_text("""
    func @f() {
      affine.for %i = 1 to 10 step 3 {
      }
      return
    }
    """)
    [loop] = [op for op in module.walk() if op.name == "affine.for"]
    assert trip_count(loop) == 3


def test_cse_merges_identical_ops(parse_text):
    module = parse_text("""
    func @f(%a: index, %b: index) -> index {
      %x = addi %a, %b : index
      %y = addi %a, %b : index
      %z = muli %x, %y : index
      return %z
    }
    """)
    cse(module)
    assert _count(module, "addi") == 1
    [mul] = [op for op in module.walk() if op.name == "muli"]
    assert mul.operands[0] is mul.operands[1]


# ======================
# Inlining and stripping
# ======================


def test_call_graph_of_shor(load_corpus):
    graph = call_graph(load_corpus("shor.qiro"))
    assert graph.has_edge("mlir_main", "shor")
    assert graph.has_edge("shor", "mulCmodN")
    assert graph.has_edge("addConstant", "QFT")
    assert graph.has_edge("QFT", "calc_qft_angle")


def test_inline_and_strip(load_corpus):
    module = inline_circuits(lower_module(load_corpus("entangle.qiro")))
    assert _count(module, "qs.call") == 0
    assert _count(module, "affine.for") == 1
    strip_circuits(module)
    assert [op.sym_name for op in module.ops] == ["mlir_main"]
    assert verify(module) == []


def test_no_inline_circuit_stays_a_call(load_corpus):
    module = strip_circuits(inline_circuits(lower_module(load_corpus("qft.qiro"))))
    assert _count(module, "qs.call") == 1
    assert module.lookup("QFT") is not None


def test_strip_keeps_circuits_reachable_from_functions(parse_text):
    module = lower_module(parse_text("""
    q.circ @unused(%q: !q.qubit) {
      q.H %q
    }
    q.circ @mlir_main() {
    }
    """))
    strip_circuits(module)
    assert module.lookup("unused") is None
    assert module.lookup("mlir_main") is not None


def test_recursive_circuits_are_rejected(parse_text):
    module = lower_module(parse_text("""
    q.circ @a(%q: !q.qubit) {
      q.call @b(%q)
    }
    q.circ @b(%q: !q.qubit) {
      q.call @a(%q)
    }
    """))
    with pytest.raises(RecursionDetected) as info:
        inline_circuits(module)
    assert set(info.value.cycle) == {"a", "b"}


# ======================
# Affine unrolling
# ======================

UNROLL = """
q.circ @mlir_main() {
  %q = q.alloc : !q.qubit
  affine.for %i = 0 to %UB {
    q.H %q
  }
  %m = q.meas %q : i1
  q.free %q
}
"""


def _unroll_program(parse_text, upper):
    return lower_module(parse_text(UNROLL.replace("%UB", str(upper))))


def test_full_unroll(parse_text):
    module = unroll_affine(_unroll_program(parse_text, 4))
    assert _count(module, "affine.for") == 0
    assert _count(module, "qs.H") == 4
    assert verify(module) == []


def test_partial_unroll_leaves_an_epilogue(parse_text):
    module = unroll_affine(_unroll_program(parse_text, 7), factor=3)
    [loop] = [op for op in module.walk() if op.name == "affine.for"]
    assert constant_value(loop.operands[2]) == 3
    assert trip_count(loop) == 2
    assert _count(module, "qs.H") == 4
    assert verify(module) == []


def test_dynamic_bounds_are_skipped(load_corpus):
    module = unroll_affine(lower_module(load_corpus("entangle.qiro")))
    assert _count(module, "affine.for") == 1
