"""Tests for extract/combine consolidation on registers."""

from qiro.models.operation import RegAccess
from qiro.models.verifier import verify
from qiro.services.classical import canonicalize
from qiro.services.dataflow import DISTINCT, EQUAL, Entry, register_dataflow, relation
from qiro.services.lower_mem2val import lower_module
from qiro.services.peephole import pair_patterns
from qiro.services.rewriter import apply_patterns


def _count(module, name):
    return sum(1 for op in module.walk() if op.name == name)


def _optimize(module):
    canonicalize(module)
    apply_patterns(module, pair_patterns())
    canonicalize(module)
    assert verify(module) == []
    return module


def test_static_relations():
    single = Entry(RegAccess.from_parts([1]))
    same = Entry(RegAccess.from_parts([1]))
    other = Entry(RegAccess.from_parts([2]))
    strided = Entry(RegAccess.from_parts([0, 4, 2]))
    assert relation(single, same) == EQUAL
    assert relation(single, other) == DISTINCT
    assert relation(single, strided) == DISTINCT
    assert relation(other, strided) is None


def test_gates_separated_by_another_index_become_adjacent(parse_text):
    module = _optimize(lower_module(parse_text("""
    q.circ @mlir_main() {
      %r = q.allocreg {size = 2} : !q.qureg<2>
      q.H %r[0]
      q.X %r[1]
      q.H %r[0]
      %m = q.meas %r : bitvec<2>
      q.freereg %r
    }
    """)))
    assert _count(module, "qs.H") == 0
    assert _count(module, "qs.X") == 1


def test_same_dynamic_index_is_equal(parse_text):
    module = _optimize(lower_module(parse_text("""
    q.circ @mlir_main(%i: index) {
      %r = q.allocreg {size = 4} : !q.qureg<4>
      q.H %r[%i]
      q.H %r[%i]
      %m = q.meas %r : bitvec<4>
      q.freereg %r
    }
    """)))
    assert _count(module, "qs.H") == 0


def test_undecidable_indices_are_left_alone(parse_text):
    module = _optimize(lower_module(parse_text("""
    q.circ @mlir_main(%i: index, %j: index) {
      %r = q.allocreg {size = 4} : !q.qureg<4>
      q.H %r[%i]
      q.H %r[%j]
      %m = q.meas %r : bitvec<4>
      q.freereg %r
    }
    """)))
    assert _count(module, "qs.H") == 2


def test_register_cx_pair_cancels(load_corpus):
    module = _optimize(lower_module(load_corpus("cx_pair.qiro")))
    assert _count(module, "qs.CX") == 0


def test_register_cx_pair_on_swapped_wires_survives(corpus_dir, parse_text):
    text = (corpus_dir / "cx_pair.qiro").read_text()
    text = text.replace("muli %c1, %c0", "muli %c1, %c1").replace("subi %c1, %c0", "subi %c1, %c1")
    module = _optimize(lower_module(parse_text(text)))
    assert _count(module, "qs.CX") == 2


def test_static_accesses_share_one_extract(parse_text):
    module = lower_module(parse_text("""
    q.circ @mlir_main() {
      %r = q.allocreg {size = 2} : !q.qureg<2>
      q.CX %r[0], %r[1]
      q.CX %r[0], %r[1]
      q.freereg %r
    }
    """))
    assert _count(module, "qs.extract") == 2
    register_dataflow(module)
    assert _count(module, "qs.extract") == 1
    assert _count(module, "qs.combine") == 1
    assert verify(module) == []
