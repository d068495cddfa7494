"""Tests for the IR construction and mutation primitives."""

import pytest

from qiro.core.constants import Trait
from qiro.core.errors import ArityMismatch, HasLiveUses, TypeMismatch, UnknownOpName
from qiro.models import types as T
from qiro.models.builder import Builder, build_op, erase_op, replace_all_uses
from qiro.models.operation import Block
from qiro.models.registry import trait_query
from qiro.models.verifier import verify

DOUBLE_H = """
qs.circ @c(%q: !qs.qstate) -> (!qs.qstate) {
  %a = qs.H %q : !qs.qstate
  %b = qs.H %a : !qs.qstate
  qs.return %b
}
"""


def test_build_op_matches_dialect_signatures():
    qubit = build_op("q.alloc", result_types=[T.QUBIT]).result
    assert build_op("q.H", [qubit]).results == []

    block = Block([T.QSTATE])
    op = build_op("qs.H", [block.args[0]], [T.QSTATE], builder=Builder.at_end(block))
    assert len(op.results) == 1
    assert op.result.type == T.QSTATE
    assert block.ops == [op]


def test_build_op_rejects_bad_signatures():
    first = build_op("q.alloc", result_types=[T.QUBIT]).result
    second = build_op("q.alloc", result_types=[T.QUBIT]).result
    with pytest.raises(ArityMismatch):
        build_op("q.H", [first, second])
    with pytest.raises(UnknownOpName):
        build_op("q.bogus")


def test_failed_build_leaves_block_untouched():
    block = Block([T.QSTATE])
    with pytest.raises(ArityMismatch):
        build_op("qs.H", [block.args[0]], [], builder=Builder.at_end(block))
    assert block.ops == []


@pytest.mark.parametrize("name, expected", [
    ("q.H", {Trait.HERMITIAN, Trait.UNITARY}),
    ("qs.CX", {Trait.HERMITIAN, Trait.UNITARY}),
    ("q.T", {Trait.UNITARY}),
    ("q.meas", {Trait.QUBIT_MANAGEMENT}),
])
def test_trait_query(name, expected):
    assert trait_query(name) == expected


def test_trait_query_unknown_name():
    with pytest.raises(UnknownOpName):
        trait_query("qs.nope")


def test_replace_then_erase(parse_text):
    module = parse_text(DOUBLE_H)
    circuit = module.lookup("c")
    first, second, ret = circuit.entry_block.ops

    replace_all_uses(second.result, first.operands[0])
    assert ret.operands[0] is circuit.arguments[0]
    erase_op(second)
    erase_op(first)

    assert [op.name for op in circuit.entry_block.ops] == ["qs.return"]
    assert verify(module) == []


def test_erase_op_with_live_result(parse_text):
    module = parse_text(DOUBLE_H)
    _, second, _ = module.lookup("c").entry_block.ops
    with pytest.raises(HasLiveUses):
        erase_op(second)
    assert len(module.lookup("c").entry_block.ops) == 3


def test_replace_all_uses_checks_types(parse_text):
    module = parse_text(DOUBLE_H)
    first = module.lookup("c").entry_block.ops[0]
    index = build_op("constant", result_types=[T.INDEX], attrs={"value": 1}).result
    with pytest.raises(TypeMismatch):
        replace_all_uses(first.result, index)
    assert first.result.num_uses == 1
