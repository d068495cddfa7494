"""Tests for the classical interpreter."""

import math

import pytest

from qiro.core.errors import StepLimitExceeded, Trap
from qiro.services.interpreter import UNKNOWN, Interpreter, ResourceReport, interpret


@pytest.mark.parametrize("entry, args, expected", [
    ("mod", {"a": 7, "b": 3}, 1),
    ("mod", {"a": 3, "b": 7}, 3),
    ("mod_exp", {"a": 2, "e": 5, "N": 7}, 4),
    ("mod_exp", {"a": 3, "e": 0, "N": 7}, 1),
    ("mod_inv", {"a": 3, "N": 7}, 5),
    ("mod_inv", {"a": 7, "N": 15}, 13),
])
def test_modular_arithmetic(load_corpus, entry, args, expected):
    report = interpret(load_corpus("mod.qiro"), entry, args)
    assert report.results == [expected]
    assert report.counts == {}


def test_modular_arithmetic_matches_python(load_corpus):
    module = load_corpus("mod.qiro")
    for n in range(1, 65):
        for a in range(3 * n):
            assert interpret(module, "mod", {"a": a, "b": n}).results == [a % n]
    for n in range(2, 65):
        for a in range(n):
            for e in (0, 1, 2, 5, n - 1):
                assert interpret(module, "mod_exp", {"a": a, "e": e, "N": n}).results == [pow(a, e, n)]
            if math.gcd(a, n) == 1:
                assert interpret(module, "mod_inv", {"a": a, "N": n}).results == [pow(a, -1, n)]


def test_arguments_bind_by_name(load_corpus):
    module = load_corpus("mod.qiro")
    with pytest.raises(ValueError, match="no argument"):
        interpret(module, "mod", {"a": 1, "b": 2, "c": 3})
    with pytest.raises(ValueError, match="missing value for argument b"):
        interpret(module, "mod", {"a": 1})
    with pytest.raises(ValueError, match="expects an integer"):
        interpret(module, "mod", {"a": 1.5, "b": 2})


def test_missing_entry_traps(load_corpus):
    with pytest.raises(Trap, match="missing entry"):
        interpret(load_corpus("mod.qiro"), "nope")


def test_division_by_zero_traps(parse_text):
    module = parse_text("""
    func @f(%a: i64, %b: i64) -> i64 {
      %c = divi %a, %b : i64
      return %c
    }
    """)
    with pytest.raises(Trap):
        interpret(module, "f", {"a": 1, "b": 0})


def test_step_limit(load_corpus):
    with pytest.raises(StepLimitExceeded):
        interpret(load_corpus("mod.qiro"), "mod", {"a": 10 ** 6, "b": 1}, step_limit=100)


def test_memref_buffers(parse_text):
    module = parse_text("""
    func @f(%n: index, %i: index) -> i64 {
      %buf = alloc %n : memref<? x i64>
      %c0 = constant 0 : index
      %v = constant 9 : i64
      store %v, %buf, %c0
      %r = load %buf, %i : i64
      return %r
    }
    """)
    assert interpret(module, "f", {"n": 2, "i": 0}).results == [9]
    assert interpret(module, "f", {"n": 2, "i": 1}).results == [0]
    with pytest.raises(Trap, match="out of bounds"):
        interpret(module, "f", {"n": 2, "i": 2})


def test_argument_values_wrap_to_width(parse_text):
    module = parse_text("""
    func @f(%a: i8) -> i8 {
      return %a
    }
    """)
    assert interpret(module, "f", {"a": 200}).results == [-56]


def test_report_lines_and_dict():
    report = ResourceReport("mlir_main", {"n": 4}, {"SWAP": 2, "H": 4, "extra": 1}, results=[UNKNOWN])
    assert report.lines() == ["H: 4", "SWAP: 2", "extra: 1", "result: unknown"]
    data = report.to_dict()
    assert data["args"] == ["n=4"]
    assert data["results"] == ["unknown"]


def test_unknown_is_a_singleton():
    assert type(UNKNOWN)() is UNKNOWN


def test_cannot_interpret_quantum_ops(load_corpus):
    with pytest.raises(Trap, match="cannot interpret"):
        Interpreter(load_corpus("cx_pair.qiro")).run("mlir_main")
