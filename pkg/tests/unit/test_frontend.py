"""Tests for the textual front end: tokenizer, parser and printer."""

import pytest

from qiro.core.errors import ParseError, VerificationError
from qiro.models import types as T
from qiro.services.lexer import TokenKind, tokenize
from qiro.services.parser import parse
from qiro.services.printer import print_module

ADD = """
func @add(%a: i64, %b: i64) -> i64 {
  %c = addi %a, %b : i64
  return %c
}
"""

CORPUS_FILES = ["cx_pair.qiro", "entangle.qiro", "mod.qiro", "qft.qiro", "shor.qiro"]


# ======================
# Tokenizer
# ======================


def test_tokenize_kinds():
    tokens = tokenize("%x = constant -1.5 : f64 // trailing comment")
    assert [t.kind for t in tokens] == [
        TokenKind.VALUE, TokenKind.PUNCT, TokenKind.IDENT, TokenKind.FLOAT,
        TokenKind.PUNCT, TokenKind.IDENT, TokenKind.EOF,
    ]
    assert tokens[3].text == "-1.5"


def test_tokenize_positions_are_one_based():
    tokens = tokenize("func @f() {\n  %y = constant 0x10 : index\n}")
    hex_token = next(t for t in tokens if t.text == "0x10")
    assert hex_token.kind == TokenKind.INT
    assert (hex_token.line, hex_token.column) == (2, 17)


def test_tokenize_rejects_stray_character():
    with pytest.raises(ParseError) as info:
        tokenize("func @f() {\n  & \n}")
    diagnostic = info.value.diagnostics[0]
    assert (diagnostic.line, diagnostic.column) == (2, 3)


def test_arrow_is_not_a_negative_number():
    kinds = [t.kind for t in tokenize("-> -2")]
    assert kinds[:2] == [TokenKind.ARROW, TokenKind.INT]


# ======================
# Parser
# ======================


def test_parse_function_signature():
    module = parse(ADD)
    symbol = module.lookup("add")
    assert not symbol.is_circuit
    assert symbol.arg_names == ["a", "b"]
    assert symbol.arg_types == [T.I64, T.I64]
    assert symbol.result_types == [T.I64]


def test_module_wrapper_is_optional():
    wrapped = parse("module {" + ADD + "}")
    assert [op.sym_name for op in wrapped.ops] == ["add"]


def test_implicit_terminators_are_added():
    module = parse("""
    q.circ @c(%q: !q.qubit) {
      affine.for %i = 0 to 4 {
        q.H %q
      }
    }
    """)
    body = module.lookup("c").entry_block
    assert body.ops[-1].name == "q.return"
    loop = next(op for op in body.ops if op.name == "affine.for")
    assert loop.regions[0].entry.ops[-1].name == "affine.yield"


def test_if_without_else_gets_empty_yield():
    module = parse("""
    func @f(%c: i1) {
      scf.if %c {
        %x = constant 1 : index
      }
      return
    }
    """)
    branch = next(op for op in module.walk() if op.name == "scf.if")
    else_ops = branch.regions[1].entry.ops
    assert [op.name for op in else_ops] == ["scf.yield"]


def test_static_rotation_angle_and_register_access():
    module = parse("""
    q.circ @c(%r: !q.qureg<4>) {
      q.R(0.5) %r[1]
      q.Rz(-0.25) %r[0, 4, 2]
    }
    """)
    rotations = [op for op in module.walk() if op.name in ("q.R", "q.Rz")]
    assert rotations[0].attr("angle") == 0.5
    assert rotations[1].attr("angle") == -0.25
    assert rotations[0].access_of(0).is_single


@pytest.mark.parametrize("text, message", [
    ("func @f() {\n  %x = bogus_op\n}", "unknown operation 'bogus_op'"),
    ("func @f() {\n  return %nope\n}", "use of undefined value %nope"),
    ("func @f() {\n  %x = constant 1 : index\n  %x = constant 2 : index\n  return\n}", "value %x defined twice"),
    ("func @f() {\n  br ^missing\n}", "branch to undefined block ^missing"),
    ("func @f(%a: widget) {\n  return\n}", "unknown type 'widget'"),
])
def test_parse_errors_carry_messages(text, message):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert message in str(info.value)


def test_parse_error_location():
    with pytest.raises(ParseError) as info:
        parse("func @f() {\n  %x = bogus_op\n}")
    diagnostic = info.value.diagnostics[0]
    assert (diagnostic.line, diagnostic.column) == (2, 8)
    assert diagnostic.to_dict()["severity"] == "error"


def test_parse_runs_the_verifier():
    with pytest.raises(VerificationError):
        parse("q.circ @mlir_main() {\n  q.call @missing()\n}")
    module = parse("q.circ @mlir_main() {\n  q.call @missing()\n}", verify_module=False)
    assert module.lookup("mlir_main") is not None


# ======================
# Printer
# ======================


def test_print_names_results_after_arguments():
    expected = (
        "module {\n"
        "  func @add(%a: i64, %b: i64) -> (i64) {\n"
        "    %2 = addi %a, %b : i64\n"
        "    return %2\n"
        "  }\n"
        "}\n"
    )
    assert print_module(parse(ADD)) == expected


def test_print_is_deterministic():
    module = parse(ADD)
    assert print_module(module) == print_module(module)


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_corpus_round_trips(load_corpus, name):
    printed = print_module(load_corpus(name))
    assert print_module(parse(printed)) == printed
