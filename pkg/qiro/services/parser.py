"""Recursive-descent parser for the `.qiro` textual format."""

import logging
import re
from typing import Any, Dict, List, Optional, Tuple

from ..core.constants import (
    ATTR_ANGLE,
    ATTR_CALLEE,
    ATTR_VALUE,
    INPUT_DIALECT,
    OPT_DIALECT,
    ROTATION_GATES,
    Trait,
)
from ..core.errors import IRError, ParseError, VerificationError
from ..models import types as T
from ..models.attributes import (
    UNIT,
    Attribute,
    FloatAttr,
    IntAttr,
    ListAttr,
    StringAttr,
    SymbolRefAttr,
)
from ..models.builder import Builder
from ..models.module import SYMBOL_KINDS, ModuleIR, SymbolOp
from ..models.operation import Block, Operation, RegAccess, Region, Value
from ..models.registry import REGISTRY
from ..models.verifier import verify
from .lexer import SourceDiagnostic, Token, TokenKind, tokenize

logger = logging.getLogger(__name__)

LOOP_OPS = ("scf.for", "affine.for")
ENTRY_OPS = ("qs.extract", "qs.combine")
IMPLICIT_TERMINATOR = {
    "func": "return",
    "q.circ": "q.return",
    "qs.circ": "qs.return",
    "scf.for": "scf.yield",
    "scf.if": "scf.yield",
    "affine.for": "affine.yield",
}


class _Scope:
    """Value and block names of one symbol."""

    def __init__(self):
        self.values: Dict[str, Value] = {}
        self.blocks: Dict[str, Block] = {}
        self.defined_blocks: set = set()


class Parser:
    """Builds a ModuleIR from tokens; the first syntax error aborts with a ParseError."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.scope = _Scope()

    # Token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.tok
        return ParseError([SourceDiagnostic(token.line, token.column, message)])

    def advance(self) -> Token:
        token = self.tok
        self.pos += 1
        return token

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in (TokenKind.PUNCT, TokenKind.IDENT, TokenKind.ARROW)

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{found}'")
        return self.advance()

    def expect_kind(self, kind: TokenKind, what: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found '{found}'")
        return self.advance()

    # Module level

    def parse_module(self) -> ModuleIR:
        module = ModuleIR()
        wrapped = self.accept("module")
        if wrapped:
            self.expect("{")
        while not (self.tok.kind == TokenKind.EOF or (wrapped and self.at("}"))):
            start = self.tok
            symbol = self.parse_symbol()
            try:
                module.add(symbol)
            except IRError as exc:
                raise self.error(str(exc), start) from None
        if wrapped:
            self.expect("}")
        if self.tok.kind != TokenKind.EOF:
            raise self.error("unexpected text after module")
        return module

    def parse_symbol(self) -> SymbolOp:
        kind_token = self.tok
        if kind_token.text not in SYMBOL_KINDS:
            raise self.error("expected 'func', 'q.circ' or 'qs.circ'")
        self.advance()
        name = self.expect_kind(TokenKind.SYMBOL, "symbol name").text[1:]
        self.scope = _Scope()
        self.expect("(")
        args: List[Tuple[Token, Any]] = []
        if not self.at(")"):
            while True:
                value_token = self.expect_kind(TokenKind.VALUE, "argument name")
                self.expect(":")
                args.append((value_token, self.parse_type()))
                if not self.accept(","):
                    break
        self.expect(")")
        result_types: List[T.TypeDesc] = []
        if self.accept("->"):
            result_types = self.parse_type_group()
        attributes: Dict[str, Attribute] = {}
        if self.accept("attributes"):
            attributes = self.parse_attr_dict()
        symbol = SymbolOp(kind_token.text, name, [t for _, t in args], result_types, attributes)
        symbol.arg_names = [token.text[1:] for token, _ in args]
        for (token, _), value in zip(args, symbol.arguments):
            self.define(token, value)
        self.parse_region_body(symbol.body, symbol.name, entry_exists=True)
        self._check_labels()
        return symbol

    def parse_type_group(self) -> List[T.TypeDesc]:
        if self.accept("("):
            types: List[T.TypeDesc] = []
            if not self.at(")"):
                types.append(self.parse_type())
                while self.accept(","):
                    types.append(self.parse_type())
            self.expect(")")
            return types
        return [self.parse_type()]

    # Regions and blocks

    def parse_region_body(self, region: Region, owner_name: str, entry_exists: bool) -> None:
        """Parse `{ ... }` into `region`; the entry block may already exist."""
        self.expect("{")
        block = region.entry if entry_exists else region.append(Block())
        while not self.at("}"):
            if self.tok.kind == TokenKind.BLOCK:
                self._close_block(block, owner_name)
                block = self.parse_block_header(region)
            elif self.tok.kind == TokenKind.EOF:
                raise self.error("unterminated region")
            else:
                self.parse_op(Builder.at_end(block))
        self.expect("}")
        self._close_block(block, owner_name)

    def parse_block_header(self, region: Region) -> Block:
        token = self.advance()
        label = token.text
        if label in self.scope.defined_blocks:
            raise self.error(f"block {label} defined twice", token)
        block = self.scope.blocks.setdefault(label, Block())
        self.scope.defined_blocks.add(label)
        region.append(block)
        if self.accept("("):
            if not self.at(")"):
                while True:
                    value_token = self.expect_kind(TokenKind.VALUE, "block argument")
                    self.expect(":")
                    self.define(value_token, block.add_argument(self.parse_type()))
                    if not self.accept(","):
                        break
            self.expect(")")
        self.expect(":")
        return block

    def _close_block(self, block: Block, owner_name: str) -> None:
        terminator = block.terminator
        if terminator is not None and terminator.has_trait(Trait.TERMINATOR):
            return
        name = IMPLICIT_TERMINATOR.get(owner_name)
        if name is None:
            raise self.error(f"block in {owner_name} is missing a terminator")
        Builder.at_end(block).create(name)

    def _check_labels(self) -> None:
        for label in self.scope.blocks:
            if label not in self.scope.defined_blocks:
                raise self.error(f"branch to undefined block {label}")

    # Values

    def define(self, token: Token, value: Value) -> None:
        if token.text in self.scope.values:
            raise self.error(f"value {token.text} defined twice", token)
        self.scope.values[token.text] = value

    def use(self) -> Value:
        token = self.expect_kind(TokenKind.VALUE, "value")
        value = self.scope.values.get(token.text)
        if value is None:
            raise self.error(f"use of undefined value {token.text}", token)
        return value

    # Operations

    def parse_op(self, builder: Builder) -> None:
        result_tokens: List[Token] = []
        if self.tok.kind == TokenKind.VALUE:
            while True:
                result_tokens.append(self.expect_kind(TokenKind.VALUE, "result name"))
                if not self.accept(","):
                    break
            self.expect("=")
        name_token = self.tok
        if name_token.kind != TokenKind.IDENT:
            raise self.error(f"expected an operation name, found '{name_token.text or 'end of input'}'")
        name = name_token.text
        if name not in REGISTRY:
            raise self.error(f"unknown operation '{name}'")
        self.advance()
        try:
            if name in LOOP_OPS:
                op = self.parse_loop(name, builder)
            elif name == "scf.if":
                op = self.parse_if(builder)
            else:
                op = self.parse_plain(name, name_token, builder)
                builder.insert(op)
        except IRError as exc:
            raise self.error(str(exc), name_token) from None
        if len(result_tokens) != len(op.results):
            raise self.error(f"{name} defines {len(op.results)} result(s), {len(result_tokens)} named", name_token)
        for token, value in zip(result_tokens, op.results):
            self.define(token, value)

    def parse_plain(self, name: str, name_token: Token, builder: Builder) -> Operation:
        attributes: Dict[str, Attribute] = {}
        operands: List[Value] = []
        access: List[Optional[RegAccess]] = []
        entries: List[RegAccess] = []
        successors: List[Block] = []
        sizes: List[int] = []
        short = name.split(".", 1)[-1]
        quantum = name.split(".", 1)[0] in (INPUT_DIALECT, OPT_DIALECT) and "." in name

        if name == "constant":
            attributes[ATTR_VALUE] = self.parse_literal()
        elif short == "call" or (quantum and short == "getval"):
            attributes[ATTR_CALLEE] = SymbolRefAttr(self.expect_kind(TokenKind.SYMBOL, "callee").text[1:])
            if short == "call":
                self.expect("(")
                if not self.at(")"):
                    operands.append(self.use())
                    while self.accept(","):
                        operands.append(self.use())
                self.expect(")")
        elif name == "br":
            self._parse_successor(operands, successors, sizes)
        elif name == "cond_br":
            operands.append(self.use())
            self.expect(",")
            self._parse_successor(operands, successors, sizes)
            self.expect(",")
            self._parse_successor(operands, successors, sizes)
        else:
            if quantum and short in ROTATION_GATES:
                self.expect("(")
                if self.tok.kind == TokenKind.VALUE:
                    operands.append(self.use())
                    access.append(None)
                else:
                    attributes[ATTR_ANGLE] = FloatAttr(float(self.parse_number()))
                self.expect(")")
            self._parse_operands(name, name_token, operands, access, entries)
        if self.at("{"):
            attributes.update(self.parse_attr_dict())
        result_types: List[T.TypeDesc] = []
        if self.accept(":"):
            result_types.append(self.parse_type())
            while self.accept(","):
                result_types.append(self.parse_type())
        return Operation(name, operands, result_types, attributes,
                         reg_access=access if any(a is not None for a in access) else None,
                         entries=entries, successors=successors, successor_sizes=sizes)

    def _parse_operands(self, name: str, name_token: Token, operands: List[Value],
                        access: List[Optional[RegAccess]], entries: List[RegAccess]) -> None:
        # Operands start on the op's line; the next line begins a new op.
        if self.tok.kind != TokenKind.VALUE or self.tok.line != name_token.line:
            return
        while True:
            if self.tok.kind == TokenKind.VALUE:
                operands.append(self.use())
                parsed = self.parse_access() if self.at("[") else None
                if name in ENTRY_OPS and len(operands) == 1:
                    if parsed is not None:
                        entries.append(parsed)
                    access.append(None)
                else:
                    access.append(parsed)
            elif self.at("[") and name in ENTRY_OPS and len(operands) == 1:
                entries.append(self.parse_access())
            else:
                raise self.error("expected an operand")
            if not self.accept(","):
                break

    def parse_access(self) -> RegAccess:
        self.expect("[")
        parts: List[Any] = [self._index_part()]
        while self.accept(","):
            parts.append(self._index_part())
        self.expect("]")
        if len(parts) > 3:
            raise self.error("register access takes at most three components")
        return RegAccess.from_parts(parts)

    def _index_part(self) -> Any:
        if self.tok.kind == TokenKind.VALUE:
            return self.use()
        return int(self.expect_kind(TokenKind.INT, "index").text, 0)

    def _parse_successor(self, operands: List[Value], successors: List[Block], sizes: List[int]) -> None:
        label = self.expect_kind(TokenKind.BLOCK, "block label").text
        block = self.scope.blocks.get(label)
        if block is None:
            block = Block()
            self.scope.blocks[label] = block
        successors.append(block)
        count = 0
        if self.accept("("):
            if not self.at(")"):
                operands.append(self.use())
                count += 1
                while self.accept(","):
                    operands.append(self.use())
                    count += 1
            self.expect(")")
        sizes.append(count)

    def _bound(self, builder: Builder) -> Value:
        if self.tok.kind == TokenKind.VALUE:
            return self.use()
        return builder.constant(int(self.expect_kind(TokenKind.INT, "bound").text, 0), T.INDEX)

    def parse_loop(self, name: str, builder: Builder) -> Operation:
        iv_token = self.expect_kind(TokenKind.VALUE, "induction variable")
        self.expect("=")
        lower = self._bound(builder)
        self.expect("to")
        upper = self._bound(builder)
        if self.accept("step"):
            step = self._bound(builder)
        elif name == "affine.for":
            step = builder.constant(1, T.INDEX)
        else:
            raise self.error("scf.for needs a step")
        arg_tokens: List[Token] = []
        inits: List[Value] = []
        if self.accept("iter_args"):
            self.expect("(")
            while True:
                arg_tokens.append(self.expect_kind(TokenKind.VALUE, "iteration argument"))
                self.expect("=")
                inits.append(self.use())
                if not self.accept(","):
                    break
            self.expect(")")
        result_types: List[T.TypeDesc] = []
        if self.accept(":"):
            result_types.append(self.parse_type())
            while self.accept(","):
                result_types.append(self.parse_type())
        if len(result_types) != len(inits):
            raise self.error("loop needs one type per iteration argument")
        attributes: Dict[str, Attribute] = {}
        if self.accept("attributes"):
            attributes = self.parse_attr_dict()
        body = Block([T.INDEX] + result_types)
        region = Region([body])
        self.define(iv_token, body.args[0])
        for token, arg in zip(arg_tokens, body.args[1:]):
            self.define(token, arg)
        self.parse_region_body(region, name, entry_exists=True)
        op = Operation(name, [lower, upper, step] + inits, result_types, attributes, regions=[region])
        return builder.insert(op)

    def parse_if(self, builder: Builder) -> Operation:
        condition = self.use()
        result_types: List[T.TypeDesc] = []
        if self.accept(":"):
            result_types.append(self.parse_type())
            while self.accept(","):
                result_types.append(self.parse_type())
        attributes: Dict[str, Attribute] = {}
        if self.accept("attributes"):
            attributes = self.parse_attr_dict()
        then_region, else_region = Region(), Region()
        self.parse_region_body(then_region, "scf.if", entry_exists=False)
        if self.accept("else"):
            self.parse_region_body(else_region, "scf.if", entry_exists=False)
        else:
            block = else_region.append(Block())
            Builder.at_end(block).create("scf.yield")
        op = Operation("scf.if", [condition], result_types, attributes, regions=[then_region, else_region])
        return builder.insert(op)

    # Attributes, literals, types

    def parse_attr_dict(self) -> Dict[str, Attribute]:
        self.expect("{")
        attrs: Dict[str, Attribute] = {}
        if not self.at("}"):
            while True:
                key = self.expect_kind(TokenKind.IDENT, "attribute name").text
                attrs[key] = self.parse_attr_value() if self.accept("=") else UNIT
                if not self.accept(","):
                    break
        self.expect("}")
        return attrs

    def parse_attr_value(self) -> Attribute:
        token = self.tok
        if token.kind == TokenKind.STRING:
            self.advance()
            return StringAttr(re.sub(r"\\(.)", r"\1", token.text[1:-1]))
        if token.kind == TokenKind.SYMBOL:
            self.advance()
            return SymbolRefAttr(token.text[1:])
        if self.accept("["):
            items: List[Attribute] = []
            if not self.at("]"):
                items.append(self.parse_attr_value())
                while self.accept(","):
                    items.append(self.parse_attr_value())
            self.expect("]")
            return ListAttr(tuple(items))
        return self.parse_literal()

    def parse_literal(self) -> Attribute:
        token = self.tok
        if token.kind == TokenKind.FLOAT:
            self.advance()
            return FloatAttr(float(token.text))
        if token.kind == TokenKind.INT:
            self.advance()
            return IntAttr(int(token.text, 0))
        if token.kind == TokenKind.IDENT and token.text in ("true", "false"):
            self.advance()
            return IntAttr(1 if token.text == "true" else 0)
        raise self.error(f"expected a literal, found '{token.text or 'end of input'}'")

    def parse_number(self) -> float:
        token = self.tok
        if token.kind not in (TokenKind.FLOAT, TokenKind.INT):
            raise self.error("expected a number")
        self.advance()
        return float(token.text) if token.kind == TokenKind.FLOAT else int(token.text, 0)

    def _size(self) -> Optional[int]:
        if self.accept("?"):
            return None
        return int(self.expect_kind(TokenKind.INT, "size").text, 0)

    def parse_type(self) -> T.TypeDesc:
        token = self.advance()
        text = token.text
        try:
            if token.kind == TokenKind.IDENT:
                if text.startswith("i") and text[1:].isdigit():
                    return T.int_type(int(text[1:]))
                if text == "f64":
                    return T.F64
                if text == "index":
                    return T.INDEX
                if text == "bitvec":
                    self.expect("<")
                    size = self._size()
                    self.expect(">")
                    return T.bitvec(size)
                if text == "memref":
                    self.expect("<")
                    size = self._size()
                    self.expect("x")
                    elem = self.parse_type()
                    self.expect(">")
                    return T.memref(size, elem)
            elif token.kind == TokenKind.TYPE:
                simple = {
                    "!q.qubit": T.QUBIT, "!qs.qstate": T.QSTATE, "!q.u1": T.U1,
                    "!q.u2": T.U2, "!q.circ": T.CIRC,
                }
                if text in simple:
                    return simple[text]
                if text in ("!q.qureg", "!qs.rstate"):
                    size = None
                    if self.accept("<"):
                        size = self._size()
                        self.expect(">")
                    return T.qureg(size) if text == "!q.qureg" else T.rstate(size)
                if text == "!q.cop":
                    self.expect("<")
                    controls = int(self.expect_kind(TokenKind.INT, "control count").text)
                    self.expect(",")
                    base = self.parse_type()
                    self.expect(">")
                    return T.cop(controls, base)
        except ValueError as exc:
            raise self.error(str(exc), token) from None
        raise self.error(f"unknown type '{text}'", token)


def parse(text: str, verify_module: bool = True) -> ModuleIR:
    """Parse `.qiro` text into a module.

    Args:
        text: Source text
        verify_module: Run the verifier and raise on its findings

    Returns:
        The parsed module

    Raises:
        ParseError: on syntax errors
        VerificationError: when the parsed module is malformed
    """
    module = Parser(text).parse_module()
    if verify_module:
        diagnostics = verify(module)
        if diagnostics:
            raise VerificationError(diagnostics, stage="parse")
    logger.debug(f"Parsed {len(module.ops)} symbol(s)")
    return module


def parse_file(path: str, verify_module: bool = True) -> ModuleIR:
    with open(path, "r", encoding="utf-8") as handle:
        return parse(handle.read(), verify_module)
