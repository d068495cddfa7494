"""Tokenizer for `.qiro` text."""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List

from ..core.errors import ParseError


class TokenKind(str, Enum):
    VALUE = "value"
    SYMBOL = "symbol"
    BLOCK = "block"
    TYPE = "type"
    FLOAT = "float"
    INT = "int"
    STRING = "string"
    IDENT = "ident"
    ARROW = "->"
    PUNCT = "punct"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class SourceDiagnostic:
    """A problem located in the source text (1-based line and column)."""
    line: int
    column: int
    message: str
    severity: str = "error"

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError("line and column are 1-based")

    def to_dict(self) -> Dict[str, Any]:
        return {"line": self.line, "column": self.column, "message": self.message, "severity": self.severity}

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


TOKEN_SPEC = [
    ("comment", r"//[^\n]*"),
    ("newline", r"\n"),
    ("space", r"[ \t\r]+"),
    (TokenKind.ARROW, r"->"),
    (TokenKind.VALUE, r"%[A-Za-z0-9_.$#]+"),
    (TokenKind.SYMBOL, r"@[A-Za-z_][A-Za-z0-9_.$]*"),
    (TokenKind.BLOCK, r"\^[A-Za-z0-9_.]+"),
    (TokenKind.TYPE, r"!(?:qs|q)\.[A-Za-z0-9_]+"),
    (TokenKind.FLOAT, r"-?(?:\d+\.\d*(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+)"),
    (TokenKind.INT, r"-?(?:0x[0-9a-fA-F]+|\d+)"),
    (TokenKind.STRING, r'"(?:[^"\\\n]|\\.)*"'),
    (TokenKind.IDENT, r"[A-Za-z_][A-Za-z0-9_.]*"),
    (TokenKind.PUNCT, r"[()\[\]{}<>,:=?]"),
    ("error", r"."),
]

TOKEN_RE = re.compile("|".join(f"(?P<g{i}>{pattern})" for i, (_, pattern) in enumerate(TOKEN_SPEC)))


def tokenize(text: str) -> List[Token]:
    """Split text into tokens; comments and whitespace are dropped.

    Raises:
        ParseError: on a character that starts no token
    """
    tokens: List[Token] = []
    line, line_start = 1, 0
    for match in TOKEN_RE.finditer(text):
        kind = TOKEN_SPEC[int(match.lastgroup[1:])][0]
        column = match.start() - line_start + 1
        if kind == "newline":
            line += 1
            line_start = match.end()
            continue
        if kind in ("comment", "space"):
            continue
        if kind == "error":
            raise ParseError([SourceDiagnostic(line, column, f"unexpected character {match.group()!r}")])
        tokens.append(Token(kind, match.group(), line, column))
    tokens.append(Token(TokenKind.EOF, "", line, max(1, len(text) - line_start + 1)))
    return tokens
