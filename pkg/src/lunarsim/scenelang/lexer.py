"""Indentation-aware tokenizer for .plx source."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import PlxSyntaxError

KEYWORDS = {"import", "model", "extends", "with", "mate", "input", "output",
            "true", "false", "auto", "uniform"}

_TOKEN_RE = re.compile(r"""
    (?P<NUMBER>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<STRING>"(?:[^"\\\n]|\\.)*")
  | (?P<OP>==|[()\[\],:=@+\-*/.])
  | (?P<WS>[ ]+)
  | (?P<COMMENT>\#[^\n]*)
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER IDENT STRING OP KEYWORD NEWLINE INDENT DEDENT EOF
    value: str
    line: int
    col: int


def tokenize(text: str, path: str = "<string>") -> list[Token]:
    """Token stream with synthetic INDENT/DEDENT, Python style (spaces only)."""
    tokens: list[Token] = []
    indents = [0]
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        if "\t" in raw:
            raise PlxSyntaxError("tab character in indentation (use spaces)",
                                 lineno, raw.index("\t") + 1)
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue  # blank / comment-only lines do not affect indentation
        indent = len(raw) - len(raw.lstrip(" "))
        if indent > indents[-1]:
            indents.append(indent)
            tokens.append(Token("INDENT", "", lineno, 1))
        else:
            while indent < indents[-1]:
                indents.pop()
                tokens.append(Token("DEDENT", "", lineno, 1))
            if indent != indents[-1]:
                raise PlxSyntaxError("unindent does not match any outer level",
                                     lineno, indent + 1)
        pos = indent
        while pos < len(raw):
            m = _TOKEN_RE.match(raw, pos)
            if m is None:
                raise PlxSyntaxError(f"unexpected character {raw[pos]!r}",
                                     lineno, pos + 1)
            kind = m.lastgroup
            value = m.group()
            if kind == "COMMENT":
                break
            if kind != "WS":
                col = pos + 1
                if kind == "IDENT" and value in KEYWORDS:
                    kind = "KEYWORD"
                tokens.append(Token(kind, value, lineno, col))
            pos = m.end()
        tokens.append(Token("NEWLINE", "", lineno, len(raw) + 1))
    while len(indents) > 1:
        indents.pop()
        tokens.append(Token("DEDENT", "", len(lines), 1))
    tokens.append(Token("EOF", "", len(lines) + 1, 1))
    return tokens
