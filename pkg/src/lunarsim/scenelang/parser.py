"""Recursive-descent parser for .plx units and their import closure."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import CyclicImport, PlxError, PlxSyntaxError, UnknownImport
from .lexer import Token, tokenize
from .nodes import (Auto, BinOp, BoolLit, Expr, FieldDecl, FrameRef, MateDecl,
                    ModelDecl, Neg, Num, Ref, SignalDecl, Span, StrLit, Unit,
                    Uniform, Vec, MATE_KINDS, SEMANTIC_TYPES)


@dataclass
class SourceUnit:
    """One .plx file; imports are filled in by parsing."""
    path: str
    text: str
    imports: list[str] = field(default_factory=list)


class DictRegistry:
    """In-memory unit lookup, mainly for tests."""

    def __init__(self, units: dict[str, str]):
        self._units = dict(units)

    def load(self, path: str, importer: str | None = None) -> SourceUnit:
        if path not in self._units:
            raise UnknownImport(path)
        return SourceUnit(path=path, text=self._units[path])


class FileRegistry:
    """Loads units from disk; import paths resolve relative to the importer."""

    def __init__(self, root: str | None = None):
        self.root = root

    def load(self, path: str, importer: str | None = None) -> SourceUnit:
        base = os.path.dirname(importer) if importer else (self.root or ".")
        candidate = path if os.path.isabs(path) else os.path.normpath(os.path.join(base, path))
        if not os.path.isfile(candidate):
            raise UnknownImport(path)
        with open(candidate, encoding="utf-8") as fh:
            return SourceUnit(path=candidate, text=fh.read())


@dataclass
class Forest:
    """Declarations of a unit plus everything it transitively imports."""
    units: list[Unit]
    models: dict[str, ModelDecl]

    def require(self, name: str) -> ModelDecl:
        if name not in self.models:
            raise PlxError(f"unknown model {name!r}")
        return self.models[name]


class _Parser:
    def __init__(self, tokens: list[Token], path: str):
        self.tokens = tokens
        self.path = path
        self.i = 0

    # token helpers -----------------------------------------------------
    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise PlxSyntaxError(f"expected {want!r}, found {tok.value or tok.kind!r}",
                                 tok.line, tok.col)
        return self.next()

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        tok = self.peek()
        if tok.kind == kind and (value is None or tok.value == value):
            return self.next()
        return None

    # grammar -----------------------------------------------------------
    def parse_unit(self) -> Unit:
        imports: list[str] = []
        models: list[ModelDecl] = []
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind == "KEYWORD" and tok.value == "import":
                self.next()
                lit = self.expect("STRING")
                imports.append(_unquote(lit.value))
                self.expect("NEWLINE")
            elif tok.kind == "KEYWORD" and tok.value == "model":
                models.append(self.parse_model())
            else:
                raise PlxSyntaxError(f"expected 'import' or 'model', found {tok.value or tok.kind!r}",
                                     tok.line, tok.col)
        return Unit(path=self.path, imports=tuple(imports), models=tuple(models))

    def parse_model(self) -> ModelDecl:
        kw = self.expect("KEYWORD", "model")
        name = self.expect("IDENT").value
        base = None
        traits: list[str] = []
        if self.accept("KEYWORD", "extends"):
            base = self.expect("IDENT").value
        if self.accept("KEYWORD", "with"):
            traits.append(self.expect("IDENT").value)
            while self.accept("OP", ","):
                traits.append(self.expect("IDENT").value)
        self.expect("OP", ":")
        self.expect("NEWLINE")
        fields: list[FieldDecl] = []
        mates: list[MateDecl] = []
        signals: list[SignalDecl] = []
        if self.accept("INDENT"):
            while not self.accept("DEDENT"):
                tok = self.peek()
                if tok.kind == "KEYWORD" and tok.value == "mate":
                    mates.append(self.parse_mate())
                elif tok.kind == "KEYWORD" and tok.value in ("input", "output"):
                    signals.append(self.parse_signal())
                elif tok.kind == "IDENT":
                    fields.append(self.parse_field())
                else:
                    raise PlxSyntaxError(f"expected field, mate or signal, found {tok.value or tok.kind!r}",
                                         tok.line, tok.col)
        return ModelDecl(name=name, base=base, traits=tuple(traits),
                         fields=tuple(fields), mates=tuple(mates),
                         signals=tuple(signals), span=Span(kw.line, kw.col),
                         unit=self.path)

    def parse_field(self) -> FieldDecl:
        name_tok = self.expect("IDENT")
        self.expect("OP", ":")
        type_tok = self.expect("IDENT")
        if type_tok.value not in SEMANTIC_TYPES:
            raise PlxSyntaxError(f"unknown type {type_tok.value!r} "
                                 f"(expected one of {', '.join(SEMANTIC_TYPES)})",
                                 type_tok.line, type_tok.col)
        self.expect("OP", "=")
        expr = self.parse_expr()
        self.expect("NEWLINE")
        return FieldDecl(name=name_tok.value, type_name=type_tok.value, expr=expr,
                         span=Span(name_tok.line, name_tok.col))

    def parse_signal(self) -> SignalDecl:
        dir_tok = self.next()  # input | output
        name = self.expect("IDENT")
        self.expect("OP", ":")
        type_tok = self.expect("IDENT")
        if type_tok.value not in SEMANTIC_TYPES:
            raise PlxSyntaxError(f"unknown type {type_tok.value!r}",
                                 type_tok.line, type_tok.col)
        self.expect("NEWLINE")
        return SignalDecl(direction=dir_tok.value, name=name.value,
                          type_name=type_tok.value, span=Span(dir_tok.line, dir_tok.col))

    def parse_mate(self) -> MateDecl:
        kw = self.expect("KEYWORD", "mate")
        kind_tok = self.expect("IDENT")
        if kind_tok.value not in MATE_KINDS:
            raise PlxSyntaxError(f"unknown mate kind {kind_tok.value!r} "
                                 f"(expected one of {', '.join(MATE_KINDS)})",
                                 kind_tok.line, kind_tok.col)
        self.expect("OP", "(")
        frame_a = self.parse_frameref()
        self.expect("OP", ",")
        frame_b = self.parse_frameref()
        axis: Expr | None = None
        actuated = False
        while self.accept("OP", ","):
            key = self.expect("IDENT")
            self.expect("OP", "=")
            if key.value == "axis":
                axis = self.parse_expr()
            elif key.value == "actuated":
                tok = self.expect("KEYWORD")
                if tok.value not in ("true", "false"):
                    raise PlxSyntaxError("actuated expects true or false", tok.line, tok.col)
                actuated = tok.value == "true"
            else:
                raise PlxSyntaxError(f"unknown mate option {key.value!r}", key.line, key.col)
        self.expect("OP", ")")
        self.expect("NEWLINE")
        if kind_tok.value in ("hinge", "prismatic") and axis is None:
            raise PlxSyntaxError(f"{kind_tok.value} mate requires axis=", kw.line, kw.col)
        return MateDecl(kind=kind_tok.value, frame_a=frame_a, frame_b=frame_b,
                        axis=axis, actuated=actuated, span=Span(kw.line, kw.col))

    def parse_frameref(self) -> FrameRef:
        body = self.expect("IDENT")
        offset: Expr | None = None
        if self.accept("OP", "@"):
            tok = self.expect("OP", "(")
            items = [self.parse_expr()]
            while self.accept("OP", ","):
                items.append(self.parse_expr())
            self.expect("OP", ")")
            if len(items) != 3:
                raise PlxSyntaxError("frame offset must have 3 components", tok.line, tok.col)
            offset = Vec(tuple(items))
        return FrameRef(body=body.value, offset=offset, span=Span(body.line, body.col))

    # expressions ---------------------------------------------------------
    def parse_expr(self) -> Expr:
        left = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.value in ("+", "-"):
                self.next()
                right = self.parse_term()
                left = BinOp(tok.value, left, right, span=Span(tok.line, tok.col))
            else:
                return left

    def parse_term(self) -> Expr:
        left = self.parse_factor()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.value in ("*", "/"):
                self.next()
                right = self.parse_factor()
                left = BinOp(tok.value, left, right, span=Span(tok.line, tok.col))
            else:
                return left

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return Num(float(tok.value))
        if tok.kind == "STRING":
            self.next()
            return StrLit(_unquote(tok.value))
        if tok.kind == "KEYWORD" and tok.value in ("true", "false"):
            self.next()
            return BoolLit(tok.value == "true")
        if tok.kind == "KEYWORD" and tok.value == "auto":
            self.next()
            return Auto()
        if tok.kind == "KEYWORD" and tok.value == "uniform":
            self.next()
            self.expect("OP", "(")
            lo = self.parse_expr()
            self.expect("OP", ",")
            hi = self.parse_expr()
            self.expect("OP", ")")
            return Uniform(lo, hi)
        if tok.kind == "OP" and tok.value == "-":
            self.next()
            return Neg(self.parse_factor())
        if tok.kind == "OP" and tok.value == "(":
            self.next()
            first = self.parse_expr()
            if self.accept("OP", ","):
                items = [first, self.parse_expr()]
                while self.accept("OP", ","):
                    items.append(self.parse_expr())
                self.expect("OP", ")")
                if len(items) != 3:
                    raise PlxSyntaxError("vector literal must have 3 components",
                                         tok.line, tok.col)
                return Vec(tuple(items))
            self.expect("OP", ")")
            return first
        if tok.kind == "IDENT":
            self.next()
            parts = [tok.value]
            while self.accept("OP", "."):
                parts.append(self.expect("IDENT").value)
            return Ref(tuple(parts), span=Span(tok.line, tok.col))
        raise PlxSyntaxError(f"expected expression, found {tok.value or tok.kind!r}",
                             tok.line, tok.col)


def _unquote(literal: str) -> str:
    body = literal[1:-1]
    return body.replace('\\"', '"').replace("\\\\", "\\")


def parse_unit(text: str, path: str = "<string>") -> Unit:
    """Parse a single unit; no import resolution."""
    return _Parser(tokenize(text, path), path).parse_unit()


def parse_source(unit: SourceUnit, registry) -> Forest:
    """Parse a unit and its transitive imports into one declaration forest.

    Raises CyclicImport on an import cycle and UnknownImport when the
    registry cannot resolve a path. Duplicate model names across the
    closure are rejected.
    """
    units: list[Unit] = []
    models: dict[str, ModelDecl] = {}
    visiting: list[str] = []
    done: set[str] = set()

    def visit(src: SourceUnit) -> None:
        if src.path in visiting:
            raise CyclicImport(visiting[visiting.index(src.path):] + [src.path])
        if src.path in done:
            return
        visiting.append(src.path)
        parsed = parse_unit(src.text, src.path)
        src.imports = list(parsed.imports)
        for imp in parsed.imports:
            child = registry.load(imp, importer=src.path)
            visit(child)
        visiting.pop()
        done.add(src.path)
        units.append(parsed)
        for decl in parsed.models:
            if decl.name in models:
                raise PlxError(f"model {decl.name!r} redefined in {src.path} "
                               f"(first defined in {models[decl.name].unit})",
                               decl.span.line, decl.span.col)
            models[decl.name] = decl

    visit(unit)
    return Forest(units=units, models=models)
