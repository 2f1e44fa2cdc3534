"""AST node types for .plx source.

Spans (line, col) are carried for diagnostics but excluded from equality so
that a pretty-print/re-parse round trip compares equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SEMANTIC_TYPES = ("Real", "Bool", "String", "Vec3", "Body")
MATE_KINDS = ("rigid", "hinge", "prismatic")


@dataclass(frozen=True)
class Span:
    line: int = 0
    col: int = 0


# --- expressions ------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class StrLit(Expr):
    value: str


@dataclass(frozen=True)
class Auto(Expr):
    """Body transform left for automatic assembly."""


@dataclass(frozen=True)
class Ref(Expr):
    """Reference to a sibling/inherited field (`name`) or `Model.field`."""
    parts: tuple[str, ...]
    span: Span = field(default=Span(), compare=False)

    @property
    def dotted(self) -> str:
        return ".".join(self.parts)


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Vec(Expr):
    items: tuple[Expr, ...]


@dataclass(frozen=True)
class Uniform(Expr):
    """Domain-randomized parameter, sampled from [lo, hi] at assembly time."""
    lo: Expr
    hi: Expr


# --- declarations -----------------------------------------------------------

@dataclass(frozen=True)
class FieldDecl:
    name: str
    type_name: str
    expr: Expr
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class SignalDecl:
    direction: str  # "input" | "output"
    name: str
    type_name: str
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class FrameRef:
    body: str
    offset: Expr | None  # Vec of 3 exprs, None = body origin
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class MateDecl:
    kind: str  # rigid | hinge | prismatic
    frame_a: FrameRef
    frame_b: FrameRef
    axis: Expr | None  # Vec, required for hinge/prismatic
    actuated: bool
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class ModelDecl:
    name: str
    base: str | None
    traits: tuple[str, ...]
    fields: tuple[FieldDecl, ...]
    mates: tuple[MateDecl, ...]
    signals: tuple[SignalDecl, ...]
    span: Span = field(default=Span(), compare=False)
    unit: str = field(default="", compare=False)  # source path, provenance only


@dataclass(frozen=True)
class Unit:
    path: str
    imports: tuple[str, ...]
    models: tuple[ModelDecl, ...]
