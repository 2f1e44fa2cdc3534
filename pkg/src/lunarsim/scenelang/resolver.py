"""Inheritance/trait flattening and expression evaluation for .plx models."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (DivisionByZero, PlxError, TraitConflict, TypeMismatch,
                     UnboundReference, UnknownBase)
from .nodes import (Auto, BinOp, BoolLit, Expr, FieldDecl, MateDecl, ModelDecl,
                    Neg, Num, Ref, SignalDecl, StrLit, Uniform, Vec)
from .parser import Forest


class _PendingType:
    """Sentinel: value depends on a domain-randomized parameter."""

    def __repr__(self) -> str:
        return "<pending>"


PENDING = _PendingType()


@dataclass(frozen=True)
class RandomParam:
    name: str
    lo: float
    hi: float


@dataclass
class BodyNode:
    name: str
    anchored: bool
    # world position for anchors; orientation is always identity at declaration
    anchor_pos: np.ndarray | None = None
    # assigned by assembly
    world_pos: np.ndarray | None = None
    world_quat: np.ndarray | None = None


@dataclass
class ResolvedMate:
    kind: str
    body_a: str
    body_b: str
    frame_a: "np.ndarray | Expr"   # vec3 offset in body frame, or deferred Expr
    frame_b: "np.ndarray | Expr"
    axis: "np.ndarray | Expr | None"
    actuated: bool

    def describe(self) -> str:
        return f"{self.kind}({self.body_a}, {self.body_b})"


@dataclass
class ModelTree:
    """Resolved model: flattened fields, bodies, mates, signals.

    Transforms are unassigned until `assemble` runs; fields depending on
    randomized parameters hold their expression until sampling.
    """
    name: str
    bodies: list[BodyNode]
    mates: list[ResolvedMate]
    parameters: dict[str, object]          # name -> float|bool|str|vec3|PENDING
    signals: list[SignalDecl]
    random_params: list[RandomParam]
    deferred: dict[str, Expr] = field(default_factory=dict)  # pending field exprs
    assembled: bool = False

    def body(self, name: str) -> BodyNode:
        for b in self.bodies:
            if b.name == name:
                return b
        raise KeyError(name)


def flatten_model(name: str, forest: Forest, _chain: tuple[str, ...] = ()) -> ModelDecl:
    """Merge base chain and traits into a standalone declaration.

    Derived fields override base fields by name (keeping the base position);
    trait field sets must be mutually disjoint. Idempotent on its output.
    """
    if name in _chain:
        raise UnknownBase(name)  # inheritance cycle renders the base unusable
    if name not in forest.models:
        raise UnknownBase(name)
    decl = forest.models[name]
    chain = _chain + (name,)

    fields: list[FieldDecl] = []
    mates: list[MateDecl] = []
    signals: list[SignalDecl] = []

    def merge_fields(incoming: tuple[FieldDecl, ...]) -> None:
        for f in incoming:
            for i, existing in enumerate(fields):
                if existing.name == f.name:
                    fields[i] = f
                    break
            else:
                fields.append(f)

    if decl.base is not None:
        base = flatten_model(decl.base, forest, chain)
        merge_fields(base.fields)
        mates.extend(base.mates)
        signals.extend(base.signals)

    trait_owner: dict[str, str] = {}
    for trait_name in decl.traits:
        trait = flatten_model(trait_name, forest, chain)
        for f in trait.fields:
            if f.name in trait_owner:
                raise TraitConflict(f.name, (trait_owner[f.name], trait_name))
            trait_owner[f.name] = trait_name
        merge_fields(trait.fields)
        mates.extend(trait.mates)
        signals.extend(trait.signals)

    own_names = [f.name for f in decl.fields]
    for n in own_names:
        if own_names.count(n) > 1:
            raise PlxError(f"field {n!r} declared twice in model {decl.name}",
                           decl.span.line, decl.span.col)
    merge_fields(decl.fields)
    mates.extend(decl.mates)
    signals.extend(decl.signals)

    return replace(decl, base=None, traits=(), fields=tuple(fields),
                   mates=tuple(mates), signals=tuple(signals))


class _Evaluator:
    """Evaluates flattened field expressions with cycle detection.

    Values touching a `uniform(...)` range become PENDING; `assemble`
    re-evaluates them once the randomized parameters are sampled.
    """

    def __init__(self, flat: ModelDecl, forest: Forest,
                 samples: dict[str, float] | None = None):
        self.flat = flat
        self.forest = forest
        self.samples = samples  # None = static pass
        self.fields = {f.name: f for f in flat.fields}
        self.values: dict[str, object] = {}
        self.random_params: list[RandomParam] = []
        self._stack: list[str] = []

    def field_value(self, name: str) -> object:
        if name in self.values:
            return self.values[name]
        if name not in self.fields:
            raise UnboundReference(name)
        if name in self._stack:
            raise UnboundReference(name)  # self-referential definition
        self._stack.append(name)
        decl = self.fields[name]
        try:
            if isinstance(decl.expr, Uniform):
                value = self._eval_uniform(name, decl.expr)
            else:
                value = self.eval(decl.expr)
        finally:
            self._stack.pop()
        value = _check_type(decl, value)
        self.values[name] = value
        return value

    def _eval_uniform(self, name: str, expr: Uniform) -> object:
        lo = self.eval(expr.lo)
        hi = self.eval(expr.hi)
        if lo is PENDING or hi is PENDING:
            raise TypeMismatch("uniform() bounds must not themselves be randomized")
        if not isinstance(lo, float) or not isinstance(hi, float):
            raise TypeMismatch("uniform() bounds must be numbers")
        if hi < lo:
            raise TypeMismatch(f"uniform() range is empty: [{lo}, {hi}]")
        if self.samples is not None:
            return self.samples[name]
        self.random_params.append(RandomParam(name, lo, hi))
        return PENDING

    def eval(self, expr: Expr) -> object:
        if isinstance(expr, Num):
            return float(expr.value)
        if isinstance(expr, BoolLit):
            return bool(expr.value)
        if isinstance(expr, StrLit):
            return expr.value
        if isinstance(expr, Auto):
            return Auto()
        if isinstance(expr, Uniform):
            raise TypeMismatch("uniform() is only allowed as a whole field value")
        if isinstance(expr, Vec):
            items = [self.eval(e) for e in expr.items]
            if any(v is PENDING for v in items):
                return PENDING
            if not all(isinstance(v, float) for v in items):
                raise TypeMismatch("vector components must be numbers")
            return np.array(items, dtype=float)
        if isinstance(expr, Neg):
            v = self.eval(expr.operand)
            if v is PENDING:
                return PENDING
            if isinstance(v, float):
                return -v
            if isinstance(v, np.ndarray):
                return -v
            raise TypeMismatch("unary minus expects a number")
        if isinstance(expr, Ref):
            return self._eval_ref(expr)
        if isinstance(expr, BinOp):
            return self._eval_binop(expr)
        raise TypeMismatch(f"cannot evaluate {expr!r}")

    def _eval_ref(self, ref: Ref) -> object:
        if len(ref.parts) == 1:
            return self.field_value(ref.parts[0])
        if len(ref.parts) == 2:
            model_name, field_name = ref.parts
            if model_name not in self.forest.models:
                raise UnboundReference(ref.dotted, ref.span.line, ref.span.col)
            other = resolve(model_name, self.forest)
            if field_name not in other.parameters:
                raise UnboundReference(ref.dotted, ref.span.line, ref.span.col)
            return other.parameters[field_name]
        raise UnboundReference(ref.dotted, ref.span.line, ref.span.col)

    def _eval_binop(self, expr: BinOp) -> object:
        left = self.eval(expr.left)
        right = self.eval(expr.right)
        if left is PENDING or right is PENDING:
            if isinstance(expr.right, Num) and expr.op == "/" and expr.right.value == 0:
                raise DivisionByZero(expr.span.line, expr.span.col)
            return PENDING
        lf = isinstance(left, float)
        rf = isinstance(right, float)
        lv = isinstance(left, np.ndarray)
        rv = isinstance(right, np.ndarray)
        if not ((lf or lv) and (rf or rv)):
            raise TypeMismatch(f"operator {expr.op!r} expects numeric operands")
        if expr.op == "+":
            if lv != rv:
                raise TypeMismatch("cannot add vector and scalar")
            return left + right
        if expr.op == "-":
            if lv != rv:
                raise TypeMismatch("cannot subtract vector and scalar")
            return left - right
        if expr.op == "*":
            if lv and rv:
                raise TypeMismatch("cannot multiply two vectors")
            return left * right
        if expr.op == "/":
            if rv:
                raise TypeMismatch("cannot divide by a vector")
            if right == 0.0:
                raise DivisionByZero(expr.span.line, expr.span.col)
            return left / right
        raise TypeMismatch(f"unknown operator {expr.op!r}")


def _check_type(decl: FieldDecl, value: object) -> object:
    if value is PENDING:
        return value
    t = decl.type_name
    if t == "Real":
        if isinstance(value, bool) or not isinstance(value, float):
            raise TypeMismatch(f"field {decl.name!r}: expected Real",
                               decl.span.line, decl.span.col)
    elif t == "Bool":
        if not isinstance(value, bool):
            raise TypeMismatch(f"field {decl.name!r}: expected Bool",
                               decl.span.line, decl.span.col)
    elif t == "String":
        if not isinstance(value, str):
            raise TypeMismatch(f"field {decl.name!r}: expected String",
                               decl.span.line, decl.span.col)
    elif t == "Vec3":
        if not isinstance(value, np.ndarray):
            raise TypeMismatch(f"field {decl.name!r}: expected Vec3",
                               decl.span.line, decl.span.col)
    elif t == "Body":
        if not (isinstance(value, (Auto, np.ndarray))):
            raise TypeMismatch(f"field {decl.name!r}: Body expects auto or a "
                               "world position vector", decl.span.line, decl.span.col)
    return value


def _unit_axis(value: object, where: str) -> object:
    if value is PENDING or isinstance(value, Expr):
        return value
    if not isinstance(value, np.ndarray) or value.shape != (3,):
        raise TypeMismatch(f"{where}: axis must be a 3-vector")
    if abs(float(np.linalg.norm(value)) - 1.0) > 1e-9:
        raise TypeMismatch(f"{where}: axis must have unit norm (got |a|="
                           f"{float(np.linalg.norm(value)):.12f})")
    return value


def resolve(model: str, forest: Forest) -> ModelTree:
    """Flatten inheritance/traits and evaluate all field expressions.

    Fields depending on `uniform(...)` parameters stay pending; their
    expressions are kept on the tree for `assemble` to finish after
    sampling. Transforms are not assigned here.
    """
    flat = flatten_model(model, forest)
    ev = _Evaluator(flat, forest)
    for f in flat.fields:
        ev.field_value(f.name)

    bodies: list[BodyNode] = []
    parameters: dict[str, object] = {}
    deferred: dict[str, Expr] = {}
    for f in flat.fields:
        v = ev.values[f.name]
        if f.type_name == "Body":
            if v is PENDING:
                raise TypeMismatch(f"body {f.name!r} anchor must not be randomized")
            if isinstance(v, Auto):
                bodies.append(BodyNode(name=f.name, anchored=False))
            else:
                bodies.append(BodyNode(name=f.name, anchored=True,
                                       anchor_pos=np.asarray(v, dtype=float)))
        else:
            parameters[f.name] = v
            if v is PENDING:
                deferred[f.name] = f.expr

    body_names = {b.name for b in bodies}
    mates: list[ResolvedMate] = []
    for m in flat.mates:
        for fr in (m.frame_a, m.frame_b):
            if fr.body not in body_names:
                raise UnboundReference(fr.body, fr.span.line, fr.span.col)

        def frame_value(fr):
            if fr.offset is None:
                return np.zeros(3)
            v = ev.eval(fr.offset)
            return fr.offset if v is PENDING else v

        axis_value = None
        if m.axis is not None:
            v = ev.eval(m.axis)
            axis_value = m.axis if v is PENDING else _unit_axis(v, m.kind)
        mates.append(ResolvedMate(kind=m.kind, body_a=m.frame_a.body,
                                  body_b=m.frame_b.body,
                                  frame_a=frame_value(m.frame_a),
                                  frame_b=frame_value(m.frame_b),
                                  axis=axis_value, actuated=m.actuated))

    return ModelTree(name=flat.name, bodies=bodies, mates=mates,
                     parameters=parameters, signals=list(flat.signals),
                     random_params=list(ev.random_params), deferred=deferred)


def finish_evaluation(tree: ModelTree, forest_flat: ModelDecl | None,
                      forest: Forest, samples: dict[str, float]) -> ModelTree:
    """Re-evaluate pending fields/mate frames with sampled random values."""
    flat = forest_flat if forest_flat is not None else flatten_model(tree.name, forest)
    ev = _Evaluator(flat, forest, samples=samples)
    for f in flat.fields:
        ev.field_value(f.name)
    parameters = dict(tree.parameters)
    for name in list(parameters):
        if parameters[name] is PENDING:
            parameters[name] = ev.values[name]
    mates = []
    for m in tree.mates:
        fa = ev.eval(m.frame_a) if isinstance(m.frame_a, Expr) else m.frame_a
        fb = ev.eval(m.frame_b) if isinstance(m.frame_b, Expr) else m.frame_b
        ax = m.axis
        if isinstance(ax, Expr):
            ax = _unit_axis(ev.eval(ax), m.kind)
        mates.append(ResolvedMate(m.kind, m.body_a, m.body_b, fa, fb, ax, m.actuated))
    return ModelTree(name=tree.name, bodies=[replace_body(b) for b in tree.bodies],
                     mates=mates, parameters=parameters, signals=list(tree.signals),
                     random_params=list(tree.random_params), deferred={},
                     assembled=False)


def replace_body(b: BodyNode) -> BodyNode:
    return BodyNode(name=b.name, anchored=b.anchored,
                    anchor_pos=None if b.anchor_pos is None else b.anchor_pos.copy())
