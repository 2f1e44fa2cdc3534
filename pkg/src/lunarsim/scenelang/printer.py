"""Canonical pretty-printer; re-parsing its output reproduces the forest."""

from __future__ import annotations

from .nodes import (Auto, BinOp, BoolLit, Expr, FrameRef, MateDecl, ModelDecl,
                    Neg, Num, Ref, StrLit, Unit, Uniform, Vec)

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Num):
        return repr(expr.value) if expr.value != int(expr.value) else str(int(expr.value))
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, StrLit):
        return '"' + expr.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(expr, Auto):
        return "auto"
    if isinstance(expr, Ref):
        return expr.dotted
    if isinstance(expr, Neg):
        return "-" + format_expr(expr.operand, 3)
    if isinstance(expr, Vec):
        return "(" + ", ".join(format_expr(e) for e in expr.items) + ")"
    if isinstance(expr, Uniform):
        return f"uniform({format_expr(expr.lo)}, {format_expr(expr.hi)})"
    if isinstance(expr, BinOp):
        prec = _PRECEDENCE[expr.op]
        text = f"{format_expr(expr.left, prec)} {expr.op} {format_expr(expr.right, prec + 1)}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"unprintable expression {expr!r}")


def _format_frameref(ref: FrameRef) -> str:
    if ref.offset is None:
        return ref.body
    return ref.body + "@" + format_expr(ref.offset)


def _format_mate(mate: MateDecl) -> str:
    parts = [_format_frameref(mate.frame_a), _format_frameref(mate.frame_b)]
    if mate.axis is not None:
        parts.append("axis=" + format_expr(mate.axis))
    if mate.actuated:
        parts.append("actuated=true")
    return f"mate {mate.kind}({', '.join(parts)})"


def format_model(decl: ModelDecl) -> str:
    head = f"model {decl.name}"
    if decl.base:
        head += f" extends {decl.base}"
    if decl.traits:
        head += " with " + ", ".join(decl.traits)
    lines = [head + ":"]
    for f in decl.fields:
        lines.append(f"  {f.name}: {f.type_name} = {format_expr(f.expr)}")
    for m in decl.mates:
        lines.append("  " + _format_mate(m))
    for s in decl.signals:
        lines.append(f"  {s.direction} {s.name}: {s.type_name}")
    return "\n".join(lines)


def format_unit(unit: Unit) -> str:
    chunks = [f'import "{p}"' for p in unit.imports]
    chunks.extend(format_model(m) for m in unit.models)
    return "\n\n".join(chunks) + "\n"
