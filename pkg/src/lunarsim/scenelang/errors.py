"""Diagnostics for the .plx modeling language."""

from __future__ import annotations


class PlxError(Exception):
    """Base class: any parse/resolve/assembly failure."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is not None:
            return f"{self.line}:{self.col or 0}: {self.message}"
        return self.message


class PlxSyntaxError(PlxError):
    pass


class CyclicImport(PlxError):
    def __init__(self, chain: list[str]):
        self.chain = list(chain)
        super().__init__("cyclic import: " + " -> ".join(self.chain))


class UnknownImport(PlxError):
    def __init__(self, path: str, line: int | None = None, col: int | None = None):
        self.path = path
        super().__init__(f"cannot resolve import {path!r}", line, col)


class UnknownBase(PlxError):
    def __init__(self, name: str, line: int | None = None, col: int | None = None):
        self.name = name
        super().__init__(f"unknown base model {name!r}", line, col)


class TraitConflict(PlxError):
    def __init__(self, field_name: str, traits: tuple[str, str] | None = None):
        self.field = field_name
        detail = f" (declared by traits {traits[0]} and {traits[1]})" if traits else ""
        super().__init__(f"trait conflict on field {field_name!r}{detail}")


class DivisionByZero(PlxError):
    def __init__(self, line: int | None = None, col: int | None = None):
        super().__init__("division by zero", line, col)


class UnboundReference(PlxError):
    def __init__(self, name: str, line: int | None = None, col: int | None = None):
        self.name = name
        super().__init__(f"unbound reference {name!r}", line, col)


class TypeMismatch(PlxError):
    pass


class AmbiguousOrder(PlxError):
    def __init__(self, bodies: list[str]):
        self.bodies = list(bodies)
        super().__init__("assembly order ambiguous, no path from anchor to: "
                         + ", ".join(self.bodies))


class LoopNotConverged(PlxError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"loop closure did not converge: residual {residual:.3e} "
                         f"after {iterations} iterations")


class OverConstrained(PlxError):
    def __init__(self, mate_desc: str):
        self.mate = mate_desc
        super().__init__(f"over-constrained mate {mate_desc} (rigid loop with no free joints)")
