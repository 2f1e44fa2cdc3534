"""Declarative .plx modeling language: parse, resolve, assemble, export."""

from .assembly import assemble, max_mate_residual, validate_machine
from .errors import (AmbiguousOrder, CyclicImport, DivisionByZero,
                     LoopNotConverged, OverConstrained, PlxError,
                     PlxSyntaxError, TraitConflict, TypeMismatch,
                     UnboundReference, UnknownBase, UnknownImport)
from .jsonio import tree_to_dict, tree_to_json
from .parser import (DictRegistry, FileRegistry, Forest, SourceUnit,
                     parse_source, parse_unit)
from .printer import format_expr, format_model, format_unit
from .resolver import ModelTree, RandomParam, flatten_model, resolve
from .urdf import load_urdf

__all__ = [
    "AmbiguousOrder", "CyclicImport", "DictRegistry", "DivisionByZero",
    "FileRegistry", "Forest", "LoopNotConverged", "ModelTree",
    "OverConstrained", "PlxError", "PlxSyntaxError", "RandomParam",
    "SourceUnit", "TraitConflict", "TypeMismatch", "UnboundReference",
    "UnknownBase", "UnknownImport", "assemble", "flatten_model",
    "format_expr", "format_model", "format_unit", "load_urdf",
    "max_mate_residual", "parse_source", "parse_unit", "resolve",
    "tree_to_dict", "tree_to_json", "validate_machine",
]


def load_model(path: str, model: str | None = None):
    """Parse a .plx file and resolve one model (the first one by default)."""
    registry = FileRegistry()
    unit = registry.load(path)
    forest = parse_source(unit, registry)
    if model is None:
        parsed = [m for u in forest.units if u.path == unit.path for m in u.models]
        if not parsed:
            raise PlxError(f"{path}: no models declared")
        model = parsed[-1].name
    return resolve(model, forest), forest
