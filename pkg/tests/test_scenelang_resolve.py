"""Inheritance flattening, trait merging, and expression evaluation."""

import numpy as np
import pytest

from lunarsim.scenelang import (DictRegistry, DivisionByZero, SourceUnit,
                                TraitConflict, TypeMismatch, UnboundReference,
                                UnknownBase, flatten_model, parse_source,
                                resolve)


def forest_of(src: str):
    return parse_source(SourceUnit("main.plx", src),
                        DictRegistry({"main.plx": src}))


def test_derived_overrides_base_field():
    f = forest_of("model Base:\n  radius: Real = 0.15\n"
                  "model Big extends Base:\n  radius: Real = 0.20\n")
    assert resolve("Big", f).parameters["radius"] == 0.20
    assert resolve("Base", f).parameters["radius"] == 0.15


def test_expression_with_sibling_reference():
    f = forest_of("model A:\n  half_track: Real = 0.4\n"
                  "  track_width: Real = 2 * half_track\n")
    assert resolve("A", f).parameters["track_width"] == pytest.approx(0.8)


def test_trait_conflict_is_error():
    # oracle: enumerate the merged field sets by hand -> 'mass' collides
    f = forest_of("model T1:\n  mass: Real = 1\n"
                  "model T2:\n  mass: Real = 2\n"
                  "model M with T1, T2:\n  x: Real = 0\n")
    with pytest.raises(TraitConflict) as exc:
        resolve("M", f)
    assert exc.value.field == "mass"


def test_reference_to_inherited_field():
    f = forest_of("model Base:\n  n: Real = 3\n"
                  "model D extends Base:\n  m: Real = n * 2\n")
    assert resolve("D", f).parameters["m"] == 6.0


def test_unknown_base():
    f = forest_of("model D extends Nope:\n  x: Real = 1\n")
    with pytest.raises(UnknownBase):
        resolve("D", f)


def test_division_by_zero_reported():
    f = forest_of("model A:\n  x: Real = 1 / 0\n")
    with pytest.raises(DivisionByZero):
        resolve("A", f)


def test_unbound_reference():
    f = forest_of("model A:\n  x: Real = missing + 1\n")
    with pytest.raises(UnboundReference):
        resolve("A", f)


def test_self_reference_is_unbound():
    f = forest_of("model A:\n  x: Real = x + 1\n")
    with pytest.raises(UnboundReference):
        resolve("A", f)


def test_type_mismatch_string_arithmetic():
    f = forest_of('model A:\n  s: String = "hi"\n  x: Real = s * 2\n')
    with pytest.raises(TypeMismatch):
        resolve("A", f)


def test_type_mismatch_declared_type():
    f = forest_of("model A:\n  x: Real = (1, 2, 3)\n")
    with pytest.raises(TypeMismatch):
        resolve("A", f)


def test_cross_file_reference_binds():
    units = {
        "wheels.plx": "model Wheel:\n  radius: Real = 0.15\n",
        "main.plx": ('import "wheels.plx"\n'
                     "model Rover:\n  r: Real = Wheel.radius * 2\n"),
    }
    reg = DictRegistry(units)
    f = parse_source(reg.load("main.plx"), reg)
    assert resolve("Rover", f).parameters["r"] == pytest.approx(0.3)


def test_vector_arithmetic():
    f = forest_of("model A:\n  v: Vec3 = (1, 2, 3)\n  w: Vec3 = v * 2\n")
    assert np.allclose(resolve("A", f).parameters["w"], [2, 4, 6])


def test_flattening_idempotent():
    src = ("model Base:\n  a: Real = 1\n"
           "model T:\n  b: Real = 2\n"
           "model M extends Base with T:\n  c: Real = a + b\n")
    f = forest_of(src)
    flat = flatten_model("M", f)
    # an already-flat model flattens to itself
    f.models["M"] = flat
    assert flatten_model("M", f) == flat


def test_resolve_keeps_randomized_fields_pending():
    f = forest_of("model A:\n  r: Real = uniform(0.1, 0.2)\n  d: Real = r * 2\n")
    tree = resolve("A", f)
    assert [p.name for p in tree.random_params] == ["r"]
    assert "r" in tree.deferred and "d" in tree.deferred


def test_inheritance_cycle_detected():
    f = forest_of("model A extends B:\n  x: Real = 1\n"
                  "model B extends A:\n  y: Real = 2\n")
    with pytest.raises(UnknownBase):
        resolve("A", f)
