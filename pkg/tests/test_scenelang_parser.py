"""Parser, imports, and pretty-print round trips."""

import pytest

from lunarsim.scenelang import (CyclicImport, DictRegistry, PlxSyntaxError,
                                SourceUnit, UnknownImport, format_unit,
                                parse_source, parse_unit)
from lunarsim.scenelang.nodes import BinOp, Num, Ref


def parse_models(src: str):
    forest = parse_source(SourceUnit("main.plx", src),
                          DictRegistry({"main.plx": src}))
    return forest


def test_minimal_model_single_field():
    unit = parse_unit("model Wheel:\n  radius: Real = 0.15\n")
    assert len(unit.models) == 1
    m = unit.models[0]
    assert m.name == "Wheel"
    assert m.fields[0].name == "radius"
    assert m.fields[0].type_name == "Real"
    assert m.fields[0].expr == Num(0.15)


def test_extends_with_traits_header():
    src = ("model Vehicle:\n  m: Real = 1\n"
           "model Steerable:\n  s: Real = 1\n"
           "model Powered:\n  p: Real = 1\n"
           "model Rover extends Vehicle with Steerable, Powered:\n"
           "  x: Real = 1\n")
    forest = parse_models(src)
    rover = forest.models["Rover"]
    assert rover.base == "Vehicle"
    assert rover.traits == ("Steerable", "Powered")


def test_two_node_import_cycle():
    units = {"a.plx": 'import "b.plx"\nmodel A:\n  x: Real = 1\n',
             "b.plx": 'import "a.plx"\nmodel B:\n  y: Real = 2\n'}
    reg = DictRegistry(units)
    with pytest.raises(CyclicImport) as exc:
        parse_source(reg.load("a.plx"), reg)
    assert exc.value.chain == ["a.plx", "b.plx", "a.plx"]


def test_unknown_import():
    reg = DictRegistry({"a.plx": 'import "missing.plx"\n'})
    with pytest.raises(UnknownImport):
        parse_source(reg.load("a.plx"), reg)


def test_syntax_error_carries_position():
    with pytest.raises(PlxSyntaxError) as exc:
        parse_unit("model :\n")
    assert exc.value.line == 1


def test_tab_indentation_rejected():
    with pytest.raises(PlxSyntaxError):
        parse_unit("model A:\n\tx: Real = 1\n")


def test_expression_precedence():
    unit = parse_unit("model A:\n  x: Real = 1 + 2 * 3\n")
    expr = unit.models[0].fields[0].expr
    assert isinstance(expr, BinOp) and expr.op == "+"
    assert isinstance(expr.right, BinOp) and expr.right.op == "*"


def test_dotted_reference():
    unit = parse_unit("model A:\n  x: Real = Wheel.radius\n")
    assert unit.models[0].fields[0].expr == Ref(("Wheel", "radius"))


def test_mate_requires_axis_for_hinge():
    with pytest.raises(PlxSyntaxError):
        parse_unit("model A:\n  a: Body = (0,0,0)\n  b: Body = auto\n"
                   "  mate hinge(a, b)\n")


def test_unknown_mate_kind():
    with pytest.raises(PlxSyntaxError):
        parse_unit("model A:\n  a: Body = (0,0,0)\n  b: Body = auto\n"
                   "  mate ball(a, b)\n")


def test_signals_parse():
    unit = parse_unit("model A:\n  input cmd: Real\n  output pose: Vec3\n")
    sigs = unit.models[0].signals
    assert [(s.direction, s.name, s.type_name) for s in sigs] == [
        ("input", "cmd", "Real"), ("output", "pose", "Vec3")]


def test_duplicate_model_names_rejected():
    src = "model A:\n  x: Real = 1\nmodel A:\n  y: Real = 2\n"
    with pytest.raises(Exception):
        parse_models(src)


ROUND_TRIP_SOURCES = [
    "model Wheel:\n  radius: Real = 0.15\n",
    ('model Rover extends Vehicle with Steerable, Powered:\n'
     '  half: Real = 0.4\n  track: Real = 2 * half\n'
     '  body: Body = (0, 0, 0.45)\n  wheel: Body = auto\n'
     '  mate hinge(body@(1, 0.8, -0.3), wheel, axis=(0, 1, 0), actuated=true)\n'
     '  input speed: Real\n  output pose: Vec3\n'),
    'import "base.plx"\n\nmodel A:\n  x: Real = uniform(0.1, 0.2)\n'
    '  y: Real = -x / (2 + 1)\n  name: String = "hello"\n  flag: Bool = true\n',
]


@pytest.mark.parametrize("src", ROUND_TRIP_SOURCES)
def test_print_parse_round_trip(src):
    unit = parse_unit(src, "a.plx")
    printed = format_unit(unit)
    reparsed = parse_unit(printed, "a.plx")
    assert reparsed.models == unit.models
    assert reparsed.imports == unit.imports
    # printing is a fixed point
    assert format_unit(reparsed) == printed
