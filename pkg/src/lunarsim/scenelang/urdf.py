"""Limited URDF import: links and joints mapped onto model declarations.

Visual/collision geometry is dropped; inertial data is kept as mass
parameters. Revolute and continuous joints become hinges, prismatic stays
prismatic, fixed becomes rigid. The root link is anchored at the origin.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .errors import PlxError
from .nodes import (Auto, FieldDecl, FrameRef, MateDecl, ModelDecl, Num, Vec)

_JOINT_KINDS = {"revolute": "hinge", "continuous": "hinge",
                "prismatic": "prismatic", "fixed": "rigid"}


def _vec_expr(xyz: np.ndarray) -> Vec:
    return Vec(tuple(Num(float(v)) for v in xyz))


def _parse_xyz(text: str | None) -> np.ndarray:
    if not text:
        return np.zeros(3)
    return np.array([float(p) for p in text.split()], dtype=float)


def load_urdf(text: str, model_name: str | None = None) -> ModelDecl:
    """Convert URDF XML into a single flattened model declaration."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise PlxError(f"invalid URDF XML: {exc}") from exc
    if root.tag != "robot":
        raise PlxError("URDF root element must be <robot>")
    name = model_name or root.get("name") or "UrdfRobot"

    fields: list[FieldDecl] = []
    link_names: list[str] = []
    for link in root.findall("link"):
        lname = link.get("name")
        if not lname:
            raise PlxError("URDF link without a name")
        link_names.append(lname)
        mass_el = link.find("inertial/mass")
        if mass_el is not None and mass_el.get("value") is not None:
            fields.append(FieldDecl(name=f"{lname}_mass", type_name="Real",
                                    expr=Num(float(mass_el.get("value")))))

    child_links: set[str] = set()
    mates: list[MateDecl] = []
    for joint in root.findall("joint"):
        jtype = joint.get("type", "fixed")
        if jtype not in _JOINT_KINDS:
            raise PlxError(f"unsupported URDF joint type {jtype!r}")
        parent = joint.find("parent")
        child = joint.find("child")
        if parent is None or child is None:
            raise PlxError(f"joint {joint.get('name')!r} missing parent/child")
        origin = joint.find("origin")
        xyz = _parse_xyz(origin.get("xyz") if origin is not None else None)
        kind = _JOINT_KINDS[jtype]
        axis_expr = None
        if kind in ("hinge", "prismatic"):
            axis_el = joint.find("axis")
            axis = _parse_xyz(axis_el.get("xyz") if axis_el is not None else "1 0 0")
            n = np.linalg.norm(axis)
            if n == 0:
                raise PlxError(f"joint {joint.get('name')!r} has zero axis")
            axis_expr = _vec_expr(axis / n)
        child_links.add(child.get("link"))
        mates.append(MateDecl(
            kind=kind,
            frame_a=FrameRef(body=parent.get("link"), offset=_vec_expr(xyz)),
            frame_b=FrameRef(body=child.get("link"), offset=None),
            axis=axis_expr,
            actuated=jtype in ("revolute", "continuous", "prismatic"),
        ))

    body_fields = []
    for lname in link_names:
        anchored = lname not in child_links  # roots anchor at the origin
        expr = _vec_expr(np.zeros(3)) if anchored else Auto()
        body_fields.append(FieldDecl(name=lname, type_name="Body", expr=expr))

    return ModelDecl(name=name, base=None, traits=(),
                     fields=tuple(body_fields + fields),
                     mates=tuple(mates), signals=())
