"""JSON export of assembled model trees (the `plx flatten` output).

Schema ``plx-modeltree/1``:
    model: str            resolved model name
    seed: int             randomization seed used by assembly
    parameters: {name: number|bool|string|[x,y,z]}
    bodies: [{name, anchored, position [x,y,z], quaternion [w,x,y,z]}]
    mates: [{kind, body_a, frame_a, body_b, frame_b, axis|null, actuated}]
    signals: [{direction, name, type}]
    census: {total, actuated}

Serialization is canonical (sorted keys, repr floats), so identical
(model, seed) inputs produce byte-identical output.
"""

from __future__ import annotations

import json

import numpy as np

from .assembly import validate_machine
from .resolver import ModelTree

SCHEMA = "plx-modeltree/1"


def _plain(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return float(value)
    return value


def tree_to_dict(tree: ModelTree, seed: int) -> dict:
    if not tree.assembled:
        raise ValueError("tree must be assembled before export")
    return {
        "schema": SCHEMA,
        "model": tree.name,
        "seed": int(seed),
        "parameters": {k: _plain(v) for k, v in sorted(tree.parameters.items())},
        "bodies": [{
            "name": b.name,
            "anchored": b.anchored,
            "position": _plain(b.world_pos),
            "quaternion": _plain(b.world_quat),
        } for b in tree.bodies],
        "mates": [{
            "kind": m.kind,
            "body_a": m.body_a,
            "frame_a": _plain(m.frame_a),
            "body_b": m.body_b,
            "frame_b": _plain(m.frame_b),
            "axis": _plain(m.axis) if m.axis is not None else None,
            "actuated": m.actuated,
        } for m in tree.mates],
        "signals": [{"direction": s.direction, "name": s.name, "type": s.type_name}
                    for s in tree.signals],
        "census": validate_machine(tree),
    }


def tree_to_json(tree: ModelTree, seed: int) -> str:
    return json.dumps(tree_to_dict(tree, seed), sort_keys=True,
                      separators=(",", ":")) + "\n"
