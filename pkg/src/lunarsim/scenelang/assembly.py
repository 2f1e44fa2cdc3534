"""Automatic assembly: anchor propagation plus iterative loop closure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import (Frame, IDENTITY_QUAT, quat_conj, quat_from_axis_angle,
                        quat_mul, quat_normalize, quat_rotate, quat_to_rotvec)
from .errors import AmbiguousOrder, LoopNotConverged, OverConstrained, PlxError
from .parser import Forest
from .resolver import (BodyNode, ModelTree, ResolvedMate, finish_evaluation,
                       flatten_model)

MAX_ITERATIONS = 200
DEFAULT_TOLERANCE = 1e-8
_RESTARTS = 3


@dataclass
class _Edge:
    mate: ResolvedMate
    index: int                 # mate index, used for deterministic ordering
    var_index: int | None = None  # slot in the joint-coordinate vector, if any


def assemble(tree: ModelTree, tolerance: float = DEFAULT_TOLERANCE,
             seed: int = 0, forest: Forest | None = None) -> ModelTree:
    """Assign world transforms to every body of a resolved tree.

    Randomized parameters are sampled from their declared ranges with `seed`,
    tree-structured mates are solved by forward propagation from the anchored
    bodies, and closed loops by damped Gauss-Newton on the stacked mate
    residuals until the max residual drops below `tolerance`.
    """
    rng = np.random.default_rng(seed)
    if tree.random_params:
        samples = {p.name: float(rng.uniform(p.lo, p.hi)) for p in tree.random_params}
        if forest is None:
            raise PlxError("assembling a randomized model requires the source forest")
        tree = finish_evaluation(tree, flatten_model(tree.name, forest), forest, samples)
    else:
        tree = _copy(tree)

    if not tree.bodies:
        out = _copy(tree)
        out.assembled = True  # parameter-only model, nothing to place
        return out
    anchors = [b for b in tree.bodies if b.anchored]
    if not anchors:
        raise AmbiguousOrder([b.name for b in tree.bodies])

    # Spanning tree by BFS from the anchors, in declaration order.
    adjacency: dict[str, list[_Edge]] = {b.name: [] for b in tree.bodies}
    for idx, m in enumerate(tree.mates):
        edge = _Edge(mate=m, index=idx)
        adjacency[m.body_a].append(edge)
        adjacency[m.body_b].append(edge)

    parent_edge: dict[str, _Edge] = {}
    order: list[str] = []
    seen = {b.name for b in anchors}
    queue = [b.name for b in anchors]
    tree_edges: list[_Edge] = []
    while queue:
        name = queue.pop(0)
        order.append(name)
        for edge in adjacency[name]:
            other = edge.mate.body_b if edge.mate.body_a == name else edge.mate.body_a
            if other not in seen:
                seen.add(other)
                parent_edge[other] = edge
                tree_edges.append(edge)
                queue.append(other)

    unreachable = [b.name for b in tree.bodies if b.name not in seen]
    if unreachable:
        raise AmbiguousOrder(unreachable)

    tree_idx = {e.index for e in tree_edges}
    loop_edges = [_Edge(m, i) for i, m in enumerate(tree.mates) if i not in tree_idx]

    # Joint coordinates: one per hinge/prismatic tree edge.
    nvar = 0
    for e in tree_edges:
        if e.mate.kind in ("hinge", "prismatic"):
            e.var_index = nvar
            nvar += 1

    def propagate(q: np.ndarray) -> dict[str, Frame]:
        frames: dict[str, Frame] = {}
        for b in anchors:
            frames[b.name] = Frame(np.asarray(b.anchor_pos, dtype=float),
                                   IDENTITY_QUAT.copy())
        # BFS order guarantees a parent is placed before its children
        for child in order:
            if child in frames:
                continue
            edge = parent_edge[child]
            m = edge.mate
            qi = 0.0 if edge.var_index is None else float(q[edge.var_index])
            if m.body_b == child:
                frames[child] = _place(frames[m.body_a], m.frame_a, m.frame_b,
                                       m.kind, m.axis, qi, forward=True)
            else:
                frames[child] = _place(frames[m.body_b], m.frame_b, m.frame_a,
                                       m.kind, m.axis, qi, forward=False)
        return frames

    def residuals(q: np.ndarray) -> np.ndarray:
        frames = propagate(q)
        if not loop_edges:
            return np.zeros(0)
        parts = [_mate_residual(frames[e.mate.body_a], frames[e.mate.body_b], e.mate)
                 for e in loop_edges]
        return np.concatenate(parts)

    q = np.zeros(nvar)
    r = residuals(q)
    iterations = 0
    if loop_edges and r.size and float(np.max(np.abs(r))) >= tolerance:
        if nvar == 0:
            frames0 = propagate(q)
            worst = max(loop_edges, key=lambda e: float(np.max(np.abs(
                _mate_residual(frames0[e.mate.body_a], frames0[e.mate.body_b], e.mate)))))
            raise OverConstrained(worst.mate.describe())
        best_r = np.inf
        for attempt in range(_RESTARTS + 1):
            if attempt > 0:
                q = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size=nvar)
            q, r, used = _gauss_newton(residuals, q, tolerance)
            iterations += used
            best_r = min(best_r, float(np.max(np.abs(r))))
            if float(np.max(np.abs(r))) < tolerance:
                break
        else:
            raise LoopNotConverged(best_r, iterations)

    frames = propagate(q)
    out = _copy(tree)
    for b in out.bodies:
        f = frames[b.name]
        b.world_pos = f.pos.copy()
        b.world_quat = f.quat.copy()
    out.assembled = True
    return out


def validate_machine(tree: ModelTree) -> dict[str, int]:
    """Constraint census: every mate is one constraint."""
    total = len(tree.mates)
    actuated = sum(1 for m in tree.mates if m.actuated)
    return {"total": total, "actuated": actuated}


def max_mate_residual(tree: ModelTree) -> float:
    """Largest residual over all mates of an assembled tree."""
    if not tree.assembled:
        raise PlxError("tree is not assembled")
    frames = {b.name: Frame(b.world_pos, b.world_quat) for b in tree.bodies}
    worst = 0.0
    for m in tree.mates:
        r = _mate_residual(frames[m.body_a], frames[m.body_b], m)
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


# --- internals ---------------------------------------------------------------

def _copy(tree: ModelTree) -> ModelTree:
    return ModelTree(
        name=tree.name,
        bodies=[BodyNode(b.name, b.anchored,
                         None if b.anchor_pos is None else b.anchor_pos.copy(),
                         None if b.world_pos is None else b.world_pos.copy(),
                         None if b.world_quat is None else b.world_quat.copy())
                for b in tree.bodies],
        mates=list(tree.mates),
        parameters=dict(tree.parameters),
        signals=list(tree.signals),
        random_params=list(tree.random_params),
        deferred=dict(tree.deferred),
        assembled=tree.assembled,
    )


def _place(parent: Frame, frame_parent: np.ndarray, frame_child: np.ndarray,
           kind: str, axis: np.ndarray | None, q: float, forward: bool) -> Frame:
    """World frame of the child body so the mate holds at joint coordinate q."""
    attach = parent.apply(frame_parent)
    if kind == "rigid":
        quat = parent.quat
        pos = attach - quat_rotate(quat, np.asarray(frame_child, dtype=float))
        return Frame(pos, quat)
    if kind == "hinge":
        rot = quat_from_axis_angle(np.asarray(axis, dtype=float), q if forward else -q)
        quat = quat_normalize(quat_mul(parent.quat, rot))
        pos = attach - quat_rotate(quat, np.asarray(frame_child, dtype=float))
        return Frame(pos, quat)
    if kind == "prismatic":
        quat = parent.quat
        slide = quat_rotate(parent.quat, np.asarray(axis, dtype=float)) * (q if forward else -q)
        pos = attach + slide - quat_rotate(quat, np.asarray(frame_child, dtype=float))
        return Frame(pos, quat)
    raise PlxError(f"unknown mate kind {kind!r}")


def _mate_residual(fa: Frame, fb: Frame, mate: ResolvedMate) -> np.ndarray:
    pa = fa.apply(mate.frame_a)
    pb = fb.apply(mate.frame_b)
    gap = pa - pb
    if mate.kind == "rigid":
        rot = quat_to_rotvec(quat_mul(quat_conj(fa.quat), fb.quat))
        return np.concatenate([gap, rot])
    if mate.kind == "hinge":
        axis = np.asarray(mate.axis, dtype=float)
        aa = quat_rotate(fa.quat, axis)
        ab = quat_rotate(fb.quat, axis)
        return np.concatenate([gap, np.cross(aa, ab)])
    if mate.kind == "prismatic":
        axis = quat_rotate(fa.quat, np.asarray(mate.axis, dtype=float))
        perp = gap - np.dot(gap, axis) * axis
        rot = quat_to_rotvec(quat_mul(quat_conj(fa.quat), fb.quat))
        return np.concatenate([perp, rot])
    raise PlxError(f"unknown mate kind {mate.kind!r}")


def _gauss_newton(residual_fn, q0: np.ndarray, tolerance: float):
    """Damped (Levenberg) Gauss-Newton; returns (q, residuals, iterations)."""
    q = q0.copy()
    r = residual_fn(q)
    lam = 1e-3
    eps = 1e-7
    it = 0
    for it in range(1, MAX_ITERATIONS + 1):
        if float(np.max(np.abs(r))) < tolerance:
            break
        jac = np.empty((r.size, q.size))
        for k in range(q.size):
            dq = q.copy()
            dq[k] += eps
            jac[:, k] = (residual_fn(dq) - r) / eps
        jtj = jac.T @ jac
        jtr = jac.T @ r
        improved = False
        for _ in range(12):
            try:
                step = np.linalg.solve(jtj + lam * np.eye(q.size), jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            q_try = q - step
            r_try = residual_fn(q_try)
            if np.dot(r_try, r_try) < np.dot(r, r):
                q, r = q_try, r_try
                lam = max(lam * 0.3, 1e-12)
                improved = True
                break
            lam *= 10.0
        if not improved:
            break
    return q, r, it
