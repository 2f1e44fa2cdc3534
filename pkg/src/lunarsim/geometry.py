"""Minimal rigid-transform math shared by the assembler and the vehicle model.

Quaternions are numpy arrays ``[w, x, y, z]``, always kept normalized.
A frame is a (position, quaternion) pair wrapping a rigid transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    q = q / n
    # canonical sign: w >= 0 keeps serialized transforms reproducible
    return -q if q[0] < 0 else q


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    qv = np.array([0.0, v[0], v[1], v[2]])
    return quat_mul(quat_mul(q, qv), quat_conj(q))[1:]


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a unit quaternion (small-angle safe)."""
    q = quat_normalize(q)
    w = min(1.0, max(-1.0, float(q[0])))
    angle = 2.0 * np.arccos(w)
    s = np.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-12:
        return 2.0 * q[1:]
    return angle * q[1:] / s


@dataclass(frozen=True)
class Frame:
    """Rigid transform: world point = pos + R(quat) * local point."""

    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quat: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def compose(self, other: "Frame") -> "Frame":
        return Frame(self.pos + quat_rotate(self.quat, other.pos),
                     quat_normalize(quat_mul(self.quat, other.quat)))

    def inverse(self) -> "Frame":
        qi = quat_conj(self.quat)
        return Frame(-quat_rotate(qi, self.pos), qi)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.pos + quat_rotate(self.quat, np.asarray(point, dtype=float))

    @staticmethod
    def from_xyz(x: float, y: float, z: float) -> "Frame":
        return Frame(np.array([x, y, z], dtype=float))
