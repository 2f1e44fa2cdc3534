"""Proprioceptive sensing: ground truth plus optional additive Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rover import RoverState


@dataclass(frozen=True)
class SensorNoise:
    """Per-channel standard deviations; zeros give exact readings."""
    wheel_angle: float = 0.0    # rad
    velocity: float = 0.0       # m/s
    position: float = 0.0       # m
    heading: float = 0.0        # rad

    def __post_init__(self):
        for name in ("wheel_angle", "velocity", "position", "heading"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} sigma must be non-negative")


@dataclass(frozen=True)
class SensorReading:
    wheel_angles: tuple[float, float, float, float]
    forward_velocity: float
    odometry: tuple[float, float, float]  # x, y, heading


def read_sensors(state: RoverState, noise: SensorNoise | None = None,
                 rng: np.random.Generator | None = None) -> SensorReading:
    if noise is None or (noise.wheel_angle == 0 and noise.velocity == 0
                         and noise.position == 0 and noise.heading == 0):
        return SensorReading(wheel_angles=state.steer_angles,
                             forward_velocity=state.body_velocity,
                             odometry=(state.position[0], state.position[1],
                                       state.heading))
    if rng is None:
        raise ValueError("noisy sensing requires an rng")
    wheel = tuple(a + rng.normal(0.0, noise.wheel_angle) if noise.wheel_angle else a
                  for a in state.steer_angles)
    vel = state.body_velocity + (rng.normal(0.0, noise.velocity) if noise.velocity else 0.0)
    px = state.position[0] + (rng.normal(0.0, noise.position) if noise.position else 0.0)
    py = state.position[1] + (rng.normal(0.0, noise.position) if noise.position else 0.0)
    hd = state.heading + (rng.normal(0.0, noise.heading) if noise.heading else 0.0)
    return SensorReading(wheel_angles=wheel, forward_velocity=vel,
                         odometry=(px, py, hd))
