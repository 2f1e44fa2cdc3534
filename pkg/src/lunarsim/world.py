"""Navigation world: one rover, four targets, one heightfield.

A world is single-threaded; independent worlds can run in parallel (the
vectorized RL environments rely on that). Physics runs at a fixed 50 Hz,
control layers step it in 10-substep bursts (5 Hz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .control import PDGains, WheelTargets
from .terrain import Heightfield, SunConfig, generate_terrain
from .vehicle import (CameraConfig, RoverConfig, RoverState, SceneObject,
                      init_state, make_scene_objects, render_camera, step,
                      target_visible)

PHYSICS_DT = 0.02        # 50 Hz fixed timestep
CONTROL_SUBSTEPS = 10    # control at 5 Hz

DEFAULT_TARGET_POSITIONS = {
    "Astronaut": (18.0, 14.0),
    "Antenna": (-16.0, 12.0),
    "Rover": (15.0, -15.0),
    "Rock": (-14.0, -16.0),
}


@dataclass
class NavWorld:
    terrain: Heightfield
    rover_cfg: RoverConfig
    state: RoverState
    objects: list[SceneObject]
    sun: SunConfig = field(default_factory=SunConfig)
    gains: PDGains = field(default_factory=PDGains)
    dt: float = PHYSICS_DT
    # invoked after every physics step; the live service hooks in here for
    # streaming, pacing, and pause control
    step_listener: object = None

    @staticmethod
    def create(extent: tuple[float, float] = (60.0, 60.0),
               cell_size: float = 0.25,
               craters: list | None = None,
               seed: int = 0,
               noise_amplitude: float = 0.0,
               regolith=None,
               target_positions: dict[str, tuple[float, float]] | None = None,
               rover_cfg: RoverConfig | None = None,
               spawn: tuple[float, float, float] = (0.0, 0.0, 0.0),
               sun: SunConfig | None = None) -> "NavWorld":
        cfg = rover_cfg or RoverConfig()
        hf = generate_terrain(extent, cell_size, craters=craters, seed=seed,
                              noise_amplitude=noise_amplitude, regolith=regolith)
        state = init_state(cfg, hf, spawn[0], spawn[1], spawn[2])
        objects = make_scene_objects(target_positions or DEFAULT_TARGET_POSITIONS)
        return NavWorld(terrain=hf, rover_cfg=cfg, state=state, objects=objects,
                        sun=sun or SunConfig())

    # --- stepping -----------------------------------------------------------
    def step_physics(self, targets: WheelTargets, substeps: int = 1) -> RoverState:
        for _ in range(substeps):
            self.state = step(self.state, targets, self.terrain, self.rover_cfg,
                              self.gains, self.dt)
            if self.step_listener is not None:
                self.step_listener(self)
        return self.state

    def step_control(self, targets: WheelTargets) -> RoverState:
        return self.step_physics(targets, CONTROL_SUBSTEPS)

    @property
    def control_dt(self) -> float:
        return self.dt * CONTROL_SUBSTEPS

    # --- queries --------------------------------------------------------------
    def target_position(self, kind: str) -> tuple[float, float]:
        for o in self.objects:
            if o.kind == kind:
                return o.position
        raise KeyError(kind)

    def distance_to(self, kind: str) -> float:
        tx, ty = self.target_position(kind)
        x, y, _ = self.state.position
        return math.hypot(tx - x, ty - y)

    def bearing_error(self, kind: str) -> float:
        """Signed angle from the rover heading to the target, in (-pi, pi]."""
        tx, ty = self.target_position(kind)
        x, y, _ = self.state.position
        bearing = math.atan2(ty - y, tx - x)
        err = bearing - self.state.heading
        while err > math.pi:
            err -= 2 * math.pi
        while err <= -math.pi:
            err += 2 * math.pi
        return err

    def heading_error(self, kind: str) -> float:
        """|angle| between heading and target direction, in [0, pi]."""
        return abs(self.bearing_error(kind))

    def stopped(self, threshold: float = 0.05) -> bool:
        return abs(self.state.body_velocity) < threshold

    def visible(self, kind: str) -> bool:
        return target_visible(self.state, kind, self.objects, self.terrain,
                              self.rover_cfg.camera)

    def render(self, cfg: CameraConfig | None = None) -> np.ndarray:
        return render_camera(self.state, self.objects, self.terrain, self.sun,
                             cfg or self.rover_cfg.camera)
