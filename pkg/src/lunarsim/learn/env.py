"""Drive-skill RL environment over the navigation world.

Action: 2 values in [-1, 1] -> (curvature = a0 * kappa_max,
speed = max(0, a1) * v_max). Control runs at 5 Hz over the 50 Hz physics.

Observation modes:
    feature  flat vector, image replaced by [distance/25, sin b, cos b]
    gray64   64x64 grayscale image + stacked proprioceptive vector
    rgb128   128x128 RGB image + stacked proprioceptive vector
The non-visual part is stacked over the last two control steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..control import AckermannCommand, ackermann_solve
from ..terrain import RegolithParams
from ..vehicle import CameraConfig, RoverConfig
from ..world import CONTROL_SUBSTEPS, NavWorld
from .reward import RewardConfig, StepContext, Terminal, compute_reward

DISTANCE_SCALE = 10.0   # distance normalization (m per unit feature)
STOP_SPEED = 0.05       # m/s: "stopped" threshold for success


class StepBeforeReset(Exception):
    pass


@dataclass(frozen=True)
class EnvConfig:
    mode: str = "feature"             # feature | gray64 | rgb128
    v_max: float = 1.0                # m/s
    kappa_max: float = 0.5            # 1/m
    spawn_distance: tuple[float, float] = (6.0, 25.0)
    timeout_steps: int = 2000         # control steps
    distance_scale: float = DISTANCE_SCALE
    target: str = "Rock"
    extent: tuple[float, float] = (70.0, 70.0)
    cell_size: float = 0.5
    reward: RewardConfig = field(default_factory=RewardConfig)

    def __post_init__(self):
        if self.mode not in ("feature", "gray64", "rgb128"):
            raise ValueError(f"unknown observation mode {self.mode!r}")


@dataclass(frozen=True)
class Transition:
    obs: object
    reward: float
    done: bool
    info: dict


def _frame_vector(world: NavWorld, target: str, prev_action: np.ndarray,
                  mode: str, distance_scale: float = DISTANCE_SCALE) -> np.ndarray:
    s = world.state
    parts = []
    if mode == "feature":
        d = world.distance_to(target)
        b = world.bearing_error(target)
        parts.extend([d / distance_scale, math.sin(b), math.cos(b)])
    parts.extend(s.steer_angles)
    parts.append(s.body_velocity)
    parts.extend(prev_action)
    return np.asarray(parts, dtype=np.float32)


class DriveEnv:
    """One rover, one target; episodes end on stop-in-radius, heading
    failure, or timeout."""

    def __init__(self, cfg: EnvConfig | None = None, seed: int = 0):
        self.cfg = cfg or EnvConfig()
        self._rng = np.random.default_rng(seed)
        self.world: NavWorld | None = None
        self._prev_action = np.zeros(2, dtype=np.float32)
        self._prev_frame: np.ndarray | None = None
        self._steps = 0

    # --- spaces --------------------------------------------------------------
    @property
    def observation_size(self) -> int:
        """Flat vector length in feature mode; vector part otherwise."""
        per_frame = (3 if self.cfg.mode == "feature" else 0) + 4 + 1 + 2
        return 2 * per_frame

    @property
    def action_size(self) -> int:
        return 2

    def image_shape(self) -> tuple | None:
        if self.cfg.mode == "gray64":
            return (64, 64)
        if self.cfg.mode == "rgb128":
            return (128, 128, 3)
        return None

    # --- lifecycle -------------------------------------------------------------
    def reset(self, seed: int | None = None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        rng = self._rng
        cfg = self.cfg
        lo, hi = cfg.spawn_distance
        distance = float(rng.uniform(lo, hi))
        angle = float(rng.uniform(-math.pi, math.pi))
        # heading offset strictly inside the failure cone
        theta0 = float(rng.uniform(-(cfg.reward.fail_angle - 0.02),
                                   cfg.reward.fail_angle - 0.02))
        target_xy = (0.0, 0.0)
        spawn_x = target_xy[0] + distance * math.cos(angle)
        spawn_y = target_xy[1] + distance * math.sin(angle)
        bearing = math.atan2(target_xy[1] - spawn_y, target_xy[0] - spawn_x)
        heading = bearing + theta0

        self.world = NavWorld.create(
            extent=cfg.extent, cell_size=cfg.cell_size,
            regolith=RegolithParams(),
            target_positions={cfg.target: target_xy},
            spawn=(spawn_x, spawn_y, heading))
        self._prev_action = np.zeros(2, dtype=np.float32)
        self._prev_frame = None
        self._steps = 0
        return self._observation()

    def step(self, action: np.ndarray) -> Transition:
        if self.world is None:
            raise StepBeforeReset("call reset() before step()")
        cfg = self.cfg
        a = np.clip(np.asarray(action, dtype=np.float32), -1.0, 1.0)
        curvature = float(a[0]) * cfg.kappa_max
        speed = max(0.0, float(a[1])) * cfg.v_max
        targets = ackermann_solve(AckermannCommand(curvature, speed),
                                  self.world.rover_cfg)

        d_prev = self.world.distance_to(cfg.target)
        self.world.step_physics(targets, CONTROL_SUBSTEPS)
        self._steps += 1
        d_curr = self.world.distance_to(cfg.target)
        theta = self.world.heading_error(cfg.target)

        terminal = Terminal.NONE
        info: dict = {}
        done = False
        if d_curr <= cfg.reward.success_radius and self.world.stopped(STOP_SPEED):
            terminal = Terminal.SUCCESS
            info["success"] = True
            done = True
        elif theta > cfg.reward.fail_angle:
            terminal = Terminal.FAIL
            info["fail"] = "heading"
            done = True
        elif self._steps >= cfg.timeout_steps:
            info["timeout"] = True
            done = True

        ctx = StepContext(d_prev=d_prev, d_curr=d_curr, theta=theta,
                          action=a, prev_action=self._prev_action.copy())
        reward = compute_reward(ctx, cfg.reward, terminal)
        self._prev_action = a
        obs = self._observation()
        return Transition(obs=obs, reward=float(reward), done=done, info=info)

    # --- observations ---------------------------------------------------------
    def _observation(self):
        frame = _frame_vector(self.world, self.cfg.target, self._prev_action,
                              self.cfg.mode, self.cfg.distance_scale)
        prev = self._prev_frame if self._prev_frame is not None else frame
        stacked = np.concatenate([frame, prev]).astype(np.float32)
        self._prev_frame = frame
        if self.cfg.mode == "feature":
            return stacked
        cam = CameraConfig(width=64, height=64, channels="gray") \
            if self.cfg.mode == "gray64" else CameraConfig()
        img = self.world.render(cam).astype(np.float32) / 255.0
        return {"image": img, "vector": stacked}
