"""Skill executors: Drive (policy-driven) and Rotate (pivot program).

Finish/Shutdown/MoreInformation are conversational and live in the
orchestrator; these two move the rover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..control import (AckermannCommand, WheelTargets, ackermann_solve,
                       pivot_solve)
from ..learn.env import DISTANCE_SCALE, STOP_SPEED, _frame_vector
from ..world import NavWorld
from .protocol import SkillResult, Status, Target

SUCCESS_RADIUS = 4.0
DRIVE_DURATION = 20.0       # s of simulated time per Drive invocation
PIVOT_ANGLE = math.radians(60.0)
PIVOT_RATE = 0.3            # rad/s
ROTATE_SUCCESS_MIN = math.radians(50.0)
_V_MAX = 1.0
_KAPPA_MAX = 0.5


def drive_skill(target: Target, duration: float, policy, world: NavWorld,
                v_max: float = _V_MAX, kappa_max: float = _KAPPA_MAX) -> SkillResult:
    """Run the drive policy at control rate for at most `duration` seconds.

    Success means the rover comes to a stop within the success radius;
    anything else is a timeout failure.
    """
    policy.reset()
    prev_action = np.zeros(2, dtype=np.float32)
    prev_frame = None
    steps = max(1, int(round(duration / world.control_dt)))
    for _ in range(steps):
        if (world.distance_to(target.value) <= SUCCESS_RADIUS
                and world.stopped(STOP_SPEED)):
            return SkillResult(Status.Success, f"stopped near {target.value}")
        frame = _frame_vector(world, target.value, prev_action, "feature")
        stacked = np.concatenate([frame, prev_frame if prev_frame is not None else frame])
        prev_frame = frame
        action = np.clip(np.asarray(policy.act(stacked), dtype=np.float32), -1, 1)
        prev_action = action
        cmd = AckermannCommand(float(action[0]) * kappa_max,
                               max(0.0, float(action[1])) * v_max)
        world.step_control(ackermann_solve(cmd, world.rover_cfg))
    # let the rover coast to a stop before judging proximity
    stop = ackermann_solve(AckermannCommand(0.0, 0.0), world.rover_cfg)
    for _ in range(10):
        if world.stopped(STOP_SPEED):
            break
        world.step_control(stop)
    if (world.distance_to(target.value) <= SUCCESS_RADIUS
            and world.stopped(STOP_SPEED)):
        return SkillResult(Status.Success, f"stopped near {target.value}")
    return SkillResult(Status.Fail, "drive timed out before reaching the target")


def rotate_skill(target: Target, world: NavWorld,
                 rate: float = PIVOT_RATE) -> SkillResult:
    """One 60-degree pivot (counter-clockwise), closed loop on heading.

    Success requires at least 50 degrees of realized rotation; less means
    the rover is stuck (for example on full wheel slip).
    """
    cfg = world.rover_cfg
    targets = pivot_solve("ccw", rate, cfg)

    # pre-steer with the wheels stopped so the pivot is clean
    presteer = WheelTargets(steer=targets.steer, speed=(0.0,) * 6)
    presteer_steps = int(round(3.0 / world.control_dt))
    for _ in range(presteer_steps):
        world.step_control(presteer)
        err = max(abs(world.state.steer_angles[i] - targets.steer[i])
                  for i in range(4))
        if err < 0.02:
            break

    turned = 0.0
    prev = world.state.heading

    def advance(wheel_targets) -> None:
        nonlocal turned, prev
        world.step_physics(wheel_targets, 1)
        d = world.state.heading - prev
        while d > math.pi:
            d -= 2 * math.pi
        while d <= -math.pi:
            d += 2 * math.pi
        turned += d
        prev = world.state.heading

    # wheel speeds decay geometrically after the halt command; anticipating
    # that tail keeps the realized pivot on the 60-degree mark
    dt = world.dt
    decay = max(0.0, 1.0 - world.gains.kp_speed * dt)
    spin_down = dt * decay / max(1e-9, 1.0 - decay)

    # 3x the nominal time bounds the attempt when wheels slip
    max_steps = int(round(3.0 * (PIVOT_ANGLE / rate) / dt))
    for _ in range(max_steps):
        advance(targets)
        if abs(turned) + abs(world.state.yaw_rate) * spin_down >= PIVOT_ANGLE:
            break
    # stop the wheels, keep the pivot steer; rotation during spin-down counts
    halt = WheelTargets(steer=targets.steer, speed=(0.0,) * 6)
    for _ in range(int(round(2.0 / dt))):
        advance(halt)
        if abs(world.state.yaw_rate) < 1e-3 and world.stopped(STOP_SPEED):
            break
    if abs(turned) >= ROTATE_SUCCESS_MIN:
        return SkillResult(Status.Success,
                           f"rotated {math.degrees(turned):.1f} degrees")
    return SkillResult(Status.Fail,
                       f"stuck after {math.degrees(turned):.1f} degrees")
