"""Low-level motion control: Ackermann solution, pivot turns, PD tracking.

Wheel ordering convention, used everywhere downstream:
    steer targets  [FL, FR, RL, RR]               (corner wheels)
    speed targets  [FL, FR, ML, MR, RL, RR]       (all six wheels)
with F=front (+x), R=rear (-x), L=left (+y), R=right (-y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class CurvatureTooTight(Exception):
    def __init__(self, steer: float, limit: float):
        super().__init__(f"required steer {steer:.3f} rad exceeds limit {limit:.3f} rad")


@dataclass(frozen=True)
class AckermannCommand:
    """curvature in 1/m (signed, 0 = straight), speed in m/s at body origin."""
    curvature: float
    speed: float


@dataclass(frozen=True)
class WheelTargets:
    steer: tuple[float, float, float, float]
    speed: tuple[float, float, float, float, float, float]


@dataclass(frozen=True)
class WheelState:
    """Current actuator state plus previous errors for the D-term."""
    steer: tuple[float, float, float, float]
    speed: tuple[float, float, float, float, float, float]
    prev_steer_err: tuple[float, float, float, float] = (0.0,) * 4
    prev_speed_err: tuple[float, float, float, float, float, float] = (0.0,) * 6


@dataclass(frozen=True)
class ActuatorRates:
    steer_rate: tuple[float, float, float, float]
    speed_rate: tuple[float, float, float, float, float, float]
    steer_err: tuple[float, float, float, float]
    speed_err: tuple[float, float, float, float, float, float]


@dataclass(frozen=True)
class PDGains:
    """kp in 1/s (rate per unit error), kd dimensionless."""
    kp_steer: float = 5.0
    kd_steer: float = 0.5
    kp_speed: float = 5.0   # first-order speed tracking, tau = 1/kp
    kd_speed: float = 0.0

    def __post_init__(self):
        if self.kp_steer < 0 or self.kp_speed < 0:
            raise ValueError("kp must be non-negative")
        if self.kd_steer < 0 or self.kd_speed < 0:
            raise ValueError("kd must be non-negative")


def _wrap_half(angle: float) -> tuple[float, float]:
    """Normalize a steer angle into (-pi/2, pi/2]; returns (angle, speed sign)."""
    sign = 1.0
    while angle > math.pi / 2:
        angle -= math.pi
        sign = -sign
    while angle <= -math.pi / 2:
        angle += math.pi
        sign = -sign
    return angle, sign


def ackermann_solve(cmd: AckermannCommand, cfg) -> WheelTargets:
    """Per-wheel steer/speed targets for a shared turning center.

    The turning center sits at (0, 1/curvature) in the body frame; every
    wheel's axis passes through it, so wheels roll without lateral scrub.
    Zero curvature is the straight-line limit: zero steer, equal speeds.
    """
    corners = list(cfg.corner_wheel_positions)
    middles = list(cfg.middle_wheel_positions)
    r = cfg.wheel_radius
    if abs(cmd.curvature) < 1e-12:  # straight-line limit, avoids inf/inf
        w = cmd.speed / r
        return WheelTargets(steer=(0.0,) * 4, speed=(w,) * 6)

    yc = 1.0 / cmd.curvature
    steer = []
    for (x, y) in corners:
        angle = math.atan2(x, yc - y)
        angle, _ = _wrap_half(angle)
        if abs(angle) > cfg.max_steer_angle:
            raise CurvatureTooTight(angle, cfg.max_steer_angle)
        steer.append(angle)

    def wheel_speed(x: float, y: float) -> float:
        # velocity = (speed / yc) * distance along the circle tangent; the
        # wrap sign flips rolling direction when the steer angle wrapped
        dist = math.hypot(x, yc - y)
        _, sign = _wrap_half(math.atan2(x, yc - y))
        return sign * cmd.speed * dist / (yc * r)

    speed = (wheel_speed(*corners[0]), wheel_speed(*corners[1]),
             wheel_speed(*middles[0]), wheel_speed(*middles[1]),
             wheel_speed(*corners[2]), wheel_speed(*corners[3]))
    return WheelTargets(steer=tuple(steer), speed=speed)


def pivot_solve(direction: str, rate: float, cfg) -> WheelTargets:
    """Wheel targets for turning in place about the body origin.

    Every wheel's velocity is tangent to its circle around the origin;
    steer angles wrap into (-pi/2, pi/2] with the rolling direction flipped
    when wrapping. direction: "ccw" (+heading) or "cw".
    """
    if rate <= 0:
        raise ValueError("pivot rate must be positive")
    omega = rate if direction == "ccw" else -rate
    r = cfg.wheel_radius

    steer = []
    corner_speed = []
    for (x, y) in cfg.corner_wheel_positions:
        angle, sign = _wrap_half(math.atan2(x, -y))
        steer.append(angle)
        corner_speed.append(sign * omega * math.hypot(x, y) / r)
    middle_speed = [-omega * y / r for (_, y) in cfg.middle_wheel_positions]
    speed = (corner_speed[0], corner_speed[1], middle_speed[0], middle_speed[1],
             corner_speed[2], corner_speed[3])
    return WheelTargets(steer=tuple(steer), speed=speed)


def pd_update(current: WheelState, target: WheelTargets, gains: PDGains,
              dt: float, steer_rate_limit: float = float("inf"),
              speed_rate_limit: float = float("inf")) -> ActuatorRates:
    """PD rates toward the targets; zero gains leave the system unchanged."""
    if dt <= 0:
        raise ValueError("dt must be positive")

    def channel(value, tgt, prev, kp, kd, limit):
        err = tgt - value
        rate = kp * err + kd * (err - prev) / dt
        return max(-limit, min(limit, rate)), err

    steer_rate, steer_err = zip(*(
        channel(current.steer[i], target.steer[i], current.prev_steer_err[i],
                gains.kp_steer, gains.kd_steer, steer_rate_limit)
        for i in range(4)))
    speed_rate, speed_err = zip(*(
        channel(current.speed[i], target.speed[i], current.prev_speed_err[i],
                gains.kp_speed, gains.kd_speed, speed_rate_limit)
        for i in range(6)))
    return ActuatorRates(steer_rate=steer_rate, speed_rate=speed_rate,
                         steer_err=steer_err, speed_err=speed_err)
