"""Quasi-static kinematic model of the six-wheel rocker-bogie rover.

The body twist each step is the least-squares fit to the six wheel contact
velocities (rolling speed along the steered direction, scaled by (1-slip)
and (1-rolling_resistance)); pose integrates with explicit Euler and the
suspension solve re-conforms z/attitude to the terrain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..control import (ActuatorRates, PDGains, WheelState, WheelTargets,
                       pd_update)
from ..terrain import Heightfield


class SolveFailed(Exception):
    def __init__(self, residual: float):
        super().__init__(f"suspension solve residual {residual:.3e} m")


@dataclass(frozen=True)
class CameraConfig:
    width: int = 128
    height: int = 128
    horizontal_fov: float = math.radians(90.0)
    mount_height: float = 1.2
    channels: str = "rgb"  # "rgb" | "gray"

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("camera resolution must be at least 16x16")
        if self.channels not in ("rgb", "gray"):
            raise ValueError("channels must be rgb or gray")


@dataclass(frozen=True)
class RoverConfig:
    """Geometry is desk-scale configuration, not a published design."""
    corner_wheel_positions: tuple = ((1.0, 0.8), (1.0, -0.8), (-1.0, 0.8), (-1.0, -0.8))
    middle_wheel_positions: tuple = ((0.0, 0.85), (0.0, -0.85))
    wheel_radius: float = 0.15
    max_wheel_speed: float = 12.0      # rad/s
    max_steer_angle: float = 1.2       # rad
    max_steer_rate: float = 2.0        # rad/s
    max_speed_rate: float = 40.0       # rad/s^2
    # rocker-bogie linkage, per side (x, z) in the body frame
    rocker_pivot: tuple = (0.4, 0.0)
    bogie_pivot: tuple = (-0.4, -0.1)
    mount_drop: float = 0.3            # wheel mount depth below body origin
    camera: CameraConfig = field(default_factory=CameraConfig)

    def __post_init__(self):
        if self.wheel_radius <= 0:
            raise ValueError("wheel_radius must be positive")
        xs = sorted(p[0] for p in self.corner_wheel_positions)
        ys = sorted(p[1] for p in self.corner_wheel_positions)
        if not (math.isclose(xs[0], -xs[3]) and math.isclose(xs[1], -xs[2])
                and math.isclose(ys[0], -ys[3]) and math.isclose(ys[1], -ys[2])):
            raise ValueError("corner wheels must be symmetric about both body axes")

    # wheel order: FL FR ML MR RL RR; steer index for corners, None for middles
    def wheel_layout(self):
        c = self.corner_wheel_positions
        m = self.middle_wheel_positions
        return (
            (c[0][0], c[0][1], 0, "left"),
            (c[1][0], c[1][1], 1, "right"),
            (m[0][0], m[0][1], None, "left"),
            (m[1][0], m[1][1], None, "right"),
            (c[2][0], c[2][1], 2, "left"),
            (c[3][0], c[3][1], 3, "right"),
        )

    @property
    def max_rim_speed(self) -> float:
        return self.max_wheel_speed * self.wheel_radius


@dataclass(frozen=True)
class RoverState:
    position: tuple[float, float, float]
    heading: float
    pitch: float = 0.0
    roll: float = 0.0
    rocker_angles: tuple[float, float] = (0.0, 0.0)   # (left, right); right = -left
    bogie_angles: tuple[float, float] = (0.0, 0.0)
    steer_angles: tuple[float, float, float, float] = (0.0,) * 4
    wheel_speeds: tuple[float, ...] = (0.0,) * 6
    prev_steer_err: tuple[float, float, float, float] = (0.0,) * 4
    prev_speed_err: tuple[float, ...] = (0.0,) * 6
    body_velocity: float = 0.0
    yaw_rate: float = 0.0
    time: float = 0.0
    out_of_bounds: bool = False


def _rot_xz(dx: float, dz: float, angle: float) -> tuple[float, float]:
    c, s = math.cos(angle), math.sin(angle)
    return dx * c + dz * s, -dx * s + dz * c


def wheel_mounts_body(cfg: RoverConfig, rocker_left: float,
                      bogie_left: float, bogie_right: float):
    """Body-frame (x, y, z) wheel mount points for the given linkage angles.

    The differential bar forces rocker_right = -rocker_left.
    """
    px, pz = cfg.rocker_pivot
    bx, bz = cfg.bogie_pivot
    drop = cfg.mount_drop
    layout = cfg.wheel_layout()
    front_arm = (layout[0][0] - px, -drop - pz)
    bogie_arm = (bx - px, bz - pz)
    mid_arm = (layout[2][0] - bx, -drop - bz)
    rear_arm = (layout[4][0] - bx, -drop - bz)

    mounts = []
    for i, (x, y, _steer, side) in enumerate(layout):
        rho = rocker_left if side == "left" else -rocker_left
        beta = bogie_left if side == "left" else bogie_right
        if i < 2:                   # front wheels hang off the rocker
            ax, az = _rot_xz(*front_arm, rho)
            mounts.append((px + ax, y, pz + az))
        else:                       # middle/rear wheels ride the bogie
            bpx, bpz = _rot_xz(*bogie_arm, rho)
            arm = mid_arm if i < 4 else rear_arm
            ax, az = _rot_xz(*arm, rho + beta)
            mounts.append((px + bpx + ax, y, pz + bpz + az))
    return mounts


def _body_rotation(heading: float, pitch: float, roll: float):
    """Row-major R = Rz(heading) @ Ry(pitch) @ Rx(roll)."""
    cy, sy = math.cos(heading), math.sin(heading)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return (
        (cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr),
        (sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr),
        (-sp, cp * sr, cp * cr),
    )


def _apply(rot, p):
    return (rot[0][0] * p[0] + rot[0][1] * p[1] + rot[0][2] * p[2],
            rot[1][0] * p[0] + rot[1][1] * p[1] + rot[1][2] * p[2],
            rot[2][0] * p[0] + rot[2][1] * p[1] + rot[2][2] * p[2])


def suspension_residuals(u, cfg: RoverConfig, terrain: Heightfield,
                         x: float, y: float, heading: float):
    """Wheel-terrain gaps for u = [z, pitch, roll, rocker_l, bogie_l, bogie_r]."""
    z, pitch, roll, rho, bl, br = u
    rot = _body_rotation(heading, pitch, roll)
    mounts = wheel_mounts_body(cfg, rho, bl, br)
    gaps = []
    for m in mounts:
        wx, wy, wz = _apply(rot, m)
        px, py, pz = x + wx, y + wy, z + wz
        h, n = terrain.sample(px, py)
        gaps.append((pz - h) * float(n[2]) - cfg.wheel_radius)
    return gaps


def suspension_solve(cfg: RoverConfig, terrain: Heightfield, x: float, y: float,
                     heading: float, guess=None, tol: float = 1e-9,
                     max_iter: int = 60):
    """Solve [z, pitch, roll, rocker_l, bogie_l, bogie_r] for wheel contact.

    Newton iteration with a numeric Jacobian; the differential-bar
    constraint (rocker_right = -rocker_left) is built into the
    parameterization. Raises SolveFailed on terrain the linkage cannot span.
    """
    u = list(guess) if guess is not None else [cfg.wheel_radius + cfg.mount_drop,
                                               0.0, 0.0, 0.0, 0.0, 0.0]
    r = suspension_residuals(u, cfg, terrain, x, y, heading)
    if max(abs(v) for v in r) < tol:
        return tuple(u)
    eps = 1e-7
    for _ in range(max_iter):
        r = suspension_residuals(u, cfg, terrain, x, y, heading)
        err = max(abs(v) for v in r)
        if err < tol:
            return tuple(u)
        jac = []
        for k in range(6):
            up = list(u)
            up[k] += eps
            rp = suspension_residuals(up, cfg, terrain, x, y, heading)
            jac.append([(rp[i] - r[i]) / eps for i in range(6)])
        # solve J^T (column-major jac) * du = r via Gaussian elimination
        a = [[jac[k][i] for k in range(6)] + [r[i]] for i in range(6)]
        du = _gauss_solve(a)
        if du is None:
            break
        # backtracking keeps the iteration stable on sharp terrain features
        step = 1.0
        for _ in range(8):
            trial = [u[k] - step * du[k] for k in range(6)]
            rt = suspension_residuals(trial, cfg, terrain, x, y, heading)
            if max(abs(v) for v in rt) < err:
                u = trial
                break
            step *= 0.5
        else:
            break
    r = suspension_residuals(u, cfg, terrain, x, y, heading)
    err = max(abs(v) for v in r)
    if err >= tol:
        raise SolveFailed(err)
    return tuple(u)


def _gauss_solve(a):
    """In-place Gaussian elimination on a 6x7 augmented matrix."""
    n = 6
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
        if abs(a[pivot][col]) < 1e-14:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1.0 / a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] * inv
            if f != 0.0:
                for c in range(col, n + 1):
                    a[r][c] -= f * a[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = a[r][n] - sum(a[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / a[r][r]
    return x


def init_state(cfg: RoverConfig, terrain: Heightfield, x: float, y: float,
               heading: float) -> RoverState:
    z, pitch, roll, rho, bl, br = suspension_solve(cfg, terrain, x, y, heading)
    return RoverState(position=(x, y, z), heading=heading, pitch=pitch, roll=roll,
                      rocker_angles=(rho, -rho), bogie_angles=(bl, br))


def _wrap_pi(angle: float) -> float:
    while angle > math.pi:
        angle -= 2 * math.pi
    while angle <= -math.pi:
        angle += 2 * math.pi
    return angle


def step(state: RoverState, targets: WheelTargets, terrain: Heightfield,
         cfg: RoverConfig, gains: PDGains, dt: float) -> RoverState:
    """Advance one fixed physics timestep; deterministic for equal inputs."""
    if not 0.0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1]")

    rates: ActuatorRates = pd_update(
        WheelState(state.steer_angles, state.wheel_speeds,
                   state.prev_steer_err, state.prev_speed_err),
        targets, gains, dt, cfg.max_steer_rate, cfg.max_speed_rate)
    steer = tuple(max(-cfg.max_steer_angle, min(cfg.max_steer_angle,
                  state.steer_angles[i] + rates.steer_rate[i] * dt))
                  for i in range(4))
    speeds = tuple(max(-cfg.max_wheel_speed, min(cfg.max_wheel_speed,
                   state.wheel_speeds[i] + rates.speed_rate[i] * dt))
                   for i in range(6))

    x, y, z = state.position
    heading = state.heading
    ch, sh = math.cos(heading), math.sin(heading)
    layout = cfg.wheel_layout()

    # wheel contact velocities -> body twist by least squares
    a00 = a01 = a02 = a11 = a12 = a22 = 0.0
    b0 = b1 = b2 = 0.0
    for i, (wx, wy, steer_idx, _side) in enumerate(layout):
        delta = steer[steer_idx] if steer_idx is not None else 0.0
        w = speeds[i]
        gx = x + wx * ch - wy * sh
        gy = y + wx * sh + wy * ch
        if not terrain.contains(gx, gy):
            slip, rr = 0.0, 0.0
        else:
            travel = heading + delta + (0.0 if w >= 0 else math.pi)
            slip, rr = terrain.slip_at(gx, gy, travel)
        s = w * cfg.wheel_radius * (1.0 - slip) * (1.0 - rr)
        dx, dy = math.cos(delta), math.sin(delta)
        # rows [1,0,-wy; 0,1,wx] accumulate into the 3x3 normal equations
        a00 += 1.0
        a02 += -wy
        a11 += 1.0
        a12 += wx
        a22 += wy * wy + wx * wx
        b0 += s * dx
        b1 += s * dy
        b2 += -wy * s * dx + wx * s * dy
    # symmetric 3x3 solve (a01 stays zero by construction)
    det = (a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02)
           + a02 * (a01 * a12 - a11 * a02))
    if abs(det) < 1e-12:
        vx = vy = omega = 0.0
    else:
        vx = ((a11 * a22 - a12 * a12) * b0 + (a02 * a12 - a01 * a22) * b1
              + (a01 * a12 - a02 * a11) * b2) / det
        vy = ((a12 * a02 - a01 * a22) * b0 + (a00 * a22 - a02 * a02) * b1
              + (a01 * a02 - a00 * a12) * b2) / det
        omega = ((a01 * a12 - a02 * a11) * b0 + (a01 * a02 - a00 * a12) * b1
                 + (a00 * a11 - a01 * a01) * b2) / det

    # teleport guard: body speed can never exceed the wheel rim speed
    vmag = math.hypot(vx, vy)
    if vmag > cfg.max_rim_speed:
        scale = cfg.max_rim_speed / vmag
        vx *= scale
        vy *= scale

    nx = x + (vx * ch - vy * sh) * dt
    ny = y + (vx * sh + vy * ch) * dt
    new_heading = _wrap_pi(heading + omega * dt)
    # freeze the pose rather than run the suspension off the terrain edge
    nch, nsh = math.cos(new_heading), math.sin(new_heading)
    out_of_bounds = any(
        not terrain.contains(nx + wx * nch - wy * nsh, ny + wx * nsh + wy * nch)
        for (wx, wy, _si, _side) in layout)
    if out_of_bounds:
        nx, ny, new_heading = x, y, heading

    guess = (z, state.pitch, state.roll, state.rocker_angles[0],
             state.bogie_angles[0], state.bogie_angles[1])
    nz, pitch, roll, rho, bl, br = suspension_solve(
        cfg, terrain, nx, ny, new_heading, guess=guess)

    return replace(state,
                   position=(nx, ny, nz), heading=new_heading, pitch=pitch,
                   roll=roll, rocker_angles=(rho, -rho), bogie_angles=(bl, br),
                   steer_angles=steer, wheel_speeds=speeds,
                   prev_steer_err=rates.steer_err, prev_speed_err=rates.speed_err,
                   body_velocity=vx, yaw_rate=omega, time=state.time + dt,
                   out_of_bounds=out_of_bounds)
