"""Ackermann geometry, pivot solution, PD tracking."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lunarsim.control import (AckermannCommand, CurvatureTooTight, PDGains,
                              WheelState, WheelTargets, ackermann_solve,
                              pd_update, pivot_solve)
from lunarsim.vehicle import RoverConfig

CFG = RoverConfig()
LAYOUT = CFG.wheel_layout()


def wheel_xy(i):
    return LAYOUT[i][0], LAYOUT[i][1]


# --- ackermann -----------------------------------------------------------------

def test_straight_line_limit():
    t = ackermann_solve(AckermannCommand(0.0, 1.0), CFG)
    assert t.steer == (0.0,) * 4
    assert all(w == pytest.approx(1.0 / 0.15) for w in t.speed)


def test_five_meter_left_turn_by_hand():
    # oracle: planar turning-center geometry, center at (0, 5)
    t = ackermann_solve(AckermannCommand(0.2, 1.0), CFG)
    assert t.steer[0] == pytest.approx(math.atan2(1.0, 4.2), abs=1e-12)
    assert t.steer[1] == pytest.approx(math.atan2(1.0, 5.8), abs=1e-12)
    # rear wheels counter-steer
    assert t.steer[2] == pytest.approx(-t.steer[0])
    assert t.steer[3] == pytest.approx(-t.steer[1])


def test_mirrored_curvature_symmetry():
    t = ackermann_solve(AckermannCommand(0.2, 1.0), CFG)
    m = ackermann_solve(AckermannCommand(-0.2, 1.0), CFG)
    # left/right mirror: FL <-> FR, RL <-> RR, ML <-> MR, angles negated
    assert m.steer[0] == pytest.approx(-t.steer[1])
    assert m.steer[1] == pytest.approx(-t.steer[0])
    assert m.speed[0] == pytest.approx(t.speed[1])
    assert m.speed[2] == pytest.approx(t.speed[3])
    assert m.speed[4] == pytest.approx(t.speed[5])


def test_curvature_too_tight():
    tight = RoverConfig(max_steer_angle=0.2)
    with pytest.raises(CurvatureTooTight):
        ackermann_solve(AckermannCommand(0.5, 1.0), tight)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.1, 1.5))
def test_tangency_and_speed_ratio(curvature, speed):
    # every wheel's commanded velocity is perpendicular to its radius from
    # the turning center; rim speeds scale with the turning radii
    t = ackermann_solve(AckermannCommand(curvature, speed), CFG)
    if abs(curvature) < 1e-12:
        return
    yc = 1.0 / curvature
    for i, (x, y, si, _) in enumerate(LAYOUT):
        delta = t.steer[si] if si is not None else 0.0
        w = t.speed[i]
        vx, vy = math.cos(delta) * w, math.sin(delta) * w
        assert abs(vx * x + vy * (y - yc)) < 1e-9
    d0 = math.hypot(LAYOUT[0][0], yc - LAYOUT[0][1])
    d3 = math.hypot(LAYOUT[5][0], yc - LAYOUT[5][1])
    assert abs(t.speed[0] / t.speed[5]) == pytest.approx(d0 / d3, abs=1e-9)


def test_continuity_at_zero_curvature():
    prev = ackermann_solve(AckermannCommand(0.0, 1.0), CFG)
    for kappa in (1e-3, 1e-5, 1e-7):
        t = ackermann_solve(AckermannCommand(kappa, 1.0), CFG)
        assert max(abs(s) for s in t.steer) < 2 * kappa
        assert max(abs(a - b) for a, b in zip(t.speed, prev.speed)) < 2e-2


# --- pivot ------------------------------------------------------------------------

def test_pivot_corner_wheel_geometry():
    # oracle: tangency at (1.0, 0.8) -> atan2(1.0, -0.8) wrapped into
    # (-pi/2, pi/2] flips the rolling direction
    t = pivot_solve("ccw", 0.3, CFG)
    raw = math.atan2(1.0, -0.8)
    assert t.steer[0] == pytest.approx(raw - math.pi, abs=1e-12)
    assert t.steer[0] == pytest.approx(-0.8961, abs=1e-4)
    assert t.speed[0] < 0  # speed sign flipped by the wrap


def test_pivot_middle_wheels_opposite():
    t = pivot_solve("ccw", 0.3, CFG)
    ml, mr = t.speed[2], t.speed[3]
    assert ml == pytest.approx(-mr)
    assert ml < 0 < mr
    # rim speed = rate x distance from origin
    assert abs(ml) == pytest.approx(0.3 * 0.85 / 0.15)


def test_pivot_cw_mirrors_ccw():
    ccw = pivot_solve("ccw", 0.3, CFG)
    cw = pivot_solve("cw", 0.3, CFG)
    assert cw.steer == ccw.steer
    assert all(a == pytest.approx(-b) for a, b in zip(cw.speed, ccw.speed))


def test_pivot_rate_positive_required():
    with pytest.raises(ValueError):
        pivot_solve("ccw", 0.0, CFG)


# --- pd -----------------------------------------------------------------------------

def zero_state():
    return WheelState(steer=(0.0,) * 4, speed=(0.0,) * 6)


def test_zero_error_zero_actuation():
    rates = pd_update(zero_state(), WheelTargets((0.0,) * 4, (0.0,) * 6),
                      PDGains(), 0.02)
    assert rates.steer_rate == (0.0,) * 4
    assert rates.speed_rate == (0.0,) * 6


def test_first_order_decay_ratio():
    # closed form: err_{n+1} = err_n * (1 - kp*dt) with kd=0
    gains = PDGains(kp_steer=5.0, kd_steer=0.0)
    dt = 0.02
    err = 0.5
    steer = 0.0
    target = WheelTargets((0.5, 0, 0, 0), (0.0,) * 6)
    for _ in range(5):
        state = WheelState((steer, 0, 0, 0), (0.0,) * 6)
        rates = pd_update(state, target, gains, dt)
        steer += rates.steer_rate[0] * dt
        new_err = 0.5 - steer
        assert new_err == pytest.approx(err * (1 - 5 * dt), rel=1e-12)
        err = new_err


def test_rate_clamp_exact():
    gains = PDGains(kp_steer=100.0, kd_steer=0.0)
    rates = pd_update(zero_state(), WheelTargets((1.0, 0, 0, 0), (0.0,) * 6),
                      gains, 0.02, steer_rate_limit=1.5)
    assert rates.steer_rate[0] == 1.5


def test_zero_gains_leave_system_unchanged():
    gains = PDGains(kp_steer=0.0, kd_steer=0.0, kp_speed=0.0, kd_speed=0.0)
    rates = pd_update(zero_state(), WheelTargets((0.7,) * 4, (3.0,) * 6),
                      gains, 0.02)
    assert rates.steer_rate == (0.0,) * 4
    assert rates.speed_rate == (0.0,) * 6


def test_gain_validation():
    with pytest.raises(ValueError):
        PDGains(kp_steer=-1.0)
    with pytest.raises(ValueError):
        PDGains(kd_speed=-0.5)
