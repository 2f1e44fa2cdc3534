"""Heightfield terrain: craters, sampling, excavation ledger, slip."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lunarsim.terrain import (CraterOutsideExtent, Heightfield,
                              LOSS_FREE_REGOLITH, OutOfBounds, RegolithParams,
                              SunConfig, generate_terrain)


def flat(extent=(20.0, 20.0), cell=0.25, regolith=None):
    return generate_terrain(extent, cell, regolith=regolith)


# --- generation ---------------------------------------------------------------

def test_zero_craters_zero_noise_all_flat():
    hf = flat()
    assert np.all(hf.heights == 0.0)


def test_crater_depth_at_center():
    # oracle: the radial profile evaluates to -depth at r=0
    hf = generate_terrain((20, 20), 0.25, craters=[((3.0, -2.0), 2.0, 0.5)])
    assert hf.height_at(3.0, -2.0) == pytest.approx(-0.5, abs=1e-9)


def test_crater_rim_profile():
    # rim is 0.2*depth at the radius, decaying to zero at 1.5x radius
    hf = generate_terrain((40, 40), 0.25, craters=[((0.0, 0.0), 4.0, 1.0)])
    assert hf.height_at(4.0, 0.0) == pytest.approx(0.2, abs=1e-9)
    assert hf.height_at(6.0, 0.0) == pytest.approx(0.0, abs=1e-9)
    assert hf.height_at(5.0, 0.0) == pytest.approx(0.1, abs=1e-9)


def test_same_seed_identical_grids():
    a = generate_terrain((20, 20), 0.5, seed=9, noise_amplitude=0.03)
    b = generate_terrain((20, 20), 0.5, seed=9, noise_amplitude=0.03)
    assert a.heights.tobytes() == b.heights.tobytes()


def test_different_seed_differs():
    a = generate_terrain((20, 20), 0.5, seed=1, noise_amplitude=0.03)
    b = generate_terrain((20, 20), 0.5, seed=2, noise_amplitude=0.03)
    assert not np.array_equal(a.heights, b.heights)


def test_crater_outside_extent_rejected():
    with pytest.raises(CraterOutsideExtent):
        generate_terrain((10, 10), 0.25, craters=[((50.0, 0.0), 2.0, 0.5)])


def test_crater_preconditions():
    with pytest.raises(ValueError):
        generate_terrain((10, 10), 0.25, craters=[((0, 0), 0.4, 0.1)])
    with pytest.raises(ValueError):
        generate_terrain((10, 10), 0.25, craters=[((0, 0), 2.0, 3.0)])


# --- sampling ------------------------------------------------------------------

def test_flat_sample():
    hf = flat()
    h, n = hf.sample(1.234, -3.21)
    assert h == 0.0
    assert np.allclose(n, [0, 0, 1])


def test_ramp_normal_tilt():
    # analytic plane: slope 10 degrees along +x
    slope = math.tan(math.radians(10))
    hf = generate_terrain((20, 20), 0.25, slope=(slope, 0.0))
    _, n = hf.sample(0.7, 0.3)
    tilt = math.degrees(math.acos(float(n[2])))
    assert tilt == pytest.approx(10.0, abs=0.1)


def test_corner_query_exact():
    hf = generate_terrain((10, 10), 0.25, seed=4, noise_amplitude=0.03)
    iy, ix = 7, 11
    x = hf.origin[0] + ix * hf.cell_size
    y = hf.origin[1] + iy * hf.cell_size
    assert hf.height_at(x, y) == hf.heights[iy, ix]


def test_out_of_bounds():
    hf = flat()
    with pytest.raises(OutOfBounds):
        hf.sample(1000.0, 0.0)


# --- excavation -----------------------------------------------------------------

def test_excavate_mass_by_hand():
    # 0.5 m square footprint aligned to cover 4 cells of 0.25 m:
    # volume = 0.25 m^2 * 0.1 m, mass = 0.025 * 1500 = 37.5 kg
    hf = flat(cell=0.25)
    x = hf.origin[0] + 10 * 0.25 + 0.125
    y = hf.origin[1] + 10 * 0.25 + 0.125
    removed = hf.excavate(x, y, 0.1, bucket_capacity=1000.0)
    assert removed == pytest.approx(37.5, rel=1e-12)
    assert hf.removed_mass == pytest.approx(37.5, rel=1e-12)


def test_excavate_capacity_clamp_proportional():
    hf = flat(cell=0.25)
    x = hf.origin[0] + 10 * 0.25 + 0.125
    y = hf.origin[1] + 10 * 0.25 + 0.125
    removed = hf.excavate(x, y, 0.1, bucket_capacity=10.0)
    assert removed == pytest.approx(10.0, rel=1e-12)
    # heights lowered proportionally: depth = 0.1 * (10/37.5)
    expected_depth = 0.1 * 10.0 / 37.5
    dug = hf.heights.min()
    assert dug == pytest.approx(-expected_depth, rel=1e-9)


def test_excavate_zero_depth_noop():
    hf = flat()
    before = hf.heights.copy()
    assert hf.excavate(0.0, 0.0, 0.0, 100.0) == 0.0
    assert np.array_equal(hf.heights, before)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-4, 4), st.floats(-4, 4),
                          st.floats(0.01, 0.3), st.floats(1.0, 200.0)),
                min_size=1, max_size=8))
def test_mass_ledger_over_sequences(ops):
    hf = flat(extent=(12, 12), cell=0.25)
    m0 = hf.cell_mass()
    total = 0.0
    for (x, y, depth, cap) in ops:
        total += hf.excavate(x, y, depth, cap)
    m1 = hf.cell_mass()
    assert np.all(np.isfinite(hf.heights))
    assert total == pytest.approx(hf.removed_mass, rel=1e-9, abs=1e-9)
    assert m0 - m1 == pytest.approx(total, rel=1e-6, abs=1e-6)


# --- slip / rolling resistance ----------------------------------------------------

def test_flat_slip_zero():
    hf = flat()
    slip, rr = hf.slip_at(0, 0, 0.7)
    assert slip == 0.0
    assert rr == pytest.approx(0.02 + 0.05 * 0.3)


def test_slip_clamped_at_friction_angle():
    reg = RegolithParams()
    slope = math.tan(reg.internal_friction)
    hf = generate_terrain((20, 20), 0.25, slope=(slope, 0.0), regolith=reg)
    slip, _ = hf.slip_at(0, 0, 0.0)  # heading straight uphill
    assert slip == pytest.approx(0.9)


def test_downhill_slip_zero():
    hf = generate_terrain((20, 20), 0.25, slope=(0.3, 0.0))
    slip, _ = hf.slip_at(0, 0, math.pi)  # heading downhill
    assert slip == 0.0


def test_rolling_resistance_formula():
    reg = RegolithParams(compression_index=1.0)
    hf = flat(regolith=reg)
    _, rr = hf.slip_at(0, 0, 0.0)
    assert rr == pytest.approx(0.07)


def test_loss_free_preset():
    hf = flat(regolith=LOSS_FREE_REGOLITH)
    slip, rr = hf.slip_at(0, 0, 0.0)
    assert slip == 0.0 and rr == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.6), st.floats(0.0, 0.6))
def test_slip_monotone_in_uphill_slope(s1, s2):
    lo, hi = sorted((s1, s2))
    reg = RegolithParams()
    hf_lo = generate_terrain((10, 10), 0.25, slope=(lo, 0.0), regolith=reg)
    hf_hi = generate_terrain((10, 10), 0.25, slope=(hi, 0.0), regolith=reg)
    assert hf_lo.slip_at(0, 0, 0.0)[0] <= hf_hi.slip_at(0, 0, 0.0)[0] + 1e-12


# --- config validation / serialization ------------------------------------------

def test_regolith_invariants():
    with pytest.raises(ValueError):
        RegolithParams(internal_friction=2.0)
    with pytest.raises(ValueError):
        RegolithParams(mass_density=-1)
    with pytest.raises(ValueError):
        RegolithParams(cohesion=-1)


def test_sun_elevation_range():
    with pytest.raises(ValueError):
        SunConfig(elevation=-0.1)


def test_json_round_trip():
    hf = generate_terrain((10, 10), 0.5, seed=3, noise_amplitude=0.02,
                          craters=[((1.0, 1.0), 1.5, 0.3)])
    hf.excavate(0.0, 0.0, 0.05, 50.0)
    clone = Heightfield.from_dict(hf.to_dict())
    assert np.array_equal(clone.heights, hf.heights)
    assert clone.removed_mass == hf.removed_mass
    assert clone.regolith == hf.regolith
