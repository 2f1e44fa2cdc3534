"""Behavior-tree semantics and the loading-cycle scenario."""

import numpy as np
import pytest

from lunarsim.coordination import (Action, Condition, CoordinationError,
                                   CrawlerState, ExcavationConfig,
                                   ExcavationWorld, MachineKind, MachineModel,
                                   Repeat, Retry, Selector, Sequence,
                                   SiteOutsideTerrain, Stalled, TickStatus,
                                   bt_tick, build_loading_tree, grade_surface,
                                   metrics_to_csv, run_cycles,
                                   RegionOutsideTerrain)
from lunarsim.terrain import generate_terrain

S, F, R = TickStatus.Success, TickStatus.Failure, TickStatus.Running


def const(status):
    return Action(f"const_{status.value}", lambda w: status)


# --- tick semantics ---------------------------------------------------------------

def test_sequence_truth_table():
    assert bt_tick(Sequence([const(S), const(S)]), None) is S
    assert bt_tick(Sequence([const(S), const(F)]), None) is F
    assert bt_tick(Sequence([const(R), const(F)]), None) is R
    assert bt_tick(Sequence([]), None) is S


def test_selector_truth_table():
    assert bt_tick(Selector([const(F), const(R)]), None) is R
    assert bt_tick(Selector([const(F), const(F)]), None) is F
    assert bt_tick(Selector([const(S), const(F)]), None) is S
    assert bt_tick(Selector([]), None) is F


def test_condition_maps_bool():
    assert bt_tick(Condition("yes", lambda w: True), None) is S
    assert bt_tick(Condition("no", lambda w: False), None) is F


def test_repeat_three_tick_trace():
    # tick-count trace: Running, Running, Success after the 3rd child success
    node = Repeat(3, const(S))
    assert node.tick(None) is R
    assert node.tick(None) is R
    assert node.tick(None) is S
    assert node.tick(None) is R  # counter reset after success


def test_repeat_failure_resets():
    flaky = [S, F]
    node = Repeat(2, Action("flaky", lambda w: flaky.pop(0)))
    assert node.tick(None) is R
    assert node.tick(None) is F


def test_retry_semantics():
    node = Retry(2, const(F))
    assert node.tick(None) is R
    assert node.tick(None) is F  # second failure exhausts the retries
    node2 = Retry(3, const(S))
    assert node2.tick(None) is S


def test_memoryless_sequence_restarts_each_tick():
    visits = []

    def visit(name, status):
        def fn(world):
            visits.append(name)
            return status
        return Action(name, fn)

    seq = Sequence([visit("a", S), visit("b", R)])
    seq.tick(None)
    seq.tick(None)
    assert visits == ["a", "b", "a", "b"]


def test_action_type_check():
    bad = Action("bad", lambda w: True)
    with pytest.raises(TypeError):
        bad.tick(None)


# --- loading scenario ----------------------------------------------------------------

def make_world(slope=0.0, budget_buckets=40.0, bucket=100.0, bed=300.0):
    hf = generate_terrain((60, 40), 0.25, slope=(slope, 0.0))
    ex = MachineModel(MachineKind.Excavator, position=(-10.0, 2.0),
                      capacity=bucket)
    tk = MachineModel(MachineKind.DumpTruck, position=(-2.0, 5.0),
                      capacity=bed)
    return ExcavationWorld(terrain=hf, excavator=ex, truck=tk,
                           dig_site=(-8.0, 0.0), dump_site=(12.0, 0.0),
                           load_point=(-5.0, 0.0),
                           dig_budget=bucket * budget_buckets)


def test_thirty_cycles_flat():
    world = make_world()
    tree = build_loading_tree(world)
    metrics = run_cycles(tree, world, 30)
    assert len(metrics) == 30
    cum_exc = np.cumsum([m.excavated_kg for m in metrics])
    cum_dump = np.cumsum([m.dumped_kg for m in metrics])
    assert np.all(cum_dump <= cum_exc + 1e-9)
    assert world.mass_ledger_error() <= 1e-6


def test_bed_capacity_three_buckets_three_digs_per_haul():
    world = make_world()
    tree = build_loading_tree(world)
    run_cycles(tree, world, 9)
    digs = [e for e in world.events if e["kind"] == "dig"]
    tilts = [e for e in world.events if e["kind"] == "tilt_bed"]
    assert len(digs) >= 9
    # every tilt delivers exactly 3 bucket loads
    for t in tilts:
        assert t["mass_kg"] == pytest.approx(300.0)


def test_dig_site_depleted_falls_back_to_finish():
    world = make_world(budget_buckets=2.0)  # only two scoops available
    tree = build_loading_tree(world)
    with pytest.raises(Stalled):
        run_cycles(tree, world, 30)
    # the partial bed still got delivered by the finish branch
    assert world.dumped_total == pytest.approx(200.0)
    assert world.dig_budget <= 0.0


def test_stalled_on_zero_bucket():
    world = make_world(bucket=0.0, bed=300.0)
    tree = build_loading_tree(world)
    with pytest.raises(Stalled):
        run_cycles(tree, world, 1)


def test_sloped_haul_costs_more_work():
    flat = make_world(slope=0.0)
    run_cycles(build_loading_tree(flat), flat, 30)
    hill = make_world(slope=0.05)
    run_cycles(build_loading_tree(hill), hill, 30)
    w_flat = np.mean([sum(m.work_J.values()) for m in flat.metrics])
    w_hill = np.mean([sum(m.work_J.values()) for m in hill.metrics])
    assert w_hill > w_flat


def test_energy_ledger_monotone():
    world = make_world()
    tree = build_loading_tree(world)
    last = {g: 0.0 for g in world.excavator.energy}
    for _ in range(4000):
        tree.tick(world)
        world.time += world.cfg.tick_dt
        for g in last:
            cur = world.excavator.energy[g] + world.truck.energy[g]
            assert cur >= last[g] - 1e-12
            last[g] = cur
        if len(world.metrics) >= 10:
            break


def test_mass_conservation_every_tick():
    world = make_world()
    tree = build_loading_tree(world)
    for _ in range(6000):
        tree.tick(world)
        world.time += world.cfg.tick_dt
        assert world.mass_ledger_error() <= 1e-6
        if len(world.metrics) >= 12:
            break
    assert len(world.metrics) >= 12


def test_crawler_ordering_encoded():
    world = make_world()
    tree = build_loading_tree(world)
    run_cycles(tree, world, 4)
    # excavator lowered before its first dig; truck raised before hauling
    assert world.excavator.crawlers is CrawlerState.lowered
    tilt_events = [e for e in world.events if e["kind"] == "tilt_bed"]
    assert tilt_events  # a haul happened
    assert world.truck.energy["crawler"] > 0


def test_site_outside_terrain():
    hf = generate_terrain((10, 10), 0.25)
    ex = MachineModel(MachineKind.Excavator, position=(0, 0))
    tk = MachineModel(MachineKind.DumpTruck, position=(0, 1))
    with pytest.raises(SiteOutsideTerrain):
        ExcavationWorld(terrain=hf, excavator=ex, truck=tk,
                        dig_site=(50.0, 0.0), dump_site=(2.0, 0.0),
                        load_point=(1.0, 0.0), dig_budget=100.0)


def test_deterministic_tick_trace():
    def trace():
        world = make_world()
        tree = build_loading_tree(world)
        stats = []
        for _ in range(2000):
            stats.append(tree.tick(world).value)
            world.time += world.cfg.tick_dt
        return stats, world.terrain.heights.tobytes()

    t1, h1 = trace()
    t2, h2 = trace()
    assert t1 == t2
    assert h1 == h2


def test_metrics_csv_shape():
    world = make_world()
    metrics = run_cycles(build_loading_tree(world), world, 5)
    csv = metrics_to_csv(metrics)
    lines = csv.strip().split("\n")
    assert lines[0].startswith("cycle,excavated_kg,dumped_kg,cycle_time_s")
    assert len(lines) == 6


# --- grading -----------------------------------------------------------------------

def test_grade_flat_already_flat():
    hf = generate_terrain((20, 20), 0.25)
    truck = MachineModel(MachineKind.DumpTruck, position=(0, 0))
    dev = grade_surface(truck, (-2, -2, 2, 2), 0.0, hf)
    assert dev == 0.0


def test_grade_bumps_two_passes():
    hf = generate_terrain((20, 20), 0.25)
    rng = np.random.default_rng(3)
    iy0 = iy1 = None
    # 0.1 m bumps inside the region
    ny, nx = hf.heights.shape
    region_mask = np.zeros_like(hf.heights, dtype=bool)
    x0, y0, x1, y1 = -2.0, -2.0, 2.0, 2.0
    for iy in range(ny):
        for ix in range(nx):
            x = hf.origin[0] + ix * hf.cell_size
            y = hf.origin[1] + iy * hf.cell_size
            if x0 <= x <= x1 and y0 <= y <= y1:
                region_mask[iy, ix] = True
    bumps = rng.uniform(0.0, 0.1, size=hf.heights.shape)
    hf.heights[region_mask] += bumps[region_mask]
    hf.heights_changed()
    mass_before = hf.cell_mass()
    truck = MachineModel(MachineKind.DumpTruck, position=(0, 0))
    dev = grade_surface(truck, (x0, y0, x1, y1), 0.0, hf, passes=2)
    assert dev < 0.02
    assert hf.cell_mass() == pytest.approx(mass_before, rel=1e-6)
    assert truck.energy["blade"] > 0


def test_grade_region_needs_margin():
    hf = generate_terrain((10, 10), 0.25)
    truck = MachineModel(MachineKind.DumpTruck, position=(0, 0))
    with pytest.raises(RegionOutsideTerrain):
        grade_surface(truck, (-5.0, -5.0, 5.0, 5.0), 0.0, hf)
    with pytest.raises(RegionOutsideTerrain):
        grade_surface(truck, (-20.0, 0.0, 0.0, 1.0), 0.0, hf)
