"""Excavator/dump-truck loading cycle: world state, behavior tree, metrics.

A digging cycle is Dig -> SwingToTruck -> DumpIntoBed; the truck hauls a
full bed to the dump site every `loads_per_haul` cycles. Mass moves from
terrain to bucket to bed to the dump pile and is conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..terrain import Heightfield
from .bt import Action, BtNode, Condition, Repeat, Selector, Sequence, TickStatus
from .machines import (CrawlerState, G_MOON, MachineKind, MachineModel)


class CoordinationError(Exception):
    pass


class SiteOutsideTerrain(CoordinationError):
    pass


class RegionOutsideTerrain(CoordinationError):
    pass


class Stalled(CoordinationError):
    def __init__(self, time_s: float, cycles_done: int):
        super().__init__(f"no cycle progress by t={time_s:.1f}s "
                         f"({cycles_done} cycles complete)")


@dataclass(frozen=True)
class CycleMetrics:
    cycle: int
    excavated_kg: float
    dumped_kg: float
    cycle_time_s: float
    work_J: dict  # per actuator group

    def csv_row(self) -> str:
        w = self.work_J
        return (f"{self.cycle},{self.excavated_kg:.6f},{self.dumped_kg:.6f},"
                f"{self.cycle_time_s:.3f},{w['arm']:.3f},{w['drive']:.3f},"
                f"{w['crawler']:.3f},{w['bed']:.3f},{w['blade']:.3f}")


CYCLE_CSV_HEADER = ("cycle,excavated_kg,dumped_kg,cycle_time_s,"
                    "arm_J,drive_J,crawler_J,bed_J,blade_J")


def metrics_to_csv(rows: list[CycleMetrics]) -> str:
    return "\n".join([CYCLE_CSV_HEADER] + [r.csv_row() for r in rows]) + "\n"


@dataclass(frozen=True)
class ExcavationConfig:
    # deep enough that the bucket-capacity clamp makes every scoop exactly
    # one full bucket (heights lower proportionally, mass stays exact)
    dig_depth_per_scoop: float = 0.15     # m toward which each dig lowers
    lift_height: float = 2.0              # m the arm raises a full bucket
    swing_height: float = 0.5             # m equivalent lift during the swing
    tilt_height: float = 0.5              # m the bed raises its load
    crawler_energy: float = 400.0         # J per lower/raise transition
    tilt_fixed_energy: float = 200.0      # J per bed tilt
    dig_time: float = 4.0
    swing_time: float = 3.0
    dump_time: float = 2.0
    crawler_time: float = 2.0
    tilt_time: float = 3.0
    arrive_tol: float = 0.3               # m
    tick_dt: float = 0.2                  # s, control rate


@dataclass
class ExcavationWorld:
    terrain: Heightfield
    excavator: MachineModel
    truck: MachineModel
    dig_site: tuple[float, float]
    dump_site: tuple[float, float]
    load_point: tuple[float, float]
    dig_budget: float                     # kg still allowed out of the site
    cfg: ExcavationConfig = field(default_factory=ExcavationConfig)
    time: float = 0.0
    dumped_total: float = 0.0
    arm_at_truck: bool = False
    metrics: list[CycleMetrics] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    _initial_mass: float = 0.0
    _cycle_start_time: float = 0.0
    _cycle_excavated: float = 0.0
    _cycle_dumped: float = 0.0
    _cycle_energy_mark: dict = field(default_factory=dict)

    def __post_init__(self):
        for site in (self.dig_site, self.dump_site, self.load_point):
            if not self.terrain.contains(*site):
                raise SiteOutsideTerrain(f"site {site} outside terrain")
        self._initial_mass = self.terrain.cell_mass()
        self._cycle_energy_mark = self._energy_snapshot()

    # --- accounting -----------------------------------------------------------
    def _energy_snapshot(self) -> dict:
        snap = {}
        for group in ("arm", "crawler", "bed", "blade", "drive"):
            snap[group] = (self.excavator.energy[group]
                           + self.truck.energy[group])
        return snap

    def mass_ledger_error(self) -> float:
        """Relative imbalance of removed == bucket + bed + dumped."""
        removed = self.terrain.removed_mass
        held = self.excavator.load + self.truck.load + self.dumped_total
        scale = max(abs(removed), 1.0)
        return abs(removed - held) / scale

    def record_event(self, kind: str, **payload):
        self.events.append({"time_s": self.time, "kind": kind, **payload})

    def close_cycle(self):
        snap = self._energy_snapshot()
        work = {g: snap[g] - self._cycle_energy_mark[g] for g in snap}
        self.metrics.append(CycleMetrics(
            cycle=len(self.metrics) + 1,
            excavated_kg=self._cycle_excavated,
            dumped_kg=self._cycle_dumped,
            cycle_time_s=self.time - self._cycle_start_time,
            work_J=work))
        self._cycle_energy_mark = snap
        self._cycle_start_time = self.time
        self._cycle_excavated = 0.0
        self._cycle_dumped = 0.0


def _arrived(machine: MachineModel, dest, tol: float) -> bool:
    return math.hypot(machine.position[0] - dest[0],
                      machine.position[1] - dest[1]) <= tol


def _move_action(name: str, machine_of, dest_of) -> Action:
    def fn(world: ExcavationWorld) -> TickStatus:
        machine = machine_of(world)
        dest = dest_of(world)
        if _arrived(machine, dest, world.cfg.arrive_tol):
            return TickStatus.Success
        machine.drive_towards(dest, world.cfg.tick_dt, world.terrain)
        return (TickStatus.Success
                if _arrived(machine, dest, world.cfg.arrive_tol)
                else TickStatus.Running)
    return Action(name, fn)


def _crawler_action(name: str, machine_of, state: CrawlerState) -> Action:
    def fn(world: ExcavationWorld) -> TickStatus:
        machine = machine_of(world)
        if machine.crawlers is state:
            return TickStatus.Success
        if machine.busy(world.time):
            return TickStatus.Running
        if machine.finish_if_done(world.time, name):
            machine.crawlers = state
            machine.add_energy("crawler", world.cfg.crawler_energy)
            return TickStatus.Success
        machine.begin(name, world.time, world.cfg.crawler_time)
        return TickStatus.Running
    return Action(name, fn)


def _dig_action() -> Action:
    def fn(world: ExcavationWorld) -> TickStatus:
        ex = world.excavator
        if ex.load > 0:
            return TickStatus.Success  # bucket already holds this cycle's scoop
        bed_room = world.truck.capacity - world.truck.load
        allowance = min(ex.capacity, world.dig_budget, bed_room)
        if allowance <= 0:
            return TickStatus.Failure  # depleted site or no usable capacity
        if ex.busy(world.time):
            return TickStatus.Running
        if ex.finish_if_done(world.time, "dig"):
            mass = world.terrain.excavate(world.dig_site[0], world.dig_site[1],
                                          world.cfg.dig_depth_per_scoop,
                                          allowance)
            if mass <= 0:
                world.dig_budget = 0.0
                return TickStatus.Failure
            ex.load += mass
            world.dig_budget -= mass
            world._cycle_excavated += mass
            ex.add_energy("arm", mass * G_MOON * world.cfg.lift_height)
            world.record_event("dig", mass_kg=mass)
            return TickStatus.Success
        ex.begin("dig", world.time, world.cfg.dig_time)
        return TickStatus.Running
    return Action("dig", fn)


def _swing_action() -> Action:
    def fn(world: ExcavationWorld) -> TickStatus:
        ex = world.excavator
        if world.arm_at_truck:
            return TickStatus.Success
        if ex.busy(world.time):
            return TickStatus.Running
        if ex.finish_if_done(world.time, "swing"):
            world.arm_at_truck = True
            ex.add_energy("arm", ex.load * G_MOON * world.cfg.swing_height)
            return TickStatus.Success
        ex.begin("swing", world.time, world.cfg.swing_time)
        return TickStatus.Running
    return Action("swing_to_truck", fn)


def _dump_action() -> Action:
    def fn(world: ExcavationWorld) -> TickStatus:
        ex = world.excavator
        truck = world.truck
        if ex.load <= 0:
            return TickStatus.Failure  # nothing to dump: protocol misorder
        if ex.busy(world.time):
            return TickStatus.Running
        if ex.finish_if_done(world.time, "dump"):
            truck.load += ex.load
            world.record_event("dump_into_bed", mass_kg=ex.load,
                               bed_kg=truck.load)
            ex.load = 0.0
            world.arm_at_truck = False
            world.close_cycle()
            return TickStatus.Success
        ex.begin("dump", world.time, world.cfg.dump_time)
        return TickStatus.Running
    return Action("dump_into_bed", fn)


def _tilt_action() -> Action:
    def fn(world: ExcavationWorld) -> TickStatus:
        truck = world.truck
        if truck.load <= 0:
            return TickStatus.Success  # already emptied
        if truck.busy(world.time):
            return TickStatus.Running
        if truck.finish_if_done(world.time, "tilt"):
            truck.add_energy("bed", truck.load * G_MOON * world.cfg.tilt_height
                             + world.cfg.tilt_fixed_energy)
            world.dumped_total += truck.load
            world._cycle_dumped += truck.load
            world.record_event("tilt_bed", mass_kg=truck.load)
            truck.load = 0.0
            return TickStatus.Success
        truck.begin("tilt", world.time, world.cfg.tilt_time)
        return TickStatus.Running
    return Action("tilt_bed", fn)


def build_loading_tree(world: ExcavationWorld, grade_region=None,
                       grade_target: float | None = None) -> BtNode:
    """The case-study coordination tree, memory-less stages guarded by
    conditions: load until the bed is full, haul and tilt, fall back to a
    finish branch once the dig site is depleted.

    Crawler handling is explicit: machines lower their sub-crawlers at the
    work sites (reduced sinkage) and the truck raises them for the haul
    and its turning manoeuvres.
    """
    loads_per_haul = max(1, int(round(world.truck.capacity
                                      / max(world.excavator.capacity, 1e-9))))
    ex = lambda w: w.excavator
    tk = lambda w: w.truck

    def bed_full(w: ExcavationWorld) -> bool:
        return w.truck.load >= w.truck.capacity - 1e-9

    dig_cycle = Sequence([_dig_action(), _swing_action(), _dump_action()])

    load_stage = Sequence([
        Condition("bed_has_room", lambda w: not bed_full(w)),
        # an in-flight scoop still gets swung and dumped after depletion
        Condition("dig_site_has_material",
                  lambda w: w.dig_budget > 0 or w.excavator.load > 0),
        _move_action("truck_to_load_point", tk, lambda w: w.load_point),
        _crawler_action("lower_truck_crawlers", tk, CrawlerState.lowered),
        _move_action("excavator_to_dig_site", ex, lambda w: w.dig_site),
        _crawler_action("lower_excavator_crawlers", ex, CrawlerState.lowered),
        Repeat(loads_per_haul, dig_cycle),
    ])

    haul_children: list[BtNode] = [
        Condition("bed_full", bed_full),
        _crawler_action("raise_truck_crawlers", tk, CrawlerState.raised),
        _move_action("haul_to_dump_site", tk, lambda w: w.dump_site),
        _tilt_action(),
    ]
    if grade_region is not None:
        haul_children.append(_grade_action(grade_region, grade_target or 0.0))
    haul_stage = Sequence(haul_children)

    finish_stage = Sequence([
        Condition("dig_site_depleted", lambda w: w.dig_budget <= 0),
        # bed may hold a final partial load; deliver it before parking
        Selector([
            Condition("bed_empty", lambda w: w.truck.load <= 0),
            Sequence([
                _crawler_action("raise_truck_crawlers_final", tk,
                                CrawlerState.raised),
                _move_action("final_haul", tk, lambda w: w.dump_site),
                _tilt_action(),
            ]),
        ]),
        Action("park", lambda w: TickStatus.Success),
    ])
    # haul first (full bed has priority), then loading; the finish branch
    # runs only once loading has nothing left to do
    return Selector([haul_stage, load_stage, finish_stage])


def _grade_action(region, target: float) -> Action:
    def fn(world: ExcavationWorld) -> TickStatus:
        if getattr(world, "_graded", False):
            return TickStatus.Success
        grade_surface(world.truck, region, target, world.terrain)
        world._graded = True
        world.record_event("grade", region=list(region))
        return TickStatus.Success
    return Action("grade_with_blade", fn)


def run_cycles(tree: BtNode, world: ExcavationWorld, n_cycles: int,
               ledger_tol: float = 1e-6, max_hours: float = 10.0
               ) -> list[CycleMetrics]:
    """Tick at control rate until n_cycles Dig-Swing-Dump cycles complete.

    The mass ledger is asserted every tick; Stalled is raised when no new
    cycle lands within 10x the median cycle time (with a generous floor
    while the first cycles are still forming).
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    world._cycle_start_time = world.time
    last_count = len(world.metrics)
    last_progress_time = world.time
    while len(world.metrics) < n_cycles:
        tree.tick(world)
        world.time += world.cfg.tick_dt
        err = world.mass_ledger_error()
        if err > ledger_tol:
            raise CoordinationError(f"mass ledger off by {err:.3e}")
        if len(world.metrics) != last_count:
            last_count = len(world.metrics)
            last_progress_time = world.time
        times = [m.cycle_time_s for m in world.metrics]
        median = sorted(times)[len(times) // 2] if times else None
        window = max(60.0, 10.0 * median) if median else 600.0
        if world.time - last_progress_time > window:
            raise Stalled(world.time, len(world.metrics))
        if world.time > max_hours * 3600.0:
            raise Stalled(world.time, len(world.metrics))
    return list(world.metrics[:n_cycles])


def grade_surface(truck: MachineModel, region, target, terrain: Heightfield,
                  passes: int = 2, blade_capacity: float = 1.0) -> float:
    """Blade passes pushing material toward the target heights.

    Mass moves (never appears or vanishes): surplus is cut, deficits fill
    from the carried volume, leftovers push into a berm node just outside
    the region. Returns the max |height - target| over the region.
    """
    x0, y0, x1, y1 = region
    xmin, ymin, xmax, ymax = terrain.extent
    cell = terrain.cell_size
    if not (xmin <= x0 <= x1 <= xmax and ymin <= y0 <= y1 <= ymax):
        raise RegionOutsideTerrain(f"region {region} outside terrain")
    ix0 = int(math.ceil((x0 - terrain.origin[0]) / cell))
    ix1 = int(math.floor((x1 - terrain.origin[0]) / cell))
    iy0 = int(math.ceil((y0 - terrain.origin[1]) / cell))
    iy1 = int(math.floor((y1 - terrain.origin[1]) / cell))
    ny, nx = terrain.heights.shape
    if ix0 < 1 or iy0 < 1 or ix1 > nx - 2 or iy1 > ny - 2:
        raise RegionOutsideTerrain("region needs a one-cell berm margin")

    h = terrain.heights
    density = terrain.regolith.mass_density
    cell_area = cell * cell
    for p in range(passes):
        forward = p % 2 == 0
        cols = range(ix0, ix1 + 1) if forward else range(ix1, ix0 - 1, -1)
        berm_ix = ix1 + 1 if forward else ix0 - 1
        for iy in range(iy0, iy1 + 1):
            carry = 0.0
            moved = 0.0
            for ix in cols:
                surplus = h[iy, ix] - target
                if surplus > 1e-12 and carry < blade_capacity:
                    cut = min(surplus, blade_capacity - carry)
                    h[iy, ix] -= cut
                    carry += cut
                    moved += cut
                elif surplus < -1e-12 and carry > 0.0:
                    fill = min(-surplus, carry)
                    h[iy, ix] += fill
                    carry -= fill
            if carry > 0.0:
                h[iy, berm_ix] += carry
            if moved > 0.0:
                span = (ix1 - ix0 + 1) * cell
                truck.add_energy("blade",
                                 moved * cell_area * density * G_MOON * 0.05 * span)
    terrain.heights_changed()
    region_h = h[iy0:iy1 + 1, ix0:ix1 + 1]
    return float(np.max(np.abs(region_h - target)))
