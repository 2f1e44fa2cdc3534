"""Scenario loading from .plx and headless execution."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..coordination import (ExcavationWorld, MachineKind, MachineModel,
                            build_loading_tree, metrics_to_csv, run_cycles)
from ..scenelang import (FileRegistry, assemble, parse_source, resolve,
                         tree_to_dict)
from ..terrain import generate_terrain
from ..world import NavWorld
from .record import RecordWriter, canonical_json, scenario_hash

TARGET_FIELDS = {
    "Astronaut": "astronaut_pos",
    "Antenna": "antenna_pos",
    "Rover": "rover_pos",
    "Rock": "rock_pos",
}


class ScenarioError(Exception):
    pass


@dataclass
class ScenarioSpec:
    """A validated run request: scene file plus runner options."""
    scene_path: str
    mode: str = ""                 # filled from the scene unless overridden
    model: str | None = None       # model name inside the .plx
    seed: int = 0
    duration: float = 600.0        # s simulated cap for rover_nav
    vlm: str = "scripted"          # scripted | remote
    policy: str = "greedy"         # greedy | path to a checkpoint
    record_path: str | None = None
    randomize: bool = True
    tasks: list[str] = field(default_factory=list)
    n_cycles: int | None = None

    def __post_init__(self):
        if not os.path.isfile(self.scene_path):
            raise ScenarioError(f"scene file not found: {self.scene_path}")
        if self.vlm not in ("scripted", "remote"):
            raise ScenarioError(f"vlm must be scripted or remote, got {self.vlm!r}")


def load_scene(spec: ScenarioSpec) -> tuple[dict, dict]:
    """Resolve+assemble the scenario model; returns (params, resolved dict)."""
    registry = FileRegistry()
    unit = registry.load(spec.scene_path)
    forest = parse_source(unit, registry)
    model = spec.model
    if model is None:
        own = [m for u in forest.units if u.path == unit.path for m in u.models]
        if not own:
            raise ScenarioError(f"{spec.scene_path}: no models declared")
        model = own[-1].name
    tree = resolve(model, forest)
    seed = spec.seed if spec.randomize else 0
    assembled = assemble(tree, seed=seed, forest=forest)
    params = dict(assembled.parameters)
    mode = spec.mode or str(params.get("mode", ""))
    if mode not in ("rover_nav", "excavation"):
        raise ScenarioError(f"scenario mode {mode!r} is not runnable")
    spec.mode = mode
    return params, tree_to_dict(assembled, seed)


def _nav_world_from(params: dict, seed: int) -> NavWorld:
    rng = np.random.default_rng(seed)
    extent = (float(params.get("extent_x", 60.0)),
              float(params.get("extent_y", 60.0)))
    cell = float(params.get("cell_size", 0.25))
    n_craters = int(params.get("crater_count", 0))
    radius = float(params.get("crater_radius", 1.5))
    depth_ratio = float(params.get("crater_depth_ratio", 0.15))
    craters = []
    margin = 6.0
    for _ in range(n_craters):
        cx = float(rng.uniform(-extent[0] / 2 + margin, extent[0] / 2 - margin))
        cy = float(rng.uniform(-extent[1] / 2 + margin, extent[1] / 2 - margin))
        if math.hypot(cx, cy) < 6.0:
            continue  # keep the spawn area clean
        craters.append(((cx, cy), radius, radius * depth_ratio))
    targets = {}
    for kind, field_name in TARGET_FIELDS.items():
        if field_name in params:
            p = params[field_name]
            targets[kind] = (float(p[0]), float(p[1]))
    spawn = params.get("spawn", np.zeros(3))
    heading = float(params.get("spawn_heading", 0.0))
    return NavWorld.create(
        extent=extent, cell_size=cell, craters=craters, seed=seed,
        noise_amplitude=float(params.get("noise_amplitude", 0.0)),
        target_positions=targets or None,
        spawn=(float(spawn[0]), float(spawn[1]), heading))


def _excavation_world_from(params: dict, seed: int) -> ExcavationWorld:
    extent = (float(params.get("extent_x", 60.0)),
              float(params.get("extent_y", 40.0)))
    hf = generate_terrain(extent, float(params.get("cell_size", 0.25)),
                          seed=seed,
                          slope=(float(params.get("slope_x", 0.0)), 0.0))
    excavator = MachineModel(MachineKind.Excavator,
                             position=(float(params.get("dig_x", -8.0)) - 2.0,
                                       float(params.get("dig_y", 0.0)) + 2.0),
                             capacity=float(params.get("bucket_capacity", 100.0)),
                             mass=float(params.get("machine_mass", 9000.0)))
    truck = MachineModel(MachineKind.DumpTruck,
                         position=(float(params.get("load_x", -5.0)) + 3.0,
                                   float(params.get("load_y", 0.0)) + 3.0),
                         capacity=float(params.get("bed_capacity", 300.0)))
    return ExcavationWorld(
        terrain=hf, excavator=excavator, truck=truck,
        dig_site=(float(params.get("dig_x", -8.0)), float(params.get("dig_y", 0.0))),
        dump_site=(float(params.get("dump_x", 12.0)), float(params.get("dump_y", 0.0))),
        load_point=(float(params.get("load_x", -5.0)), float(params.get("load_y", 0.0))),
        dig_budget=float(params.get("dig_budget", 4000.0)))


def _make_policy(spec: ScenarioSpec):
    from ..learn.policy import GreedyDrivePolicy, LearnedPolicy
    if spec.policy == "greedy":
        return GreedyDrivePolicy()
    return LearnedPolicy.load(spec.policy)


def _make_vlm(spec: ScenarioSpec, world: NavWorld):
    if spec.vlm == "scripted":
        from ..autonomy.oracle import ScriptedOracle
        return ScriptedOracle(world)
    from ..autonomy.transport import HttpChatVlm
    return HttpChatVlm.from_env()


def run_scenario(spec: ScenarioSpec) -> dict:
    """Headless deterministic run; returns the exit summary."""
    params, resolved = load_scene(spec)
    shash = scenario_hash(resolved, {
        "seed": spec.seed, "mode": spec.mode, "vlm": spec.vlm,
        "policy": spec.policy, "tasks": spec.tasks,
        "n_cycles": spec.n_cycles, "duration": spec.duration,
    })
    writer = None
    if spec.record_path:
        writer = RecordWriter(spec.record_path)
        writer.write_header(shash, {"mode": spec.mode, "seed": spec.seed,
                                    "scene": os.path.basename(spec.scene_path)})
    try:
        if spec.mode == "rover_nav":
            summary = _run_nav(spec, params, writer)
        else:
            summary = _run_excavation(spec, params, writer)
    finally:
        if writer is not None:
            writer.close()
    summary["scenario_hash"] = shash
    if spec.record_path:
        summary["record_path"] = spec.record_path
    return summary


def _run_nav(spec: ScenarioSpec, params: dict, writer: RecordWriter | None) -> dict:
    from ..autonomy.orchestrator import Orchestrator
    world = _nav_world_from(params, spec.seed)
    policy = _make_policy(spec)
    vlm = _make_vlm(spec, world)

    events = []

    def on_event(kind: str, payload: dict):
        events.append((kind, payload))
        if writer is not None:
            writer.write_row({"t": world.state.time, "type": kind, **payload})

    orch = Orchestrator(world, vlm, policy,
                        drive_duration=float(params.get("drive_duration", 20.0)),
                        on_event=on_event)

    tasks = list(spec.tasks)
    if not tasks:
        tasks = [str(v) for k, v in sorted(params.items())
                 if k.startswith("task_")]
    orch.start()
    completed = 0
    clarified = 0
    for task in tasks:
        if world.state.time > spec.duration:
            break
        out = orch.submit_task(task)
        while out.get("awaiting_clarification"):
            clarified += 1
            # headless default: repeat the task naming the first target word
            out = orch.answer_more_information("Drive to the rock.")
        if out.get("finished"):
            completed += 1
        if out.get("shutdown"):
            break
        if writer is not None:
            s = world.state
            writer.write_row({
                "t": s.time, "type": "state",
                "pose": [s.position[0], s.position[1], s.position[2], s.heading],
                "task": task,
            })
    return {
        "mode": "rover_nav",
        "tasks": len(tasks),
        "completed_tasks": completed,
        "finishes": orch.finishes,
        "skills": len(orch.skill_events),
        "protocol_violations": orch.protocol_violations,
        "clarifications": clarified,
        "sim_time_s": world.state.time,
    }


def _run_excavation(spec: ScenarioSpec, params: dict,
                    writer: RecordWriter | None) -> dict:
    world = _excavation_world_from(params, spec.seed)
    n_cycles = spec.n_cycles or int(params.get("n_cycles", 30))
    grade_region = None
    if all(k in params for k in ("grade_x0", "grade_y0", "grade_x1", "grade_y1")):
        grade_region = (float(params["grade_x0"]), float(params["grade_y0"]),
                        float(params["grade_x1"]), float(params["grade_y1"]))
    tree = build_loading_tree(world, grade_region=grade_region, grade_target=0.0)
    metrics = run_cycles(tree, world, n_cycles)
    if writer is not None:
        for m in metrics:
            writer.write_row({"t": world.time, "type": "cycle",
                              "cycle": m.cycle, "excavated_kg": m.excavated_kg,
                              "dumped_kg": m.dumped_kg,
                              "cycle_time_s": m.cycle_time_s,
                              "work_J": m.work_J})
    csv_path = None
    if spec.record_path:
        csv_path = spec.record_path + ".cycles.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(metrics_to_csv(metrics))
    total_exc = sum(m.excavated_kg for m in metrics)
    total_dump = sum(m.dumped_kg for m in metrics)
    return {
        "mode": "excavation",
        "cycles": len(metrics),
        "excavated_kg": total_exc,
        "dumped_kg": total_dump,
        "mean_cycle_time_s": float(np.mean([m.cycle_time_s for m in metrics])),
        "mean_work_J": float(np.mean([sum(m.work_J.values()) for m in metrics])),
        "ledger_error": world.mass_ledger_error(),
        "cycles_csv": csv_path,
        "sim_time_s": world.time,
    }
