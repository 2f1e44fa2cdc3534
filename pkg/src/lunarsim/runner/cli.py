"""Command-line entry points: `plx` (language tools) and `sim` (runner)."""

from __future__ import annotations

import json
import os
import sys

import click

from ..scenelang import (FileRegistry, PlxError, assemble, parse_source,
                         resolve, tree_to_json)
from .record import RecordError, read_record
from .record import replay as replay_rows
from .scenario import ScenarioError, ScenarioSpec, run_scenario


@click.group()
def plx():
    """Tools for the .plx declarative modeling language."""


@plx.command()
@click.argument("file", type=click.Path())
def check(file):
    """Parse and resolve every model in FILE; exit 0 when clean."""
    registry = FileRegistry()
    try:
        unit = registry.load(file)
        forest = parse_source(unit, registry)
        own = [m for u in forest.units if u.path == unit.path for m in u.models]
        for decl in own:
            resolve(decl.name, forest)
    except (PlxError, OSError) as exc:
        click.echo(f"{file}: {exc}", err=True)
        sys.exit(1)
    click.echo(f"{file}: ok ({len(own)} model(s))")
    sys.exit(0)


@plx.command()
@click.argument("file", type=click.Path())
@click.option("--model", default=None, help="Model name (default: last in file).")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("-o", "--output", default="-", help="Output path or - for stdout.")
def flatten(file, model, seed, output):
    """Resolve, assemble and emit the model tree as canonical JSON."""
    registry = FileRegistry()
    try:
        unit = registry.load(file)
        forest = parse_source(unit, registry)
        if model is None:
            own = [m for u in forest.units if u.path == unit.path for m in u.models]
            if not own:
                raise PlxError(f"{file}: no models declared")
            model = own[-1].name
        tree = assemble(resolve(model, forest), seed=seed, forest=forest)
        text = tree_to_json(tree, seed)
    except (PlxError, OSError) as exc:
        click.echo(f"{file}: {exc}", err=True)
        sys.exit(1)
    if output == "-":
        click.echo(text, nl=False)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.exit(0)


@click.group()
def sim():
    """Scenario runner: headless runs, batches, training, replay, serving."""


def _load_spec(scenario, seed, record, vlm, policy) -> ScenarioSpec:
    try:
        return ScenarioSpec(scene_path=scenario, seed=seed, record_path=record,
                            vlm=vlm, policy=policy)
    except ScenarioError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)


@sim.command()
@click.argument("scenario", type=click.Path())
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--record", default=None, type=click.Path(),
              help="Write a JSONL trajectory record here.")
@click.option("--vlm", default="scripted", type=click.Choice(["scripted", "remote"]),
              show_default=True)
@click.option("--policy", default="greedy", show_default=True,
              help="Drive policy: greedy or a checkpoint path.")
def run(scenario, seed, record, vlm, policy):
    """Run SCENARIO headless and print the exit summary."""
    spec = _load_spec(scenario, seed, record, vlm, policy)
    try:
        summary = run_scenario(spec)
    except (ScenarioError, PlxError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@sim.command()
@click.argument("scenario", type=click.Path())
@click.option("--runs", default=4, type=int, show_default=True)
@click.option("--seed-base", default=0, type=int, show_default=True)
@click.option("--parallel", default=1, type=int, show_default=True)
@click.option("--record-dir", default=None, type=click.Path())
@click.option("--vlm", default="scripted", type=click.Choice(["scripted", "remote"]))
@click.option("--policy", default="greedy")
def batch(scenario, runs, seed_base, parallel, record_dir, vlm, policy):
    """Run seeded copies of SCENARIO and aggregate the results."""
    from .batch import batch_run
    spec = _load_spec(scenario, seed_base, None, vlm, policy)
    if record_dir:
        os.makedirs(record_dir, exist_ok=True)
    aggregate = batch_run(spec, n_runs=runs, seed_base=seed_base,
                          parallelism=parallel, record_dir=record_dir)
    click.echo(json.dumps(aggregate, indent=2, sort_keys=True))
    sys.exit(0 if aggregate["n_failed"] == 0 else 1)


@sim.command()
@click.argument("scenario", type=click.Path(), required=False)
@click.option("--config", default=None, type=click.Path(),
              help="JSON file overriding PPO hyperparameters.")
@click.option("--out", default="policy.json", type=click.Path(), show_default=True)
@click.option("--log", default=None, type=click.Path(),
              help="Training curve CSV path.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--mode", default="feature",
              type=click.Choice(["feature", "gray64", "rgb128"]), show_default=True)
@click.option("--timesteps", default=None, type=int,
              help="Override total training timesteps.")
def train(scenario, config, out, log, seed, mode, timesteps):
    """Train the drive policy with PPO and save a checkpoint."""
    from ..learn.env import DriveEnv, EnvConfig
    from ..learn.ppo import PpoConfig, ppo_train

    overrides = {}
    if config:
        with open(config, encoding="utf-8") as fh:
            overrides = json.load(fh)
    if timesteps is not None:
        overrides["total_timesteps"] = timesteps
    ppo_cfg = PpoConfig(**overrides)
    env_cfg = EnvConfig(mode=mode)
    env_factory = lambda i: DriveEnv(env_cfg, seed=i)

    def hook(row):
        click.echo(f"iter {row['iteration']:>3}  steps {row['timesteps']:>8}  "
                   f"return {row['mean_return']:8.3f}  "
                   f"success {row['success_rate']:5.2f}  lr {row['lr']:.3e}")

    policy, history = ppo_train(env_factory, ppo_cfg, seed=seed,
                                history_hook=hook)
    policy.save(out, ppo_cfg.to_dict())
    click.echo(f"saved policy checkpoint to {out}")
    if log:
        with open(log, "w", encoding="utf-8") as fh:
            fh.write(history.to_csv())
        click.echo(f"wrote training log to {log}")


@sim.command()
@click.argument("record", type=click.Path())
@click.option("--speed", default=0.0, type=float, show_default=True,
              help="Replay pacing: sim-seconds per wall-second (0 = no pacing).")
@click.option("--quiet", is_flag=True, help="Suppress per-row output.")
def replay(record, speed, quiet):
    """Replay a trajectory record without re-simulation."""
    try:
        header, _rows = read_record(record)
        click.echo(json.dumps({"header": header}, sort_keys=True))
        n = 0
        for row in replay_rows(record, speed=speed):
            n += 1
            if not quiet:
                click.echo(json.dumps(row, sort_keys=True))
        click.echo(f"replayed {n} rows", err=True)
    except RecordError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@sim.command()
@click.argument("scenario", type=click.Path())
@click.option("--port", default=8080, type=int, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--vlm", default="scripted", type=click.Choice(["scripted", "remote"]))
@click.option("--policy", default="greedy")
@click.option("--pace", default=1.0, type=float, show_default=True,
              help="Simulated seconds per wall second (0 = flat out).")
def serve(scenario, port, host, seed, vlm, policy, pace):
    """Host a live session with the WebSocket console bridge."""
    from .service import PortInUse, serve as _serve
    spec = _load_spec(scenario, seed, None, vlm, policy)
    try:
        click.echo(f"serving {scenario} on http://{host}:{port} (ws at /ws)")
        _serve(port, spec, pace=pace, host=host)
    except PortInUse as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
