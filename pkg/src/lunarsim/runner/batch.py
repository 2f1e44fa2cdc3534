"""Seeded batch execution with per-run isolation."""

from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .scenario import ScenarioSpec, run_scenario


def _one_run(spec: ScenarioSpec) -> dict:
    try:
        return {"ok": True, "seed": spec.seed, "summary": run_scenario(spec)}
    except BaseException as exc:  # isolation: a failed run never kills the batch
        return {"ok": False, "seed": spec.seed, "error": repr(exc),
                "traceback": traceback.format_exc()}


def batch_run(template: ScenarioSpec, n_runs: int, seed_base: int = 0,
              parallelism: int = 1, record_dir: str | None = None) -> dict:
    """Run seeded copies of a scenario; aggregates are order-independent."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    specs = []
    for i in range(n_runs):
        record_path = None
        if record_dir is not None:
            record_path = f"{record_dir}/run_{seed_base + i}.jsonl"
        specs.append(replace(template, seed=seed_base + i,
                             record_path=record_path))

    if parallelism <= 1:
        results = [_one_run(s) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_one_run, specs))

    ok = [r for r in results if r["ok"]]
    failed = [r for r in results if not r["ok"]]
    aggregate: dict = {
        "n_runs": n_runs,
        "n_ok": len(ok),
        "n_failed": len(failed),
        "failures": [{"seed": r["seed"], "error": r["error"]} for r in failed],
    }
    # numeric summary fields -> mean/std across successful runs
    if ok:
        keys = [k for k, v in ok[0]["summary"].items()
                if isinstance(v, (int, float)) and not isinstance(v, bool)]
        for k in keys:
            vals = [float(r["summary"][k]) for r in ok if k in r["summary"]]
            aggregate[f"{k}_mean"] = float(np.mean(vals))
            aggregate[f"{k}_std"] = float(np.std(vals))
    aggregate["runs"] = sorted(
        ({"seed": r["seed"], **({"summary": r["summary"]} if r["ok"] else
                                {"error": r["error"]})} for r in results),
        key=lambda r: r["seed"])
    return aggregate
