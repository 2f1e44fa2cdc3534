"""Scenario execution, batches, records, and the live service."""

from .batch import batch_run
from .record import (CorruptRecord, FORMAT, RecordError, RecordWriter,
                     VersionMismatch, canonical_json, read_record,
                     record_body, replay, scenario_hash)
from .scenario import ScenarioError, ScenarioSpec, load_scene, run_scenario

__all__ = [
    "CorruptRecord", "FORMAT", "RecordError", "RecordWriter", "ScenarioError",
    "ScenarioSpec", "VersionMismatch", "batch_run", "canonical_json",
    "load_scene", "read_record", "record_body", "replay", "run_scenario",
    "scenario_hash",
]
