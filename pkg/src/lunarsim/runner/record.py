"""Versioned JSONL trajectory records.

Line 1 is a JSON header: format tag, scenario hash, config, code version,
and the only wall-clock field (`created_at`). Every following line is one
event row with monotone simulated time, so identical (scenario, seed) runs
produce byte-identical record bodies.
"""

from __future__ import annotations

import hashlib
import json
import time as wall
from dataclasses import dataclass

from .. import __version__

FORMAT = "lunarsim-record/1"


class RecordError(Exception):
    pass


class VersionMismatch(RecordError):
    def __init__(self, found: str | None):
        super().__init__(f"unsupported record format {found!r}")


class CorruptRecord(RecordError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"record corrupt at line {line_no}: {reason}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def scenario_hash(resolved_model: dict, config: dict) -> str:
    """Content hash of the resolved scene plus run config; detects drift."""
    blob = canonical_json({"model": resolved_model, "config": config})
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class RecordWriter:
    path: str

    def __post_init__(self):
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        self._rows = 0
        self._last_t = float("-inf")

    def write_header(self, scenario: str, config: dict) -> None:
        header = {
            "format": FORMAT,
            "scenario_hash": scenario,
            "config": config,
            "code_version": __version__,
            "created_at": wall.time(),  # wall clock lives only here
        }
        self._fh.write(canonical_json(header) + "\n")

    def write_row(self, row: dict) -> None:
        t = float(row.get("t", 0.0))
        if t < self._last_t:
            raise RecordError(f"non-monotone time {t} after {self._last_t}")
        self._last_t = t
        self._fh.write(canonical_json(row) + "\n")
        self._rows += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_record(path: str) -> tuple[dict, list[dict]]:
    """Header and rows; raises VersionMismatch / CorruptRecord."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise CorruptRecord(1, "empty file")
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise CorruptRecord(1, f"bad header: {exc}") from exc
        if header.get("format") != FORMAT:
            raise VersionMismatch(header.get("format"))
        rows = []
        for line_no, line in enumerate(fh, start=2):
            if line == "":
                break
            if not line.endswith("\n"):
                raise CorruptRecord(line_no, "truncated line")
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorruptRecord(line_no, str(exc)) from exc
    return header, rows


def record_body(path: str) -> bytes:
    """Record content excluding the header (the reproducible part)."""
    with open(path, "rb") as fh:
        fh.readline()
        return fh.read()


def replay(path: str, speed: float = 0.0):
    """Yield rows; with speed > 0, pace by simulated-time deltas / speed."""
    header, rows = read_record(path)
    prev_t = None
    for row in rows:
        if speed and speed > 0 and prev_t is not None:
            delta = (float(row.get("t", prev_t)) - prev_t) / speed
            if delta > 0:
                wall.sleep(delta)
        prev_t = float(row.get("t", prev_t or 0.0))
        yield row
