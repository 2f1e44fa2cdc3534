"""Lumped kinematic excavator / dump-truck models with energy ledgers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

G_MOON = 1.62  # m/s^2

ENERGY_GROUPS = ("arm", "crawler", "bed", "blade", "drive")


class MachineKind(enum.Enum):
    Excavator = "Excavator"
    DumpTruck = "DumpTruck"


class CrawlerState(enum.Enum):
    lowered = "lowered"
    raised = "raised"


@dataclass
class Activity:
    """Timed machine process; the effect applies once at `end_time`."""
    name: str
    end_time: float


@dataclass
class MachineModel:
    kind: MachineKind
    position: tuple[float, float]
    mass: float = 8000.0                  # kg, chassis
    speed: float = 0.8                    # m/s travel speed
    load: float = 0.0                     # kg in bucket (excavator) / bed (truck)
    capacity: float = 300.0               # kg
    crawlers: CrawlerState = CrawlerState.raised
    rolling_coeff: float = 0.08
    energy: dict = field(default_factory=lambda: {g: 0.0 for g in ENERGY_GROUPS})
    activity: Activity | None = None

    def add_energy(self, group: str, joules: float) -> None:
        if joules < 0:
            raise ValueError("energy increments must be non-negative")
        self.energy[group] += joules

    def busy(self, now: float) -> bool:
        return self.activity is not None and now < self.activity.end_time

    def begin(self, name: str, now: float, duration: float) -> None:
        self.activity = Activity(name=name, end_time=now + duration)

    def finish_if_done(self, now: float, name: str) -> bool:
        """True exactly once, when the named activity completes."""
        if (self.activity is not None and self.activity.name == name
                and now >= self.activity.end_time):
            self.activity = None
            return True
        return False

    def drive_towards(self, dest: tuple[float, float], dt: float,
                      terrain=None) -> bool:
        """Advance one tick toward dest; returns True when arrived.

        Drive work = rolling resistance x distance + m g Δh on climbs
        (lunar gravity); descending legs cost only the rolling term.
        """
        dx = dest[0] - self.position[0]
        dy = dest[1] - self.position[1]
        dist = math.hypot(dx, dy)
        if dist < 1e-6:
            return True
        step = min(self.speed * dt, dist)
        nx = self.position[0] + dx / dist * step
        ny = self.position[1] + dy / dist * step
        total_mass = self.mass + self.load
        work = self.rolling_coeff * total_mass * G_MOON * step
        if terrain is not None:
            h0 = terrain.height_at(*self.position)
            h1 = terrain.height_at(nx, ny)
            work += total_mass * G_MOON * max(0.0, h1 - h0)
        self.add_energy("drive", work)
        self.position = (nx, ny)
        return dist - step < 1e-6
