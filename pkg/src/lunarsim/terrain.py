"""Heightfield lunar terrain: procedural craters, regolith parameters,
excavation mass accounting, and slope/slip queries.

The deformable-soil force model is out of scope; mobility penalties come
from the slip/rolling-resistance formulas below and excavation conserves
mass exactly (volume change x density).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class TerrainError(Exception):
    pass


class OutOfBounds(TerrainError):
    def __init__(self, x: float, y: float):
        super().__init__(f"query ({x:.3f}, {y:.3f}) outside terrain extent")


class CraterOutsideExtent(TerrainError):
    def __init__(self, center):
        super().__init__(f"crater center {tuple(center)} outside terrain extent")


@dataclass(frozen=True)
class RegolithParams:
    """Bulk mechanical regolith properties (desk-scale placeholder values)."""
    internal_friction: float = math.radians(35.0)  # rad
    cohesion: float = 500.0                        # Pa
    dilatancy: float = math.radians(5.0)           # rad
    mass_density: float = 1500.0                   # kg/m^3
    compression_index: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.internal_friction < math.pi / 2:
            raise ValueError("internal_friction must be in (0, pi/2)")
        if self.mass_density <= 0.0:
            raise ValueError("mass_density must be positive")
        if self.cohesion < 0.0:
            raise ValueError("cohesion must be non-negative")


# Frictionless test preset: compression_index -0.4 zeroes rolling resistance.
LOSS_FREE_REGOLITH = RegolithParams(compression_index=-0.4)


@dataclass(frozen=True)
class SunConfig:
    azimuth: float = 0.0
    elevation: float = math.radians(25.0)

    def __post_init__(self):
        if not 0.0 <= self.elevation <= math.pi / 2:
            raise ValueError("sun elevation must be in [0, pi/2]")


@dataclass
class Heightfield:
    """Rectangular height grid; heights[iy, ix] at (x0 + ix*cell, y0 + iy*cell)."""
    origin: tuple[float, float]
    cell_size: float
    heights: np.ndarray
    regolith: RegolithParams = field(default_factory=RegolithParams)
    removed_mass: float = 0.0

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.heights = np.asarray(self.heights, dtype=float)
        if self.heights.ndim != 2:
            raise ValueError("heights must be a 2-D grid")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")
        self._refresh_flat_cache()

    def _refresh_flat_cache(self):
        # uniform fields answer sample/slip queries in O(1)
        h0 = float(self.heights.flat[0])
        self._flat = h0 if bool(np.all(self.heights == h0)) else None

    # --- geometry helpers -------------------------------------------------
    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the covered rectangle."""
        ny, nx = self.heights.shape
        x0, y0 = self.origin
        return (x0, y0, x0 + (nx - 1) * self.cell_size, y0 + (ny - 1) * self.cell_size)

    def contains(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.extent
        return xmin <= x <= xmax and ymin <= y <= ymax

    def _grid_coords(self, x: float, y: float) -> tuple[int, int, float, float]:
        if not self.contains(x, y):
            raise OutOfBounds(x, y)
        ny, nx = self.heights.shape
        gx = (x - self.origin[0]) / self.cell_size
        gy = (y - self.origin[1]) / self.cell_size
        # snap to the lattice so corner queries return stored values exactly
        if abs(gx - round(gx)) < 1e-9:
            gx = round(gx)
        if abs(gy - round(gy)) < 1e-9:
            gy = round(gy)
        ix = min(int(math.floor(gx)), nx - 2)
        iy = min(int(math.floor(gy)), ny - 2)
        return ix, iy, gx - ix, gy - iy

    def height_at(self, x: float, y: float) -> float:
        """Bilinear height."""
        if self._flat is not None:
            if not self.contains(x, y):
                raise OutOfBounds(x, y)
            return self._flat
        ix, iy, u, v = self._grid_coords(x, y)
        h = self.heights
        return float((1 - u) * (1 - v) * h[iy, ix] + u * (1 - v) * h[iy, ix + 1]
                     + (1 - u) * v * h[iy + 1, ix] + u * v * h[iy + 1, ix + 1])

    def gradient_at(self, x: float, y: float) -> tuple[float, float]:
        """Central-difference slope of the bilinear surface."""
        if self._flat is not None:
            if not self.contains(x, y):
                raise OutOfBounds(x, y)
            return 0.0, 0.0
        xmin, ymin, xmax, ymax = self.extent
        d = 0.5 * self.cell_size
        xa, xb = max(x - d, xmin), min(x + d, xmax)
        ya, yb = max(y - d, ymin), min(y + d, ymax)
        dhdx = (self.height_at(xb, y) - self.height_at(xa, y)) / (xb - xa)
        dhdy = (self.height_at(x, yb) - self.height_at(x, ya)) / (yb - ya)
        return dhdx, dhdy

    def sample(self, x: float, y: float) -> tuple[float, np.ndarray]:
        """(height, unit surface normal)."""
        h = self.height_at(x, y)
        dhdx, dhdy = self.gradient_at(x, y)
        n = np.array([-dhdx, -dhdy, 1.0])
        return h, n / np.linalg.norm(n)

    # --- regolith interaction ---------------------------------------------
    def slip_at(self, x: float, y: float, heading: float) -> tuple[float, float]:
        """(slip ratio, rolling resistance) for travel along `heading`.

        Slip grows with the uphill slope in the direction of travel,
        saturating at 0.9 when the slope reaches the internal friction
        angle; downhill travel gives zero slip.
        """
        dhdx, dhdy = self.gradient_at(x, y)
        uphill_tan = dhdx * math.cos(heading) + dhdy * math.sin(heading)
        if uphill_tan <= 0.0:
            slip = 0.0
        else:
            slip = min(uphill_tan / math.tan(self.regolith.internal_friction), 0.9)
        rr = min(max(0.02 + 0.05 * self.regolith.compression_index, 0.0), 0.5)
        return slip, rr

    def excavate(self, x: float, y: float, target_depth: float,
                 bucket_capacity: float, footprint: float = 0.5) -> float:
        """Lower a square tool footprint by up to `target_depth`; returns kg.

        Removal is capped at `bucket_capacity`; when the cap binds, heights
        are lowered proportionally so returned mass always equals exactly
        density x removed volume.
        """
        if not self.contains(x, y):
            raise OutOfBounds(x, y)
        if target_depth < 0:
            raise ValueError("target_depth must be non-negative")
        if target_depth == 0.0 or bucket_capacity <= 0.0:
            return 0.0
        ny, nx = self.heights.shape
        half = footprint / 2.0
        x0, y0 = self.origin
        ix0 = max(0, int(math.ceil((x - half - x0) / self.cell_size - 1e-9)))
        ix1 = min(nx - 1, int(math.floor((x + half - x0) / self.cell_size + 1e-9)))
        iy0 = max(0, int(math.ceil((y - half - y0) / self.cell_size - 1e-9)))
        iy1 = min(ny - 1, int(math.floor((y + half - y0) / self.cell_size + 1e-9)))
        if ix1 < ix0 or iy1 < iy0:
            return 0.0
        cell_area = self.cell_size ** 2
        n_cells = (ix1 - ix0 + 1) * (iy1 - iy0 + 1)
        volume = target_depth * n_cells * cell_area
        mass = volume * self.regolith.mass_density
        scale = 1.0
        if mass > bucket_capacity:
            scale = bucket_capacity / mass
            mass = bucket_capacity
        self.heights[iy0:iy1 + 1, ix0:ix1 + 1] -= target_depth * scale
        self.removed_mass += mass
        self._refresh_flat_cache()
        return mass

    def heights_changed(self) -> None:
        """Callers mutating `heights` in place must invalidate the caches."""
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must stay finite")
        self._refresh_flat_cache()

    def cell_mass(self) -> float:
        """Mass of the whole field relative to h=0; each node owns one cell.

        Excavation and grading use the same node-sum accounting, so the
        ledger `initial - current == removed_mass / density` holds exactly.
        """
        return float(np.sum(self.heights) * self.cell_size ** 2
                     * self.regolith.mass_density)

    # --- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema": "heightfield/1",
            "origin": [self.origin[0], self.origin[1]],
            "cell_size": self.cell_size,
            "shape": list(self.heights.shape),
            "heights": [float(v) for v in self.heights.ravel()],
            "regolith": {
                "internal_friction": self.regolith.internal_friction,
                "cohesion": self.regolith.cohesion,
                "dilatancy": self.regolith.dilatancy,
                "mass_density": self.regolith.mass_density,
                "compression_index": self.regolith.compression_index,
            },
            "removed_mass": self.removed_mass,
        }

    @staticmethod
    def from_dict(data: dict) -> "Heightfield":
        if data.get("schema") != "heightfield/1":
            raise ValueError(f"unknown heightfield schema {data.get('schema')!r}")
        reg = RegolithParams(**data["regolith"])
        heights = np.array(data["heights"], dtype=float).reshape(data["shape"])
        hf = Heightfield(origin=tuple(data["origin"]), cell_size=data["cell_size"],
                         heights=heights, regolith=reg)
        hf.removed_mass = float(data["removed_mass"])
        return hf


def generate_terrain(extent: tuple[float, float], cell_size: float,
                     craters: list[tuple[tuple[float, float], float, float]] | None = None,
                     seed: int = 0, noise_amplitude: float = 0.0,
                     regolith: RegolithParams | None = None,
                     slope: tuple[float, float] = (0.0, 0.0)) -> Heightfield:
    """Build a heightfield centered on the origin.

    craters: list of ((cx, cy), radius, depth). Each crater is a parabolic
    depression with a raised rim: rim height 0.2*depth at the crater radius,
    decaying linearly to zero at 1.5x the radius.
    slope: optional (dz/dx, dz/dy) plane added to the whole field.
    """
    if noise_amplitude < 0 or noise_amplitude > 0.05:
        raise ValueError("noise_amplitude must be within [0, 0.05] m")
    ex, ey = extent
    nx = int(round(ex / cell_size)) + 1
    ny = int(round(ey / cell_size)) + 1
    x0, y0 = -ex / 2.0, -ey / 2.0
    xs = x0 + np.arange(nx) * cell_size
    ys = y0 + np.arange(ny) * cell_size
    gx, gy = np.meshgrid(xs, ys)

    heights = gx * slope[0] + gy * slope[1]

    if noise_amplitude > 0.0:
        rng = np.random.default_rng(seed)
        coarse_step = 8
        cny = ny // coarse_step + 2
        cnx = nx // coarse_step + 2
        coarse = rng.uniform(-noise_amplitude, noise_amplitude, size=(cny, cnx))
        fy = np.arange(ny) / coarse_step
        fx = np.arange(nx) / coarse_step
        iy = np.floor(fy).astype(int)
        ix = np.floor(fx).astype(int)
        vy = (fy - iy)[:, None]
        vx = (fx - ix)[None, :]
        noise = ((1 - vy) * (1 - vx) * coarse[np.ix_(iy, ix)]
                 + (1 - vy) * vx * coarse[np.ix_(iy, ix + 1)]
                 + vy * (1 - vx) * coarse[np.ix_(iy + 1, ix)]
                 + vy * vx * coarse[np.ix_(iy + 1, ix + 1)])
        heights = heights + noise

    for (cx, cy), radius, depth in craters or []:
        if not (x0 <= cx <= x0 + ex and y0 <= cy <= y0 + ey):
            raise CraterOutsideExtent((cx, cy))
        if radius <= 2 * cell_size:
            raise ValueError("crater radius must exceed 2 cells")
        if depth >= radius:
            raise ValueError("crater depth must be smaller than its radius")
        r = np.hypot(gx - cx, gy - cy)
        bowl = r <= radius
        rim = (r > radius) & (r <= 1.5 * radius)
        profile = np.zeros_like(heights)
        profile[bowl] = (-depth * (1.0 - (r[bowl] / radius) ** 2)
                         + 0.2 * depth * (r[bowl] / radius) ** 2)
        profile[rim] = 0.2 * depth * (1.0 - (r[rim] - radius) / (0.5 * radius))
        heights = heights + profile

    return Heightfield(origin=(x0, y0), cell_size=cell_size, heights=heights,
                       regolith=regolith or RegolithParams())
