"""Flat-shaded ego camera: sky band, terrain ground, billboard targets.

Targets render as depth-sorted billboards sized by 1/distance (painter's
algorithm); each target class has a unique primary color so tests can
count class pixels. `target_visible` is the matching geometric oracle:
frustum plus occlusion by nearer billboards, computed on the same integer
pixel rectangles the renderer fills.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ..terrain import Heightfield, SunConfig
from .rover import CameraConfig, RoverState, _body_rotation

# class palettes (RGB): primary fill + decoration colors, unique per class so
# rendered pixels are attributable to exactly one target
CLASS_COLORS = {
    "Astronaut": (40, 90, 220),    # blue spacesuit
    "Antenna": (185, 185, 190),    # light grey dish
    "Rover": (210, 175, 90),       # tan body box
    "Rock": (110, 105, 100),       # dark grey boulder
}
CLASS_PALETTES = {
    "Astronaut": ((40, 90, 220), (200, 215, 235)),   # suit + helmet
    "Antenna": ((185, 185, 190), (90, 90, 95)),      # dish + hub
    "Rover": ((210, 175, 90), (30, 28, 26)),         # body + wheels
    "Rock": ((110, 105, 100),),
}
_SKY = (8, 8, 10)
_SHADOW = (20, 20, 22)
_MIN_DEPTH = 0.15


@dataclass(frozen=True)
class SceneObject:
    kind: str                      # one of CLASS_COLORS
    position: tuple[float, float]  # world x, y (base on the ground)
    width: float = 1.5
    height: float = 1.5


DEFAULT_OBJECT_SIZES = {
    "Astronaut": (0.7, 1.9),
    "Antenna": (2.6, 2.6),
    "Rover": (2.2, 1.2),
    "Rock": (1.9, 1.3),
}


def make_scene_objects(positions: dict[str, tuple[float, float]]) -> list[SceneObject]:
    return [SceneObject(kind=k, position=tuple(p),
                        width=DEFAULT_OBJECT_SIZES[k][0],
                        height=DEFAULT_OBJECT_SIZES[k][1])
            for k, p in positions.items()]


def _camera_basis(state: RoverState, cfg: CameraConfig):
    rot = _body_rotation(state.heading, state.pitch, state.roll)
    x, y, z = state.position
    cam = (x + rot[0][2] * cfg.mount_height,
           y + rot[1][2] * cfg.mount_height,
           z + rot[2][2] * cfg.mount_height)
    return cam, rot


def _project(point, cam, rot, cfg: CameraConfig):
    """Image (u, v, depth); None when behind the near plane."""
    dx = point[0] - cam[0]
    dy = point[1] - cam[1]
    dz = point[2] - cam[2]
    # world -> camera: transpose of the body rotation
    fwd = rot[0][0] * dx + rot[1][0] * dy + rot[2][0] * dz
    left = rot[0][1] * dx + rot[1][1] * dy + rot[2][1] * dz
    up = rot[0][2] * dx + rot[1][2] * dy + rot[2][2] * dz
    if fwd < _MIN_DEPTH:
        return None
    f = (cfg.width / 2.0) / math.tan(cfg.horizontal_fov / 2.0)
    u = cfg.width / 2.0 - f * (left / fwd)
    v = cfg.height / 2.0 - f * (up / fwd)
    return u, v, fwd


def _billboard_rect(obj: SceneObject, ground_z: float, cam, rot, cfg: CameraConfig):
    """Integer pixel rect (u0, u1, v0, v1, depth) or None if off screen."""
    base = (obj.position[0], obj.position[1], ground_z)
    center = (base[0], base[1], ground_z + obj.height / 2.0)
    p = _project(center, cam, rot, cfg)
    if p is None:
        return None
    u, v, depth = p
    f = (cfg.width / 2.0) / math.tan(cfg.horizontal_fov / 2.0)
    half_w = 0.5 * f * obj.width / depth
    half_h = 0.5 * f * obj.height / depth
    u0 = int(math.floor(u - half_w))
    u1 = int(math.ceil(u + half_w))
    v0 = int(math.floor(v - half_h))
    v1 = int(math.ceil(v + half_h))
    u0c, u1c = max(0, u0), min(cfg.width, u1)
    v0c, v1c = max(0, v0), min(cfg.height, v1)
    if u0c >= u1c or v0c >= v1c:
        return None
    return u0c, u1c, v0c, v1c, depth


def render_camera(state: RoverState, objects: list[SceneObject],
                  terrain: Heightfield, sun: SunConfig | None,
                  cfg: CameraConfig | None = None) -> np.ndarray:
    """Deterministic uint8 image: (H, W, 3) for rgb, (H, W) for gray."""
    cfg = cfg or CameraConfig()
    W, H = cfg.width, cfg.height
    cam, rot = _camera_basis(state, cfg)
    f = (W / 2.0) / math.tan(cfg.horizontal_fov / 2.0)

    img = np.empty((H, W, 3), dtype=np.uint8)
    img[:, :] = _SKY

    # ground plane at the height under the rover (desk-scale approximation)
    try:
        ground_z = terrain.height_at(state.position[0], state.position[1])
    except Exception:
        ground_z = 0.0

    us, vs = np.meshgrid(np.arange(W) + 0.5, np.arange(H) + 0.5)
    # pixel ray directions in world coordinates
    d_fwd = np.ones_like(us)
    d_left = (W / 2.0 - us) / f
    d_up = (H / 2.0 - vs) / f
    dx = rot[0][0] * d_fwd + rot[0][1] * d_left + rot[0][2] * d_up
    dy = rot[1][0] * d_fwd + rot[1][1] * d_left + rot[1][2] * d_up
    dz = rot[2][0] * d_fwd + rot[2][1] * d_left + rot[2][2] * d_up
    hits = dz < -1e-6
    t = np.where(hits, (ground_z - cam[2]) / np.where(hits, dz, -1.0), np.inf)
    gx = cam[0] + t * dx
    gy = cam[1] + t * dy

    xmin, ymin, xmax, ymax = terrain.extent
    inside = hits & (gx >= xmin) & (gx <= xmax) & (gy >= ymin) & (gy <= ymax)
    shade = np.zeros_like(us)
    if np.any(inside):
        h, nz = _sample_grid(terrain, gx[inside], gy[inside])
        sun_cfg = sun or SunConfig()
        sx = math.cos(sun_cfg.elevation) * math.cos(sun_cfg.azimuth)
        sy = math.cos(sun_cfg.elevation) * math.sin(sun_cfg.azimuth)
        sz = math.sin(sun_cfg.elevation)
        # normals from the sampled gradient
        lam = np.clip(nz[:, 0] * sx + nz[:, 1] * sy + nz[:, 2] * sz, 0.0, 1.0)
        fade = np.clip(1.0 - t[inside] / 120.0, 0.25, 1.0)
        rel = np.clip((h - ground_z) * 1.5, -0.5, 0.5)
        shade_vals = (0.35 + 0.55 * lam) * fade * (1.0 + rel)
        shade[inside] = np.clip(shade_vals, 0.05, 1.3)
        base = np.array([150.0, 145.0, 138.0])
        img[inside] = np.clip(shade[inside, None] * base[None, :], 0, 255).astype(np.uint8)

    # hard ground shadows, cast away from the sun
    if sun is not None and sun.elevation > 1e-3:
        shadow_len = {}
        for obj in objects:
            shadow_len[obj.kind] = min(obj.height / math.tan(sun.elevation), 12.0)
        for obj in objects:
            ox = obj.position[0] - math.cos(sun.azimuth) * shadow_len[obj.kind] / 2.0
            oy = obj.position[1] - math.sin(sun.azimuth) * shadow_len[obj.kind] / 2.0
            cast = SceneObject(kind=obj.kind, position=(ox, oy),
                               width=obj.width, height=0.02)
            rect = _billboard_rect(cast, ground_z, cam, rot, cfg)
            if rect is not None:
                u0, u1, v0, v1, _ = rect
                region = img[v0:v1, u0:u1]
                ground_mask = inside[v0:v1, u0:u1]
                region[ground_mask] = _SHADOW

    # billboards, far to near
    order = []
    for obj in objects:
        rect = _billboard_rect(obj, ground_z, cam, rot, cfg)
        if rect is not None:
            order.append((rect[4], obj, rect))
    order.sort(key=lambda item: -item[0])
    for _depth, obj, rect in order:
        u0, u1, v0, v1, _ = rect
        color = CLASS_COLORS[obj.kind]
        img[v0:v1, u0:u1] = color
        _decorate(img, obj.kind, u0, u1, v0, v1)

    if cfg.channels == "gray":
        gray = (0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2])
        return gray.astype(np.uint8)
    return img


def _decorate(img: np.ndarray, kind: str, u0: int, u1: int, v0: int, v1: int):
    """Secondary features inside the billboard, in the class palette only."""
    w, h = u1 - u0, v1 - v0
    if w < 4 or h < 4:
        return
    if kind == "Rover":
        wheel_h = max(1, h // 4)
        wheel_w = max(1, w // 5)
        img[v1 - wheel_h:v1, u0:u0 + wheel_w] = CLASS_PALETTES["Rover"][1]
        img[v1 - wheel_h:v1, u1 - wheel_w:u1] = CLASS_PALETTES["Rover"][1]
    elif kind == "Antenna":
        cu = (u0 + u1) // 2
        img[v0 + h // 3:v0 + h // 3 + max(1, h // 8),
            cu - max(1, w // 10):cu + max(1, w // 10)] = CLASS_PALETTES["Antenna"][1]
    elif kind == "Astronaut":
        cu = (u0 + u1) // 2
        hw = max(1, w // 5)
        img[v0:v0 + max(1, h // 5), cu - hw:cu + hw] = CLASS_PALETTES["Astronaut"][1]


def _sample_grid(terrain: Heightfield, xs: np.ndarray, ys: np.ndarray):
    """Vectorized bilinear height + unit normal for ground shading."""
    hgrid = terrain.heights
    ny, nx = hgrid.shape
    cell = terrain.cell_size
    gx = np.clip((xs - terrain.origin[0]) / cell, 0, nx - 1 - 1e-9)
    gy = np.clip((ys - terrain.origin[1]) / cell, 0, ny - 1 - 1e-9)
    ix = gx.astype(int)
    iy = gy.astype(int)
    u = gx - ix
    v = gy - iy
    h = ((1 - u) * (1 - v) * hgrid[iy, ix] + u * (1 - v) * hgrid[iy, ix + 1]
         + (1 - u) * v * hgrid[iy + 1, ix] + u * v * hgrid[iy + 1, ix + 1])
    dhdx = ((1 - v) * (hgrid[iy, ix + 1] - hgrid[iy, ix])
            + v * (hgrid[iy + 1, ix + 1] - hgrid[iy + 1, ix])) / cell
    dhdy = ((1 - u) * (hgrid[iy + 1, ix] - hgrid[iy, ix])
            + u * (hgrid[iy + 1, ix + 1] - hgrid[iy, ix + 1])) / cell
    norm = np.sqrt(dhdx ** 2 + dhdy ** 2 + 1.0)
    normals = np.stack([-dhdx / norm, -dhdy / norm, 1.0 / norm], axis=-1)
    return h, normals


def count_class_pixels(img: np.ndarray, kind: str) -> int:
    if img.ndim != 3:
        raise ValueError("class pixels are only countable on rgb images")
    total = 0
    for color in CLASS_PALETTES[kind]:
        c = np.array(color, dtype=np.uint8)
        total += int(np.sum(np.all(img == c[None, None, :], axis=-1)))
    return total


def target_visible(state: RoverState, target_kind: str,
                   objects: list[SceneObject], terrain: Heightfield,
                   cfg: CameraConfig | None = None) -> bool:
    """Frustum + occlusion oracle, exact on the renderer's pixel rects."""
    cfg = cfg or CameraConfig()
    cam, rot = _camera_basis(state, cfg)
    try:
        ground_z = terrain.height_at(state.position[0], state.position[1])
    except Exception:
        ground_z = 0.0

    target = next((o for o in objects if o.kind == target_kind), None)
    if target is None:
        return False
    rect = _billboard_rect(target, ground_z, cam, rot, cfg)
    if rect is None:
        return False
    u0, u1, v0, v1, depth = rect

    visible = np.ones((v1 - v0, u1 - u0), dtype=bool)
    for other in objects:
        if other.kind == target_kind:
            continue
        orect = _billboard_rect(other, ground_z, cam, rot, cfg)
        if orect is None or orect[4] >= depth:
            continue
        ou0, ou1, ov0, ov1, _ = orect
        iu0, iu1 = max(u0, ou0), min(u1, ou1)
        iv0, iv1 = max(v0, ov0), min(v1, ov1)
        if iu0 < iu1 and iv0 < iv1:
            visible[iv0 - v0:iv1 - v0, iu0 - u0:iu1 - u0] = False
    return bool(np.any(visible))


def image_to_png(img: np.ndarray) -> bytes:
    from PIL import Image
    mode = "RGB" if img.ndim == 3 else "L"
    buf = io.BytesIO()
    Image.fromarray(img, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
