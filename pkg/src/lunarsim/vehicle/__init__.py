"""Rocker-bogie rover kinematics, ego camera, and proprioceptive sensors."""

from .camera import (CLASS_COLORS, CLASS_PALETTES, DEFAULT_OBJECT_SIZES,
                     SceneObject, count_class_pixels, image_to_png,
                     make_scene_objects, render_camera, target_visible)
from .rover import (CameraConfig, RoverConfig, RoverState, SolveFailed,
                    init_state, step, suspension_residuals, suspension_solve,
                    wheel_mounts_body)
from .sensors import SensorNoise, SensorReading, read_sensors

__all__ = [
    "CLASS_COLORS", "CLASS_PALETTES", "CameraConfig", "DEFAULT_OBJECT_SIZES",
    "RoverConfig", "RoverState", "SceneObject", "SensorNoise", "SensorReading",
    "SolveFailed", "count_class_pixels", "image_to_png", "init_state",
    "make_scene_objects", "read_sensors", "render_camera", "step",
    "suspension_residuals", "suspension_solve", "target_visible",
    "wheel_mounts_body",
]
