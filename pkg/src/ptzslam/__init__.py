"""PTZ camera SLAM: ray-landmark EKF tracking, online pan-tilt forest
relocalization, and a deterministic synthetic benchmark suite."""

__version__ = "0.1.0"

from .ptz_camera import CameraPose, ImageSize, Pixel, PtzBase, Ray  # noqa: F401
