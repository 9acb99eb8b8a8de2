"""Decomposed PTZ camera model.

The projection of a world point factors into a fixed prior (camera center C
and tripod base rotation S) and a time-varying part driven by pan, tilt and
focal length.  Landmarks are rays: two angles (theta, phi) in the tripod
frame, which sidesteps the unobservable depth of a rotation-only camera.

Conventions:
  * angles in degrees everywhere; radians only inside trig calls
  * image origin top-left, x right, y down; principal point at the center
  * positive phi tilts the ray upward (toward smaller image y)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BehindCamera, Degenerate

DEG = math.pi / 180.0
DEPTH_EPS = kernels.DEPTH_EPS


@dataclass(frozen=True)
class ImageSize:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError(f"image size must be at least 2x2, got {self.width}x{self.height}")

    @property
    def cx(self) -> float:
        return self.width / 2.0

    @property
    def cy(self) -> float:
        return self.height / 2.0

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width and 0.0 <= y < self.height


@dataclass(frozen=True)
class CameraPose:
    """Pan and tilt in degrees, focal length in pixels."""

    pan: float
    tilt: float
    focal: float

    def __post_init__(self):
        if not (self.focal > 0):
            raise ValueError(f"focal must be positive, got {self.focal}")
        if not (-180.0 < self.pan <= 180.0):
            raise ValueError(f"pan must be in (-180, 180], got {self.pan}")
        if not (-90.0 < self.tilt < 90.0):
            raise ValueError(f"tilt must be in (-90, 90), got {self.tilt}")


@dataclass(frozen=True)
class Ray:
    """A landmark: direction angles (degrees) in the tripod frame."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (-90.0 < self.theta < 90.0) or not (-90.0 < self.phi < 90.0):
            raise ValueError(f"ray angles must lie in (-90, 90), got ({self.theta}, {self.phi})")


@dataclass(frozen=True)
class Pixel:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"pixel coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True, eq=False)
class PtzBase:
    """Fixed prior of the camera: world center C and base rotation S."""

    camera_center: np.ndarray
    base_rotation: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.camera_center, dtype=np.float64).reshape(3)
        s = np.asarray(self.base_rotation, dtype=np.float64).reshape(3, 3)
        if np.max(np.abs(s @ s.T - np.eye(3))) > 1e-9 or abs(np.linalg.det(s) - 1.0) > 1e-9:
            raise ValueError("base_rotation must be orthonormal with determinant +1")
        object.__setattr__(self, "camera_center", c)
        object.__setattr__(self, "base_rotation", s)


def intrinsic_matrix(pose: CameraPose, size: ImageSize) -> np.ndarray:
    """K with square pixels and the principal point at the image center."""
    return np.array(
        [
            [pose.focal, 0.0, size.cx],
            [0.0, pose.focal, size.cy],
            [0.0, 0.0, 1.0],
        ]
    )


def rotation_pan(pan_deg: float) -> np.ndarray:
    """Q_theta: pan rotation (about the tripod vertical axis)."""
    c, s = math.cos(pan_deg * DEG), math.sin(pan_deg * DEG)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rotation_tilt(tilt_deg: float) -> np.ndarray:
    """Q_phi: tilt rotation (about the camera x axis)."""
    c, s = math.cos(tilt_deg * DEG), math.sin(tilt_deg * DEG)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def rotation_pan_tilt(pose: CameraPose) -> np.ndarray:
    """Composed camera-from-tripod rotation Q_phi @ Q_theta."""
    return rotation_tilt(pose.tilt) @ rotation_pan(pose.pan)


def ray_direction(theta_deg: float, phi_deg: float) -> np.ndarray:
    """Unit tripod-frame direction of a ray (normalized Z=1-plane point)."""
    t, p = theta_deg * DEG, phi_deg * DEG
    return np.array(
        [math.sin(t) * math.cos(p), -math.sin(p), math.cos(t) * math.cos(p)]
    )


def direction_to_ray(direction: np.ndarray) -> Ray:
    """Angles of a tripod-frame direction; requires positive z (forward)."""
    x, y, z = float(direction[0]), float(direction[1]), float(direction[2])
    if z <= DEPTH_EPS * max(1.0, abs(x), abs(y)):
        raise BehindCamera(f"direction has non-positive depth: {direction}")
    theta = math.atan2(x, z) / DEG
    phi = math.atan2(-y, math.hypot(x, z)) / DEG
    return Ray(theta, phi)


def pose_axis(pose: CameraPose) -> np.ndarray:
    """Unit optical-axis direction in the tripod frame."""
    return ray_direction(pose.pan, pose.tilt)


def angle_between_rays(a: Ray, b: Ray) -> float:
    """Great-circle angle (degrees) between two ray directions."""
    d = float(np.dot(ray_direction(a.theta, a.phi), ray_direction(b.theta, b.phi)))
    return math.acos(min(1.0, max(-1.0, d))) / DEG


def project_ray(pose: CameraPose, size: ImageSize, ray: Ray) -> Pixel:
    """Project one ray; raises BehindCamera when its depth is <= 1e-9."""
    px, valid = kernels.project_rays(
        pose.pan, pose.tilt, pose.focal, size.cx, size.cy,
        np.array([ray.theta]), np.array([ray.phi]),
    )
    if not valid[0]:
        raise BehindCamera(f"ray {ray} is behind the camera at pose {pose}")
    return Pixel(float(px[0, 0]), float(px[0, 1]))


def project_rays(pose: CameraPose, size: ImageSize, theta: np.ndarray, phi: np.ndarray):
    """Batch variant: returns (pixels[N,2], valid[N])."""
    return kernels.project_rays(
        pose.pan, pose.tilt, pose.focal, size.cx, size.cy,
        np.asarray(theta, dtype=np.float64), np.asarray(phi, dtype=np.float64),
    )


def back_project(pose: CameraPose, size: ImageSize, pixel: Pixel) -> Ray:
    """Invert project_ray for one pixel at a known pose."""
    rays, valid = kernels.back_project_pixels(
        pose.pan, pose.tilt, pose.focal, size.cx, size.cy,
        np.array([pixel.x]), np.array([pixel.y]),
    )
    if not valid[0]:
        raise BehindCamera(f"pixel {pixel} back-projects behind the camera at pose {pose}")
    return Ray(float(rays[0, 0]), float(rays[0, 1]))


def back_project_pixels(pose: CameraPose, size: ImageSize, xs: np.ndarray, ys: np.ndarray):
    """Batch variant: returns (rays[N,2], valid[N])."""
    return kernels.back_project_pixels(
        pose.pan, pose.tilt, pose.focal, size.cx, size.cy,
        np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64),
    )


def world_point_to_ray(base: PtzBase, point: np.ndarray) -> Ray:
    """Tripod-frame ray of a world point: angles of S @ (point - C)."""
    d = base.base_rotation @ (np.asarray(point, dtype=np.float64) - base.camera_center)
    return direction_to_ray(d)


def project_world_point(base: PtzBase, pose: CameraPose, size: ImageSize, point: np.ndarray) -> Pixel:
    """Full projection K Qphi Qtheta S [I|-C]; raises BehindCamera."""
    return project_ray(pose, size, world_point_to_ray(base, point))


def relative_homography(pose_a: CameraPose, pose_b: CameraPose, size: ImageSize) -> np.ndarray:
    """Homography sending frame-a pixels of a ray to frame-b pixels.

    H = K_b R_b R_a^T K_a^{-1}, normalized so H[2,2] = 1.
    """
    kb = intrinsic_matrix(pose_b, size)
    ka_inv = np.array(
        [
            [1.0 / pose_a.focal, 0.0, -size.cx / pose_a.focal],
            [0.0, 1.0 / pose_a.focal, -size.cy / pose_a.focal],
            [0.0, 0.0, 1.0],
        ]
    )
    h = kb @ rotation_pan_tilt(pose_b) @ rotation_pan_tilt(pose_a).T @ ka_inv
    if abs(h[2, 2]) < 1e-12:
        raise Degenerate("relative homography has a vanishing normalization element")
    return h / h[2, 2]


def apply_homography(h: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Map pixels through a homography: returns (points[N,2], valid[N])."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    w = h[2, 0] * xs + h[2, 1] * ys + h[2, 2]
    valid = np.abs(w) > 1e-12
    safe = np.where(valid, w, 1.0)
    u = np.where(valid, (h[0, 0] * xs + h[0, 1] * ys + h[0, 2]) / safe, np.nan)
    v = np.where(valid, (h[1, 0] * xs + h[1, 1] * ys + h[1, 2]) / safe, np.nan)
    return np.stack([u, v], axis=-1), valid
