"""
Pinhole camera model and pixel <-> world transforms

World frame: z up, z = 0 on the table plane. The pose maps camera coordinates
(x right, y down, z along the optical axis) into the world frame.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from src.utils.errors import ConfigurationError, GeometryError


def top_down_pose(height_mm, yaw=0.0, tilt=0.0):
    """
    Camera-to-world pose for a camera looking at the table from above

    Args:
        height_mm (float): Camera center height above the table
        yaw (float): In-plane rotation of the image axes (radians)
        tilt (float): Rotation of the optical axis away from straight down, about world x

    Returns:
        np.ndarray: 4 x 4 rigid transform
    """
    looking_down = np.diag([1.0, -1.0, -1.0])
    cy, sy = math.cos(yaw), math.sin(yaw)
    ct, st = math.cos(tilt), math.sin(tilt)
    yaw_rot = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    tilt_rot = np.array([[1.0, 0.0, 0.0], [0.0, ct, -st], [0.0, st, ct]])
    pose = np.eye(4)
    pose[:3, :3] = yaw_rot @ tilt_rot @ looking_down
    pose[:3, 3] = [0.0, 0.0, height_mm]
    return pose


@dataclass
class CameraModel:
    """Intrinsics, camera-to-world pose and table depth along the optical axis"""

    fx: float
    fy: float
    cx: float
    cy: float
    pose: np.ndarray = field(default_factory=lambda: top_down_pose(1000.0))
    d_t: float = 1000.0

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=np.float64)
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError(f"Focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.pose.shape != (4, 4):
            raise GeometryError(f"Camera pose must be 4 x 4, got {self.pose.shape}")
        rotation = self.pose[:3, :3]
        if not np.allclose(rotation @ rotation.T, np.eye(3), atol=1e-6) or np.linalg.det(rotation) < 0:
            raise GeometryError("Camera pose rotation is not a proper rigid rotation")

    @classmethod
    def default(cls, image_size=300, focal=600.0, height_mm=1000.0):
        """Top-down camera centered over the workspace"""
        center = (image_size - 1) / 2.0
        return cls(fx=focal, fy=focal, cx=center, cy=center, pose=top_down_pose(height_mm), d_t=height_mm)

    @property
    def rotation(self):
        return self.pose[:3, :3]

    @property
    def translation(self):
        return self.pose[:3, 3]

    @property
    def optical_axis_tilt(self):
        """Angle between the optical axis and world -z (radians)"""
        axis = self.rotation[:, 2]
        return math.acos(max(-1.0, min(1.0, -axis[2])))

    def to_dict(self):
        return {
            "fx": float(self.fx),
            "fy": float(self.fy),
            "cx": float(self.cx),
            "cy": float(self.cy),
            "pose": [float(v) for v in self.pose.reshape(-1)],
        }

    @classmethod
    def from_dict(cls, values, d_t):
        pose = np.asarray(values["pose"], dtype=np.float64).reshape(4, 4)
        return cls(
            fx=float(values["fx"]),
            fy=float(values["fy"]),
            cx=float(values["cx"]),
            cy=float(values["cy"]),
            pose=pose,
            d_t=float(d_t),
        )


@dataclass
class WorldGrasp:
    """Grasp in the world frame (millimeters, radians)"""

    x_w: float
    y_w: float
    z_w: float
    theta_w: float
    w_w: float
    q: float


def normalize_angle(theta):
    """Wrap an angle into the principal interval (-pi/2, pi/2]"""
    theta = math.fmod(theta, math.pi)
    if theta > math.pi / 2:
        theta -= math.pi
    elif theta <= -math.pi / 2:
        theta += math.pi
    return theta


def camera_point(u, v, z_depth, camera):
    """Back-project a full-frame pixel at the given depth into camera coordinates"""
    if z_depth <= 0:
        raise GeometryError(f"Back-projection needs positive depth, got {z_depth}")
    return np.array([(u - camera.cx) * z_depth / camera.fx, (v - camera.cy) * z_depth / camera.fy, z_depth])


def image_to_world_angle(theta_p, camera):
    """World yaw of an image-plane grasp axis"""
    # Image angles are measured with y up, so the pixel direction is (cos, -sin).
    direction = camera.rotation @ np.array([math.cos(theta_p), -math.sin(theta_p), 0.0])
    return normalize_angle(math.atan2(direction[1], direction[0]))


def world_to_image_angle(theta_w, camera):
    direction = camera.rotation.T @ np.array([math.cos(theta_w), math.sin(theta_w), 0.0])
    return normalize_angle(math.atan2(-direction[1], direction[0]))


def pixel_to_world(g_p, z_depth, camera, crop_offset=(0, 0)):
    """
    Transform an image grasp into the world frame

    Args:
        g_p (ImageGrasp): Grasp in crop pixel coordinates
        z_depth (float): Depth along the optical axis at the grasp (mm)
        camera (CameraModel): Camera intrinsics and pose
        crop_offset (tuple): (row, col) of the crop inside the full frame

    Returns:
        WorldGrasp: Grasp in world coordinates

    Raises:
        GeometryError: If z_depth is not positive
    """
    row, col = crop_offset
    point_c = camera_point(g_p.x_p + col, g_p.y_p + row, z_depth, camera)
    point_w = camera.rotation @ point_c + camera.translation
    return WorldGrasp(
        x_w=float(point_w[0]),
        y_w=float(point_w[1]),
        z_w=float(max(0.0, point_w[2])),
        theta_w=image_to_world_angle(g_p.theta_p, camera),
        w_w=float(g_p.w_p * z_depth / camera.fx),
        q=float(g_p.q),
    )


def world_point_to_pixel(point_w, camera, crop_offset=(0, 0)):
    """
    Project a world point

    Returns:
        tuple: (x_p, y_p, z_depth) in crop pixel coordinates
    """
    point_c = camera.rotation.T @ (np.asarray(point_w, dtype=np.float64) - camera.translation)
    if point_c[2] <= 0:
        raise GeometryError(f"World point {point_w} is behind the camera")
    row, col = crop_offset
    u = camera.fx * point_c[0] / point_c[2] + camera.cx
    v = camera.fy * point_c[1] / point_c[2] + camera.cy
    return float(u - col), float(v - row), float(point_c[2])


def world_to_pixel(g_w, camera, crop_offset=(0, 0)):
    """
    Inverse of pixel_to_world for a grasp above the table

    Returns:
        tuple: (x_p, y_p, z_depth, theta_p, w_p)
    """
    x_p, y_p, z_depth = world_point_to_pixel((g_w.x_w, g_w.y_w, g_w.z_w), camera, crop_offset)
    theta_p = world_to_image_angle(g_w.theta_w, camera)
    return x_p, y_p, z_depth, theta_p, g_w.w_w * camera.fx / z_depth


def require_top_down(camera, max_tilt=math.radians(15.0)):
    """Refuse cameras whose optical axis is too far from straight down"""
    if camera.optical_axis_tilt > max_tilt:
        raise ConfigurationError(
            f"Optical axis is {math.degrees(camera.optical_axis_tilt):.1f} deg from vertical; "
            f"grasp angles need a top-down camera (<= {math.degrees(max_tilt):.0f} deg)"
        )
