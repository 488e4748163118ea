"""
Ideal RGBD rendering of a scene by per-pixel ray casting

Depth is measured along the optical axis (camera z), in millimeters.
"""

import math
from dataclasses import dataclass

import numpy as np

_NO_HIT = np.inf
_CHECKER_MM = 40.0


@dataclass
class RenderResult:
    rgb: np.ndarray  # H x W x 3 uint8
    depth: np.ndarray  # H x W float32, true depth
    instance_mask: np.ndarray  # H x W int32, 0 = table, i + 1 = scene.objects[i]
    table_depth: np.ndarray  # H x W float32, depth of the table plane behind every pixel


def camera_rays(camera, shape):
    """
    World-frame ray origins and directions, scaled so the ray parameter is the
    depth along the optical axis

    Returns:
        tuple: (origin (3,), directions (H, W, 3))
    """
    height, width = shape
    v, u = np.mgrid[0:height, 0:width].astype(np.float64)
    directions = np.stack([(u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, np.ones_like(u)], axis=-1)
    return camera.translation.astype(np.float64), directions @ camera.rotation.T


def _table_hits(origin, directions):
    dz = directions[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dz < 0, -origin[2] / dz, _NO_HIT)
    return t


def _slab(origin, direction, low, high):
    """Entry and exit parameters of one axis slab"""
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (low - origin) / direction
        t2 = (high - origin) / direction
    parallel = np.abs(direction) < 1e-12
    inside = (origin >= low) & (origin <= high)
    t_near = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    t_far = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    return t_near, t_far


def _box_hits(obj, origin, directions):
    """Ray parameter and top-face flag for a yawed box standing on the table"""
    c, s = math.cos(obj.yaw), math.sin(obj.yaw)
    ox = c * (origin[0] - obj.center[0]) + s * (origin[1] - obj.center[1])
    oy = -s * (origin[0] - obj.center[0]) + c * (origin[1] - obj.center[1])
    dx = c * directions[..., 0] + s * directions[..., 1]
    dy = -s * directions[..., 0] + c * directions[..., 1]
    hx, hy = obj.dimensions[0] / 2.0, obj.dimensions[1] / 2.0

    near_x, far_x = _slab(np.full(dx.shape, ox), dx, -hx, hx)
    near_y, far_y = _slab(np.full(dy.shape, oy), dy, -hy, hy)
    near_z, far_z = _slab(np.full(dx.shape, origin[2]), directions[..., 2], 0.0, obj.height)
    t_enter = np.maximum(np.maximum(near_x, near_y), near_z)
    t_exit = np.minimum(np.minimum(far_x, far_y), far_z)
    hit = (t_enter <= t_exit) & (t_exit > 0) & np.isfinite(t_enter)
    top = hit & (near_z >= np.maximum(near_x, near_y))
    return np.where(hit, t_enter, _NO_HIT), top


def _cylinder_hits(obj, origin, directions):
    """Ray parameter and top-face flag for an upright cylinder or disk"""
    ox, oy = origin[0] - obj.center[0], origin[1] - obj.center[1]
    dx, dy, dz = directions[..., 0], directions[..., 1], directions[..., 2]
    r = obj.radius

    with np.errstate(divide="ignore", invalid="ignore"):
        t_top = np.where(np.abs(dz) > 1e-12, (obj.height - origin[2]) / dz, _NO_HIT)
    top_x, top_y = ox + t_top * dx, oy + t_top * dy
    top_hit = np.isfinite(t_top) & (t_top > 0) & (top_x**2 + top_y**2 <= r * r)

    a = dx * dx + dy * dy
    b = 2.0 * (ox * dx + oy * dy)
    cc = ox * ox + oy * oy - r * r
    disc = b * b - 4.0 * a * cc
    with np.errstate(divide="ignore", invalid="ignore"):
        t_side = np.where((disc >= 0) & (a > 1e-12), (-b - np.sqrt(np.maximum(disc, 0.0))) / (2.0 * a), _NO_HIT)
    z_side = origin[2] + t_side * dz
    side_hit = np.isfinite(t_side) & (t_side > 0) & (z_side >= 0.0) & (z_side <= obj.height)

    t_top = np.where(top_hit, t_top, _NO_HIT)
    t_side = np.where(side_hit, t_side, _NO_HIT)
    return np.minimum(t_top, t_side), top_hit & (t_top <= t_side)


def _table_color(scene, origin, directions, t_table):
    hit = np.isfinite(t_table)
    t = np.where(hit, t_table, 0.0)
    x = origin[0] + t * directions[..., 0]
    y = origin[1] + t * directions[..., 1]
    checker = (np.floor(x / _CHECKER_MM) + np.floor(y / _CHECKER_MM)) % 2
    shade = 0.9 + 0.1 * checker
    return shade[..., None] * np.asarray(scene.table_albedo)[None, None, :]


def render_ideal(scene, shape=None):
    """
    Render rgb, true depth and instance mask

    Args:
        scene (Scene): Scene with camera
        shape (tuple): (H, W); defaults to a square image spanning twice the principal point

    Returns:
        RenderResult: Images of the scene
    """
    camera = scene.camera
    if shape is None:
        shape = (int(round(2 * camera.cy + 1)), int(round(2 * camera.cx + 1)))
    origin, directions = camera_rays(camera, shape)

    t_table = _table_hits(origin, directions)
    depth = t_table.copy()
    instance = np.zeros(shape, dtype=np.int32)
    normal_z = np.ones(shape)
    table_rgb = _table_color(scene, origin, directions, t_table)
    rgb = table_rgb.copy()

    for index, obj in enumerate(scene.objects):
        if obj.is_round:
            t, top = _cylinder_hits(obj, origin, directions)
        else:
            t, top = _box_hits(obj, origin, directions)
        closer = t < depth
        depth = np.where(closer, t, depth)
        instance[closer] = index + 1
        normal_z[closer] = np.where(top[closer], 1.0, 0.0)
        shade = np.asarray(obj.albedo)[None, None, :] * (0.55 + 0.45 * normal_z[..., None])
        if obj.material == "transparent":
            shade = 0.35 * shade + 0.65 * table_rgb
        elif obj.material == "specular":
            shade = np.minimum(shade + 0.25 * normal_z[..., None], 1.0)
        rgb = np.where(closer[..., None], shade, rgb)

    depth = np.where(np.isfinite(depth), depth, 0.0)
    rgb = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    return RenderResult(
        rgb=rgb,
        depth=depth.astype(np.float32),
        instance_mask=instance,
        table_depth=np.where(np.isfinite(t_table), t_table, 0.0).astype(np.float32),
    )
