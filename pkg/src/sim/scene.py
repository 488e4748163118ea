"""
Synthetic single-object tabletop scenes
"""

import math
from dataclasses import dataclass, field

import numpy as np

from src.grasping.camera import CameraModel, world_point_to_pixel
from src.utils.errors import ConfigurationError, GenerationError

MATERIALS = ("opaque", "specular", "transparent", "flat_textured")
SHAPES = ("box", "cylinder", "disk")


@dataclass
class SceneObject:
    """
    Primitive resting on the table

    dimensions: (size_x, size_y, height) in the object frame for boxes;
    (diameter, diameter, height) for cylinders and disks.
    """

    shape: str
    center: tuple
    yaw: float
    dimensions: tuple
    material: str
    albedo: tuple = (0.6, 0.6, 0.6)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigurationError(f"Unknown shape '{self.shape}'")
        if self.material not in MATERIALS:
            raise ConfigurationError(f"Unknown material '{self.material}'")
        if min(self.dimensions) <= 0:
            raise ConfigurationError(f"Object dimensions must be positive, got {self.dimensions}")

    @property
    def height(self):
        return float(self.dimensions[2])

    @property
    def is_round(self):
        return self.shape in ("cylinder", "disk")

    @property
    def radius(self):
        return float(self.dimensions[0]) / 2.0

    @property
    def minor_dimension(self):
        return float(min(self.dimensions[0], self.dimensions[1]))

    @property
    def minor_axis_yaw(self):
        """World yaw of the narrow footprint axis"""
        if self.is_round or self.dimensions[0] <= self.dimensions[1]:
            return self.yaw
        return self.yaw + math.pi / 2.0

    def to_local(self, x, y):
        """World xy -> object frame xy (arrays allowed)"""
        dx = np.asarray(x, dtype=np.float64) - self.center[0]
        dy = np.asarray(y, dtype=np.float64) - self.center[1]
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return c * dx + s * dy, -s * dx + c * dy

    def contains(self, x, y):
        """Footprint membership of world points"""
        lx, ly = self.to_local(x, y)
        if self.is_round:
            return lx * lx + ly * ly <= self.radius**2
        return (np.abs(lx) <= self.dimensions[0] / 2.0) & (np.abs(ly) <= self.dimensions[1] / 2.0)

    def footprint_area(self):
        if self.is_round:
            return math.pi * self.radius**2
        return float(self.dimensions[0] * self.dimensions[1])

    def outline(self):
        """World xy points on the footprint boundary"""
        if self.is_round:
            angles = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
            local = np.stack([self.radius * np.cos(angles), self.radius * np.sin(angles)], axis=1)
        else:
            hx, hy = self.dimensions[0] / 2.0, self.dimensions[1] / 2.0
            local = np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rotation = np.array([[c, -s], [s, c]])
        return local @ rotation.T + np.asarray(self.center)

    def to_dict(self):
        return {
            "shape": self.shape,
            "center_mm": [float(v) for v in self.center],
            "yaw_rad": float(self.yaw),
            "dimensions_mm": [float(v) for v in self.dimensions],
            "material": self.material,
        }


@dataclass
class Scene:
    objects: list
    camera: CameraModel
    table_albedo: tuple = (0.55, 0.45, 0.35)

    @property
    def target(self):
        return self.objects[0]


@dataclass
class CatalogParams:
    """Object catalog and camera used by generate_scene"""

    material_mix: dict = field(default_factory=lambda: {m: 0.25 for m in MATERIALS})
    height_range: tuple = (20.0, 150.0)
    flat_height_range: tuple = (2.0, 10.0)
    minor_range: tuple = (20.0, 80.0)
    major_max: float = 120.0
    workspace_radius: float = 120.0
    image_size: int = 300
    focal: float = 600.0
    camera_height: float = 1000.0
    margin_px: int = 8
    max_retries: int = 20

    def __post_init__(self):
        unknown = set(self.material_mix) - set(MATERIALS)
        if unknown:
            raise ConfigurationError(f"Unknown materials in mix: {sorted(unknown)}")
        if any(w < 0 for w in self.material_mix.values()) or sum(self.material_mix.values()) <= 0:
            raise ConfigurationError(f"Material mix weights must be >= 0 with a positive sum: {self.material_mix}")
        if not 2.0 <= self.flat_height_range[0] <= self.flat_height_range[1] <= 10.0:
            raise ConfigurationError(f"Flat objects must be 2-10 mm tall, got {self.flat_height_range}")
        if not 2.0 <= self.height_range[0] <= self.height_range[1] <= 150.0:
            raise ConfigurationError(f"Object heights must lie in 2-150 mm, got {self.height_range}")
        if not 20.0 <= self.minor_range[0] <= self.minor_range[1] <= self.major_max <= 120.0:
            raise ConfigurationError("Footprints must lie in 20-120 mm")

    def camera(self):
        return CameraModel.default(self.image_size, self.focal, self.camera_height)

    def probabilities(self):
        weights = np.array([self.material_mix.get(m, 0.0) for m in MATERIALS], dtype=np.float64)
        return weights / weights.sum()


def _random_albedo(rng, material):
    if material == "flat_textured":
        # saturated print colors so flat objects stand out in RGB
        base = rng.uniform(0.1, 0.35, size=3)
        base[rng.integers(3)] = rng.uniform(0.75, 0.95)
        return tuple(float(v) for v in base)
    return tuple(float(v) for v in rng.uniform(0.2, 0.9, size=3))


def _draw_object(rng, params, material):
    if material == "flat_textured":
        shape = "box" if rng.random() < 0.5 else "disk"
        height = rng.uniform(*params.flat_height_range)
    else:
        shape = "box" if rng.random() < 0.5 else "cylinder"
        height = rng.uniform(*params.height_range)
    minor = rng.uniform(*params.minor_range)
    if shape == "box":
        major = rng.uniform(minor, params.major_max)
        dims = (major, minor) if rng.random() < 0.5 else (minor, major)
    else:
        dims = (minor, minor)
    return shape, (float(dims[0]), float(dims[1]), float(height))


def _in_view(obj, camera, params):
    limit = params.image_size - 1 - params.margin_px
    for x, y in obj.outline():
        u, v, _ = world_point_to_pixel((x, y, obj.height), camera)
        if not (params.margin_px <= u <= limit and params.margin_px <= v <= limit):
            return False
    return True


def generate_scene(rng, params=None):
    """
    One isolated object at a random pose

    Args:
        rng (np.random.Generator): Scene randomness
        params (CatalogParams): Catalog ranges, material mixture and camera

    Returns:
        Scene: Object resting on the table (z = 0) fully inside the image

    Raises:
        GenerationError: If no placement fits after params.max_retries tries
    """
    params = params or CatalogParams()
    camera = params.camera()
    material = MATERIALS[int(rng.choice(len(MATERIALS), p=params.probabilities()))]
    shape, dims = _draw_object(rng, params, material)
    albedo = _random_albedo(rng, material)

    for _ in range(params.max_retries):
        center = tuple(float(v) for v in rng.uniform(-params.workspace_radius, params.workspace_radius, size=2))
        yaw = float(rng.uniform(-math.pi, math.pi))
        obj = SceneObject(shape, center, yaw, dims, material, albedo)
        if _in_view(obj, camera, params):
            return Scene(objects=[obj], camera=camera)
    raise GenerationError(f"Failed to place a {shape} in view after {params.max_retries} attempts")
