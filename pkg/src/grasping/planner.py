"""
Height-gated soft grasping primitives

Primitive selection compares the predicted height h* and the measured height
h_m against the threshold h_c. Flat/small objects are grasped by pressing the
compliant fingers onto the table and closing while retreating; normal-sized
objects are grasped at an adapted height z2.
"""

import json
from dataclasses import dataclass
from enum import Enum

from src.grasping.camera import pixel_to_world, require_top_down
from src.nn.network import HEIGHT_SCALE_MM
from src.utils.errors import ConfigurationError, PlanConsistencyError

# Tolerance for the z_grasp <= z1 + h* cap
_CAP_TOLERANCE = 1e-6


class PrimitiveKind(str, Enum):
    FLAT_SMALL = "FlatSmall"
    NORMAL_SIZED = "NormalSized"
    DIRECT = "Direct"  # baseline: grasp height read straight from the depth map


@dataclass
class PlannerConfig:
    """Primitive threshold and grasp heights (mm)"""

    h_c: float = 15.0
    z1: float = 5.0
    z_pre: float = 150.0
    clearance: float = 50.0

    def __post_init__(self):
        if not 0 < self.z1 < self.z_pre:
            raise ConfigurationError(f"Planner needs 0 < z1 < z_pre, got z1={self.z1}, z_pre={self.z_pre}")
        if self.h_c <= 0:
            raise ConfigurationError(f"Primitive threshold h_c must be positive, got {self.h_c}")
        if self.clearance <= 0:
            raise ConfigurationError(f"Approach clearance must be positive, got {self.clearance}")


@dataclass
class Waypoint:
    x_mm: float
    y_mm: float
    z_mm: float


@dataclass
class GraspPlan:
    """Approach, grasp and retreat waypoints plus gripper commands"""

    primitive: PrimitiveKind
    approach: Waypoint
    grasp: Waypoint
    retreat: Waypoint
    theta_w: float
    open_width_mm: float
    close_on_retreat: bool
    h_star: float = 0.0
    h_m: float = 0.0
    inpainted: bool = False

    @property
    def z_grasp(self):
        return self.grasp.z_mm

    @property
    def z_pre(self):
        return self.approach.z_mm

    def to_dict(self):
        return {
            "primitive": self.primitive.value,
            "waypoints": [
                {"x_mm": float(w.x_mm), "y_mm": float(w.y_mm), "z_mm": float(w.z_mm)}
                for w in (self.approach, self.grasp, self.retreat)
            ],
            "theta_rad": float(self.theta_w),
            "open_width_mm": float(self.open_width_mm),
            "close_on_retreat": bool(self.close_on_retreat),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, values):
        approach, grasp, retreat = (Waypoint(**w) for w in values["waypoints"])
        return cls(
            primitive=PrimitiveKind(values["primitive"]),
            approach=approach,
            grasp=grasp,
            retreat=retreat,
            theta_w=float(values["theta_rad"]),
            open_width_mm=float(values["open_width_mm"]),
            close_on_retreat=bool(values["close_on_retreat"]),
        )


def measured_height(depth, pixel, d_t):
    """
    Height of the sensed surface above the table: max(0, d_t - I_d(pixel))

    Args:
        depth (np.ndarray): Depth image (mm)
        pixel (tuple): (x, y)
        d_t (float): Table depth (mm)
    """
    x, y = (int(round(c)) for c in pixel)
    return max(0.0, float(d_t) - float(depth[y, x]))


def select_primitive(h_star, h_m, h_c):
    """FlatSmall iff max(h*, h_m) < h_c"""
    if max(h_star, h_m) < h_c:
        return PrimitiveKind.FLAT_SMALL
    return PrimitiveKind.NORMAL_SIZED


def _assemble(primitive, g_p, z_grasp, camera, crop_offset, config, close_on_retreat, h_star, h_m, inpainted):
    z_depth = camera.d_t - min(max(h_star, 0.0), HEIGHT_SCALE_MM)
    g_w = pixel_to_world(g_p, z_depth, camera, crop_offset)
    z_approach = max(config.z_pre, z_grasp + config.clearance)
    plan = GraspPlan(
        primitive=primitive,
        approach=Waypoint(g_w.x_w, g_w.y_w, z_approach),
        grasp=Waypoint(g_w.x_w, g_w.y_w, z_grasp),
        retreat=Waypoint(g_w.x_w, g_w.y_w, z_approach),
        theta_w=g_w.theta_w,
        open_width_mm=g_w.w_w,
        close_on_retreat=close_on_retreat,
        h_star=h_star,
        h_m=h_m,
        inpainted=inpainted,
    )
    if not plan.z_pre > plan.z_grasp >= 0:
        raise PlanConsistencyError(f"Plan violates z_pre > z_grasp >= 0: {plan.z_pre} vs {plan.z_grasp}")
    return plan


def plan_grasp(g_p, depth, camera, config=None, valid_mask=None, crop_offset=(0, 0)):
    """
    Choose a primitive and emit its plan

    Args:
        g_p (ImageGrasp): Best grasp in crop coordinates
        depth (np.ndarray): Inpainted depth crop (mm)
        camera (CameraModel): Camera with table depth d_t
        config (PlannerConfig): Thresholds and heights
        valid_mask (np.ndarray): Sensor validity of the crop before inpainting
        crop_offset (tuple): Crop position in the full frame

    Returns:
        GraspPlan: Executable plan
    """
    config = config or PlannerConfig()
    require_top_down(camera)
    h_star = max(0.0, float(g_p.h_star))
    pixel = (g_p.x_p, g_p.y_p)
    h_m = measured_height(depth, pixel, camera.d_t)
    x, y = (int(round(c)) for c in pixel)
    inpainted = valid_mask is not None and not bool(valid_mask[y, x])

    primitive = select_primitive(h_star, h_m, config.h_c)
    if primitive is PrimitiveKind.FLAT_SMALL:
        return _assemble(primitive, g_p, config.z1, camera, crop_offset, config, True, h_star, h_m, inpainted)

    if inpainted:
        z2 = config.z1 + h_star
    else:
        z2 = min(config.z1 + h_star, config.z1 + h_m)
    if z2 > config.z1 + h_star + _CAP_TOLERANCE:
        raise PlanConsistencyError(f"Adapted height {z2} exceeds the collision cap z1 + h*")
    return _assemble(primitive, g_p, z2, camera, crop_offset, config, False, h_star, h_m, inpainted)


def plan_direct(g_p, depth, camera, config=None, crop_offset=(0, 0)):
    """
    Baseline plan without primitives or predicted height

    The grasp height is the measured height at the grasp pixel, read straight
    from the given depth map; invalid (zero) depth reads as d_t above the table.
    """
    config = config or PlannerConfig()
    require_top_down(camera)
    h_m = measured_height(depth, (g_p.x_p, g_p.y_p), camera.d_t)
    return _assemble(PrimitiveKind.DIRECT, g_p, h_m, camera, crop_offset, config, False, h_m, h_m, False)

