"""
Geometric grasp-success oracle

A plan succeeds on an object when all of the following hold:
  (a) the opening fits the gripper, both fingertips start outside the footprint
      and the closing line between them crosses it;
  (b) the grasp height is on or above the table and no more than the
      compliance band above the object top;
  (c) a FlatSmall plan on an object thinner than the fingers must close on retreat.
"""

import math
from dataclasses import dataclass

import numpy as np

from src.grasping.planner import PrimitiveKind
from src.utils.errors import ParameterError

# Samples along the closing line when testing for footprint crossing.
_LINE_SAMPLES = 257

FAILURE_REASONS = (
    "opening_too_wide",
    "below_table",
    "no_contact",
    "misses_object",
    "finger_on_object",
    "thin_object_not_lifted",
)


@dataclass
class GripperModel:
    """Soft gripper geometry (mm)"""

    max_opening: float = 110.0
    finger_thickness: float = 8.0
    compliance_band: float = 15.0

    def __post_init__(self):
        if min(self.max_opening, self.finger_thickness, self.compliance_band) <= 0:
            raise ParameterError(f"Gripper dimensions must be positive: {self}")


@dataclass
class OracleResult:
    success: bool
    failure_reason: str = None

    def to_dict(self):
        return {"success": self.success, "failure_reason": self.failure_reason}


def _check_object(obj, plan, gripper):
    center = np.array([plan.grasp.x_mm, plan.grasp.y_mm])
    offset = plan.open_width_mm / 2.0 * np.array([math.cos(plan.theta_w), math.sin(plan.theta_w)])
    fingers = np.stack([center - offset, center + offset])
    line = np.linspace(fingers[0], fingers[1], _LINE_SAMPLES)

    if not obj.contains(line[:, 0], line[:, 1]).any():
        return "misses_object"
    if obj.contains(fingers[:, 0], fingers[:, 1]).any():
        return "finger_on_object"
    if plan.z_grasp > obj.height + gripper.compliance_band:
        return "no_contact"
    thin = obj.height < gripper.finger_thickness
    if plan.primitive is PrimitiveKind.FLAT_SMALL and thin and not plan.close_on_retreat:
        return "thin_object_not_lifted"
    return None


def evaluate_plan(scene, plan, gripper=None):
    """
    Judge a plan against the ground-truth scene

    Args:
        scene (Scene): Scene the plan was made for
        plan (GraspPlan): Plan to execute
        gripper (GripperModel): Gripper geometry

    Returns:
        OracleResult: success flag and the failure reason of the closest object
    """
    gripper = gripper or GripperModel()
    if plan.open_width_mm > gripper.max_opening:
        return OracleResult(False, "opening_too_wide")
    if plan.z_grasp < 0:
        return OracleResult(False, "below_table")

    reason = "misses_object"
    for obj in scene.objects:
        failure = _check_object(obj, plan, gripper)
        if failure is None:
            return OracleResult(True)
        if failure != "misses_object":
            reason = failure
    return OracleResult(False, reason)
