"""
Grasp extraction from output maps and motion planning for the soft gripper
"""

from src.grasping.extract import ImageGrasp, extract_best_grasp
from src.grasping.planner import GraspPlan, PrimitiveKind, plan_grasp

__all__ = ["ImageGrasp", "extract_best_grasp", "GraspPlan", "PrimitiveKind", "plan_grasp"]
