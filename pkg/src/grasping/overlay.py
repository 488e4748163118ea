"""
Grasp overlay rendering for the infer command
"""

import math

import cv2
import numpy as np

GRASP_COLOR = (255, 64, 0)
TEXT_COLOR = (255, 255, 255)


def grasp_corners(g_p, jaw_fraction=0.5):
    """Corners of the rotated grasp rectangle (opening along theta_p, image y up)"""
    along = np.array([math.cos(g_p.theta_p), -math.sin(g_p.theta_p)])
    across = np.array([math.sin(g_p.theta_p), math.cos(g_p.theta_p)])
    half_open = max(g_p.w_p, 1.0) / 2.0
    half_jaw = half_open * jaw_fraction
    center = np.array([g_p.x_p, g_p.y_p], dtype=np.float64)
    corners = [
        center + sa * half_open * along + sb * half_jaw * across
        for sa, sb in ((-1, -1), (1, -1), (1, 1), (-1, 1))
    ]
    return np.round(np.array(corners)).astype(np.int32)


def render_overlay(rgb, g_p, primitive_name):
    """
    Draw the grasp on an RGB crop

    Args:
        rgb (np.ndarray): H x W x 3 uint8 RGB crop
        g_p (ImageGrasp): Grasp in crop coordinates
        primitive_name (str): Label printed with the predicted height

    Returns:
        np.ndarray: uint8 RGB image
    """
    canvas = np.ascontiguousarray(rgb, dtype=np.uint8).copy()
    corners = grasp_corners(g_p)
    cv2.polylines(canvas, [corners.reshape(-1, 1, 2)], isClosed=True, color=GRASP_COLOR, thickness=2)
    cv2.circle(canvas, (int(round(g_p.x_p)), int(round(g_p.y_p))), 3, GRASP_COLOR, -1)
    label = f"{primitive_name} h*={g_p.h_star:.0f}mm"
    cv2.putText(canvas, label, (5, 15), cv2.FONT_HERSHEY_SIMPLEX, 0.45, TEXT_COLOR, 1, cv2.LINE_AA)
    return canvas


def save_overlay(path, overlay):
    """Write an RGB overlay as an 8-bit PNG"""
    if not cv2.imwrite(str(path), cv2.cvtColor(overlay, cv2.COLOR_RGB2BGR)):
        raise OSError(f"Failed to write overlay image to {path}")
