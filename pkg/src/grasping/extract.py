"""
Best-grasp extraction from the network's output maps
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from src.grasping.camera import normalize_angle
from src.nn.network import HEIGHT_SCALE_MM, WIDTH_SCALE_PX
from src.utils.errors import ParameterError

DEFAULT_SIGMA = 2.0
DEFAULT_EPSILON = 1e-4

# 8-connectivity
_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass
class ImageGrasp:
    """Grasp in crop pixel coordinates; theta_p in (-pi/2, pi/2], image y axis up"""

    x_p: float
    y_p: float
    theta_p: float
    w_p: float
    q: float
    h_star: float

    def to_dict(self):
        return {
            "x_p": float(self.x_p),
            "y_p": float(self.y_p),
            "theta_p": float(self.theta_p),
            "w_p": float(self.w_p),
            "q": float(self.q),
            "h_star": float(self.h_star),
        }


def smooth_quality(q, sigma=DEFAULT_SIGMA):
    """Separable Gaussian smoothing, kernel truncated at 3 sigma, clamped edges"""
    if sigma <= 0:
        raise ParameterError(f"Smoothing sigma must be positive, got {sigma}")
    return ndimage.gaussian_filter(np.asarray(q, dtype=np.float64), sigma, mode="nearest", truncate=3.0)


def resolve_maxima(q_smoothed, epsilon=DEFAULT_EPSILON):
    """
    Merge near-maximal pixels into 8-connected components

    Args:
        q_smoothed (np.ndarray): H x W quality map
        epsilon (float): Tolerance as a fraction of the map's value range

    Returns:
        list: (x, y) component centers, largest component first
    """
    if epsilon < 0:
        raise ParameterError(f"Plateau tolerance must be >= 0, got {epsilon}")
    q = np.asarray(q_smoothed, dtype=np.float64)
    top = q.max()
    tolerance = epsilon * (top - q.min())
    labels, count = ndimage.label(q >= top - tolerance, structure=_EIGHT_CONNECTED)

    components = []
    for label in range(1, count + 1):
        rows, cols = np.nonzero(labels == label)
        first = rows[0] * q.shape[1] + cols[0]
        components.append((-rows.size, first, _component_center(rows, cols, labels == label)))
    components.sort(key=lambda item: (item[0], item[1]))
    return [center for _, _, center in components]


def _component_center(rows, cols, member):
    """Centroid rounded to the nearest pixel that belongs to the component"""
    mean_row, mean_col = rows.mean(), cols.mean()
    row, col = int(math.floor(mean_row + 0.5)), int(math.floor(mean_col + 0.5))
    if member[row, col]:
        return col, row
    nearest = np.argmin((rows - mean_row) ** 2 + (cols - mean_col) ** 2)
    return int(cols[nearest]), int(rows[nearest])


def decode_grasp(maps, center):
    """
    Read angle, width and height at a grasp center

    Args:
        maps (GraspMaps): Clamped network outputs
        center (tuple): (x, y) pixel

    Returns:
        ImageGrasp: Decoded grasp
    """
    x, y = center
    theta = 0.5 * math.atan2(float(maps.sin2[y, x]), float(maps.cos2[y, x]))
    return ImageGrasp(
        x_p=x,
        y_p=y,
        theta_p=normalize_angle(theta),
        w_p=float(maps.width[y, x]) * WIDTH_SCALE_PX,
        q=float(maps.q[y, x]),
        h_star=float(maps.height[y, x]) * HEIGHT_SCALE_MM,
    )


def extract_grasps(maps, sigma=DEFAULT_SIGMA, epsilon=DEFAULT_EPSILON):
    """
    Smooth Q, resolve its maxima and decode every candidate

    Returns:
        list: ImageGrasp candidates, best first
    """
    centers = resolve_maxima(smooth_quality(maps.q, sigma), epsilon)
    return [decode_grasp(maps, center) for center in centers]


def extract_best_grasp(maps, sigma=DEFAULT_SIGMA, epsilon=DEFAULT_EPSILON):
    return extract_grasps(maps, sigma, epsilon)[0]
