"""
Grasp rectangles -> pixel-wise training targets
"""

import math

import numpy as np
from scipy import ndimage

from src.dataset.sample import GraspRectangle
from src.grasping.camera import normalize_angle
from src.nn.network import HEIGHT_SCALE_MM, WIDTH_SCALE_PX, GraspMaps
from src.utils.errors import LabelError

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


class TargetMaps(GraspMaps):
    """Training targets; Q is binary and the other maps are zero outside grasp masks"""

    @classmethod
    def zeros(cls, shape):
        return cls(*(np.zeros(shape, dtype=np.float32) for _ in range(5)))


def grasp_mask(grasp, shape):
    """
    Center-third mask of one rectangle

    Pixels whose center lies within length/6 of the grasp center along the
    closing axis and within width/2 across it. The rounded center pixel is
    always included.
    """
    height, width = shape[:2]
    ys, xs = np.mgrid[0:height, 0:width]
    dx = xs - grasp.x
    dy = ys - grasp.y
    # closing axis is (cos, -sin) in pixel coordinates (image y points down)
    along = dx * math.cos(grasp.angle) - dy * math.sin(grasp.angle)
    across = dx * math.sin(grasp.angle) + dy * math.cos(grasp.angle)
    mask = (np.abs(along) <= grasp.length / 6.0) & (np.abs(across) <= grasp.width / 2.0)
    mask[int(math.floor(grasp.y + 0.5)), int(math.floor(grasp.x + 0.5))] = True
    return mask


def encode_labels(sample, shape=None):
    """
    Rasterize every grasp rectangle of a sample

    Args:
        sample (Sample): Labeled sample
        shape (tuple): Target size; defaults to the sample's image size

    Returns:
        TargetMaps: Q, sin2, cos2, width and height targets

    Raises:
        LabelError: If a grasp center lies outside the image
    """
    shape = tuple(shape or sample.shape)
    targets = TargetMaps.zeros(shape)
    for index, grasp in enumerate(sample.grasps):
        if not grasp.inside(shape):
            raise LabelError(
                f"Sample {sample.id}: grasp {index} at ({grasp.x:.1f}, {grasp.y:.1f}) is outside the image",
                grasp_index=index,
            )
        mask = grasp_mask(grasp, shape)
        targets.q[mask] = 1.0
        targets.sin2[mask] = math.sin(2.0 * grasp.angle)
        targets.cos2[mask] = math.cos(2.0 * grasp.angle)
        targets.width[mask] = min(max(grasp.width / WIDTH_SCALE_PX, 0.0), 1.0)
        targets.height[mask] = min(max(grasp.height_label / HEIGHT_SCALE_MM, 0.0), 1.0)
    return targets


def decode_targets(targets, threshold=0.5):
    """
    Recover one rectangle per connected Q-positive region

    Centers are region centroids; angle, width and height are averaged over
    the region. Length is reported equal to the width.

    Returns:
        list: GraspRectangle per region, largest region first
    """
    labels, count = ndimage.label(targets.q >= threshold, structure=_EIGHT_CONNECTED)
    rectangles = []
    for label in range(1, count + 1):
        member = labels == label
        rows, cols = np.nonzero(member)
        angle = 0.5 * math.atan2(float(targets.sin2[member].mean()), float(targets.cos2[member].mean()))
        width = max(float(targets.width[member].mean()) * WIDTH_SCALE_PX, 1e-6)
        rectangles.append(
            (
                -rows.size,
                GraspRectangle(
                    x=float(cols.mean()),
                    y=float(rows.mean()),
                    angle=normalize_angle(angle),
                    width=width,
                    length=width,
                    height_label=float(targets.height[member].mean()) * HEIGHT_SCALE_MM,
                ),
            )
        )
    rectangles.sort(key=lambda item: item[0])
    return [rectangle for _, rectangle in rectangles]
