"""
Online augmentation: rotation, zoom and crop jitter applied jointly to images and labels
"""

import math
from dataclasses import dataclass, replace

import cv2
import numpy as np

from src.dataset.sample import Sample
from src.perception.preprocess import RgbdFrame
from src.utils.errors import ParameterError, SkipSample


@dataclass
class AugmentParams:
    """Sampling ranges for one random similarity transform"""

    rotation_range: tuple = (-math.pi, math.pi)
    zoom_range: tuple = (0.8, 1.2)
    max_jitter: float = 50.0
    max_retries: int = 10

    def __post_init__(self):
        low, high = self.rotation_range
        if not -math.pi <= low <= high <= math.pi:
            raise ParameterError(f"Rotation range must lie in [-pi, pi], got {self.rotation_range}")
        low, high = self.zoom_range
        if not 0.8 <= low <= high <= 1.2:
            raise ParameterError(f"Zoom range must lie in [0.8, 1.2], got {self.zoom_range}")
        if not 0 <= self.max_jitter <= 50:
            raise ParameterError(f"Crop jitter must be in [0, 50] px, got {self.max_jitter}")
        if self.max_retries < 1:
            raise ParameterError(f"Augmentation needs at least one attempt, got {self.max_retries}")


def transform_matrix(shape, rotation, zoom, shift):
    """2 x 3 similarity about the image center, then a translation (tx, ty)"""
    height, width = shape[:2]
    center = ((width - 1) / 2.0, (height - 1) / 2.0)
    matrix = cv2.getRotationMatrix2D(center, math.degrees(rotation), zoom)
    matrix[:, 2] += shift
    return matrix


def apply_transform(sample, rotation=0.0, zoom=1.0, shift=(0.0, 0.0)):
    """
    Warp a sample by one similarity transform

    Positive rotations turn the image counter-clockwise, so grasp angles
    (image y up) increase by the same amount. Zoom scales widths, lengths and
    heights, and moves depth toward the camera: d' = d_t - zoom * (d_t - d).
    Grasps whose center leaves the frame are dropped.

    Args:
        sample (Sample): Source sample
        rotation (float): Radians
        zoom (float): Scale factor
        shift (tuple): (tx, ty) translation in pixels

    Returns:
        Sample: Transformed copy
    """
    if rotation == 0.0 and zoom == 1.0 and tuple(shift) == (0.0, 0.0):
        return sample.copy()

    height, width = sample.shape
    matrix = transform_matrix(sample.shape, rotation, zoom, np.asarray(shift, dtype=np.float64))
    size = (width, height)

    rgb = cv2.warpAffine(sample.frame.rgb, matrix, size, flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT)
    valid = sample.frame.depth > 0
    depth = np.where(valid, sample.d_t - zoom * (sample.d_t - sample.frame.depth), 0.0)
    depth = np.where(valid, np.maximum(depth, 1.0), 0.0).astype(np.float32)
    depth = cv2.warpAffine(depth, matrix, size, flags=cv2.INTER_NEAREST, borderMode=cv2.BORDER_CONSTANT, borderValue=0)

    grasps = []
    for grasp in sample.grasps:
        x, y = matrix @ np.array([grasp.x, grasp.y, 1.0])
        moved = replace(
            grasp,
            x=float(x),
            y=float(y),
            angle=grasp.angle + rotation,
            width=grasp.width * zoom,
            length=grasp.length * zoom,
            height_label=grasp.height_label * zoom,
        )
        if moved.inside(sample.shape):
            grasps.append(moved)

    frame = RgbdFrame(rgb=rgb, depth=depth, camera=sample.frame.camera)
    return Sample(frame=frame, grasps=grasps, d_t=sample.d_t, id=sample.id)


def sample_transform(rng, params):
    """Draw (rotation, zoom, shift) from the configured ranges"""
    rotation = float(rng.uniform(*params.rotation_range))
    zoom = float(rng.uniform(*params.zoom_range))
    shift = tuple(float(v) for v in rng.uniform(-params.max_jitter, params.max_jitter, size=2))
    return rotation, zoom, shift


def augment(sample, rng, params=None):
    """
    Random rotation, zoom and crop jitter

    Raises:
        SkipSample: When every attempt pushed all grasps out of frame
    """
    params = params or AugmentParams()
    for _ in range(params.max_retries):
        rotation, zoom, shift = sample_transform(rng, params)
        out = apply_transform(sample, rotation, zoom, shift)
        if out.grasps or not sample.grasps:
            return out
    raise SkipSample(f"Sample {sample.id}: no grasp stayed in frame after {params.max_retries} attempts")
