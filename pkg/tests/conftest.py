"""
Shared fixtures
"""

import numpy as np
import pytest

from src.dataset.sample import GraspRectangle, Sample
from src.grasping.camera import CameraModel
from src.perception.preprocess import RgbdFrame


def build_block_sample(size=16, block=(5, 11), height=50.0, d_t=1000.0, sample_id="toy", grasps=None):
    """A bright square block on a dark table with one grasp across it"""
    rgb = np.full((size, size, 3), 40, dtype=np.uint8)
    depth = np.full((size, size), d_t, dtype=np.float32)
    lo, hi = block
    rgb[lo:hi, lo:hi] = (200, 180, 60)
    depth[lo:hi, lo:hi] = d_t - height
    center = (lo + hi - 1) / 2.0
    if grasps is None:
        grasps = [GraspRectangle(x=center, y=center, angle=0.0, width=hi - lo, length=12.0, height_label=height)]
    camera = CameraModel.default(image_size=size, height_mm=d_t)
    frame = RgbdFrame(rgb=rgb, depth=depth, camera=camera)
    return Sample(frame=frame, grasps=grasps, d_t=d_t, id=sample_id)


@pytest.fixture
def block_sample():
    return build_block_sample()


@pytest.fixture
def sample_factory():
    return build_block_sample
