"""
Sample -> (network input, training target) assembly
"""

from dataclasses import replace

import numpy as np

from src.dataset.augment import augment
from src.dataset.labels import encode_labels
from src.perception.preprocess import (
    assemble_input,
    crop_array,
    inpaint_invalid,
    preprocess_depth,
)
from src.utils.errors import ConfigurationError

TRAINING_MODES = ("fsg", "rgbd_no_height", "depth_only")


def check_mode(mode):
    if mode not in TRAINING_MODES:
        raise ConfigurationError(f"Unknown training mode '{mode}', expected one of {', '.join(TRAINING_MODES)}")
    return mode


def apply_input_mode(tensor, mode):
    """Zero the RGB channels for the depth-only variant"""
    check_mode(mode)
    if mode == "depth_only":
        tensor = tensor.copy()
        tensor[:, :3] = 0.0
    return tensor


def condition_sample(sample, config=None):
    """Single-frame depth conditioning (spatial filter and inpainting)"""
    frame, _ = preprocess_depth(sample.frame, history=None, config=config)
    conditioned = sample.copy()
    conditioned.frame = frame
    return conditioned


def prepare_example(sample, size, stats=None, mode="fsg", rng=None, augment_params=None):
    """
    Build one training pair from a conditioned sample

    Args:
        sample (Sample): Output of condition_sample
        size (int): Network input size (center crop)
        stats (NormalizationStats): RGB means
        mode (str): One of TRAINING_MODES
        rng (np.random.Generator): Enables augmentation when given
        augment_params (AugmentParams): Augmentation ranges

    Returns:
        tuple: (input (4, size, size) float32, target (5, size, size) float32)
    """
    check_mode(mode)
    if rng is not None:
        sample = augment(sample, rng, augment_params)
        # warping leaves zero-depth borders behind
        valid = sample.frame.depth > 0
        if valid.any() and not valid.all():
            depth = inpaint_invalid(sample.frame.depth, valid)
            sample.frame = replace(sample.frame, depth=depth)

    frame = replace(sample.frame)
    tensor = apply_input_mode(assemble_input(frame, stats, size=size), mode)[0]
    targets = encode_labels(sample)
    target = np.stack([crop_array(channel, frame.crop_offset, size) for channel in targets.to_tensor()])
    if mode == "rgbd_no_height":
        target[4] = 0.0
    return tensor, target.astype(np.float32)
