"""
Sensor corruption of ideal depth, per object material
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass
class CorruptionConfig:
    """Corruption magnitudes (millimeters, pixels, fractions)"""

    specular_dropout: tuple = (0.45, 0.75)
    specular_blob_sigma: float = 4.0
    transparent_through: tuple = (0.7, 0.95)
    transparent_distortion_mm: float = 10.0
    transparent_blob_sigma: float = 6.0
    flat_height_factor: float = 0.3
    flat_noise_mm: float = 3.0
    opaque_noise_mm: float = 2.0
    sensor_noise_mm: float = 1.5


def smooth_field(rng, shape, sigma):
    """Zero-mean spatially correlated random field"""
    field = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="nearest")
    return field - field.mean()


def _top_fraction(values, fraction):
    """Boolean selection of the largest `fraction` of values"""
    if values.size == 0:
        return np.zeros(0, dtype=bool)
    count = int(round(fraction * values.size))
    selected = np.zeros(values.size, dtype=bool)
    if count > 0:
        selected[np.argsort(-values, kind="stable")[:count]] = True
    return selected


def corrupt_depth(true_depth, instance_mask, materials, rng, table_depth=None, config=None):
    """
    Turn ideal depth into a fuzzy sensor reading

    Args:
        true_depth (np.ndarray): H x W ideal depth (mm)
        instance_mask (np.ndarray): H x W object ids (0 = table)
        materials (list): Material of object id i + 1 at index i
        rng (np.random.Generator): Noise source
        table_depth (np.ndarray): Depth of the table behind every pixel;
            defaults to the median of the table pixels
        config (CorruptionConfig): Magnitudes

    Returns:
        tuple: (fuzzy depth float32 whole millimeters, valid mask)
    """
    config = config or CorruptionConfig()
    depth = true_depth.astype(np.float64).copy()
    valid = true_depth > 0
    if table_depth is None:
        background = true_depth[instance_mask == 0]
        table_depth = np.full(true_depth.shape, float(np.median(background)) if background.size else 0.0)
    table_depth = np.asarray(table_depth, dtype=np.float64)

    for index, material in enumerate(materials):
        mask = instance_mask == index + 1
        if not mask.any():
            continue
        if material == "specular":
            field = smooth_field(rng, depth.shape, config.specular_blob_sigma)
            fraction = rng.uniform(*config.specular_dropout)
            dropped = np.zeros_like(mask)
            dropped[mask] = _top_fraction(field[mask], fraction)
            depth[mask] += rng.normal(0.0, config.opaque_noise_mm, size=int(mask.sum()))
            valid &= ~dropped
        elif material == "transparent":
            field = smooth_field(rng, depth.shape, config.transparent_blob_sigma)
            distortion = smooth_field(rng, depth.shape, config.transparent_blob_sigma)
            scale = np.abs(distortion[mask]).max()
            distortion = distortion / scale if scale > 0 else distortion
            fraction = rng.uniform(*config.transparent_through)
            through = np.zeros_like(mask)
            through[mask] = _top_fraction(field[mask], fraction)
            depth[through] = table_depth[through] + config.transparent_distortion_mm * distortion[through]
            valid &= ~(mask & ~through)
        elif material == "flat_textured":
            height = table_depth[mask] - depth[mask]
            depth[mask] = (
                table_depth[mask]
                - config.flat_height_factor * height
                + rng.normal(0.0, config.flat_noise_mm, size=int(mask.sum()))
            )
        else:
            depth[mask] += rng.normal(0.0, config.opaque_noise_mm, size=int(mask.sum()))

    depth += rng.normal(0.0, config.sensor_noise_mm, size=depth.shape)
    depth = np.where(valid, np.maximum(np.round(depth), 1.0), 0.0)
    return depth.astype(np.float32), valid
