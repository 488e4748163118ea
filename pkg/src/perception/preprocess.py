"""
Depth conditioning and network input assembly

Fixed order: temporal filter -> edge-preserving spatial filter -> inpainting ->
center crop and normalization.
"""

from dataclasses import dataclass, replace

import cv2
import numpy as np

from src.utils.errors import DataError, DimensionError, ParameterError


@dataclass
class RgbdFrame:
    """Pixel-aligned color and depth images (depth in millimeters, 0 = invalid)"""

    rgb: np.ndarray
    depth: np.ndarray
    valid_mask: np.ndarray = None
    camera: object = None
    crop_offset: tuple = (0, 0)

    def __post_init__(self):
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise DimensionError(f"RGB image must be H x W x 3, got {self.rgb.shape}", axis="rgb")
        if self.depth.shape != self.rgb.shape[:2]:
            raise DimensionError(
                f"Depth {self.depth.shape} and RGB {self.rgb.shape[:2]} are not pixel-aligned", axis="depth"
            )
        if self.valid_mask is None:
            self.valid_mask = self.depth > 0

    @property
    def shape(self):
        return self.depth.shape


@dataclass
class PreprocessConfig:
    """Filter parameters; one set for offline dataset preparation and online inference"""

    sigma_s: float = 25.0
    sigma_r: float = 30.0
    iterations: int = 3
    temporal_alpha: float = 0.4
    temporal_delta: float = 20.0
    inpaint_radius: int = 3
    spatial: bool = True


@dataclass
class NormalizationStats:
    """Per-channel RGB means (in [0, 1]) subtracted at input assembly"""

    rgb_mean: tuple = (0.5, 0.5, 0.5)

    def to_dict(self):
        return {"rgb_mean": list(self.rgb_mean)}

    @classmethod
    def from_dict(cls, values):
        return cls(rgb_mean=tuple(float(v) for v in values["rgb_mean"]))


def compute_stats(frames):
    """Mean RGB over a set of frames"""
    if not frames:
        raise DataError("Cannot compute normalization statistics of an empty frame list")
    totals = np.zeros(3, dtype=np.float64)
    count = 0
    for frame in frames:
        totals += frame.rgb.reshape(-1, 3).sum(axis=0, dtype=np.float64)
        count += frame.rgb.shape[0] * frame.rgb.shape[1]
    return NormalizationStats(rgb_mean=tuple(float(v) for v in totals / count / 255.0))


def _guide_gradient(guide, axis):
    """Sum over channels of |guide difference| along axis, first slice zero"""
    guide = guide.astype(np.float64)
    if guide.ndim == 2:
        guide = guide[..., None]
    diff = np.abs(np.diff(guide, axis=axis)).sum(axis=2)
    pad = ((1, 0), (0, 0)) if axis == 0 else ((0, 0), (1, 0))
    return np.pad(diff, pad)


def _recursive_rows(stack, feedback):
    """Two-pass recursive filter along the last axis; stack is (2, H, W), feedback (H, W)"""
    width = stack.shape[-1]
    for j in range(1, width):
        stack[:, :, j] += feedback[:, j] * (stack[:, :, j - 1] - stack[:, :, j])
    for j in range(width - 2, -1, -1):
        stack[:, :, j] += feedback[:, j + 1] * (stack[:, :, j + 1] - stack[:, :, j])
    return stack


def domain_transform_filter(depth, guide, sigma_s=25.0, sigma_r=30.0, iterations=3, valid_mask=None):
    """
    Edge-preserving recursive domain-transform filter guided by another image

    Invalid depth pixels contribute nothing and keep their value (0).

    Args:
        depth (np.ndarray): H x W depth
        guide (np.ndarray): H x W or H x W x C guide image
        sigma_s (float): Spatial standard deviation (pixels)
        sigma_r (float): Range standard deviation (guide units)
        iterations (int): Number of horizontal + vertical iterations
        valid_mask (np.ndarray): Boolean validity; defaults to depth > 0

    Returns:
        np.ndarray: Filtered depth, same dtype as the input
    """
    if sigma_s <= 0 or sigma_r <= 0 or iterations < 1:
        raise ParameterError(
            f"Domain transform needs sigma_s > 0, sigma_r > 0, iterations >= 1 "
            f"(got {sigma_s}, {sigma_r}, {iterations})"
        )
    if guide.shape[:2] != depth.shape:
        raise DimensionError(f"Guide {guide.shape[:2]} does not match depth {depth.shape}", axis="guide")
    mask = (depth > 0) if valid_mask is None else valid_mask.astype(bool)
    if not mask.any():
        return depth.copy()

    ratio = sigma_s / sigma_r
    dhdx = 1.0 + ratio * _guide_gradient(guide, axis=1)
    dvdy = 1.0 + ratio * _guide_gradient(guide, axis=0)
    weight = mask.astype(np.float64)
    current = np.where(mask, depth.astype(np.float64), 0.0)

    for i in range(iterations):
        sigma_i = sigma_s * np.sqrt(3.0) * 2.0 ** (iterations - (i + 1)) / np.sqrt(4.0**iterations - 1.0)
        a = np.exp(-np.sqrt(2.0) / sigma_i)

        stack = np.stack([current * weight, weight.copy()])
        stack = _recursive_rows(stack, a**dhdx)
        current = _normalize(stack, current, mask)

        stack = np.stack([(current * weight).T, weight.T.copy()])
        stack = _recursive_rows(stack, (a**dvdy).T)
        current = _normalize(stack, current.T, mask.T).T

    out = np.where(mask, current, depth)
    return out.astype(depth.dtype, copy=False)


def _normalize(stack, previous, mask):
    numerator, denominator = stack
    safe = mask & (denominator > 1e-12)
    return np.where(safe, numerator / np.where(safe, denominator, 1.0), previous)


def temporal_filter(current, history, alpha=0.4, delta=20.0):
    """
    Exponential smoothing against the previous filtered frame

    Pixels whose change exceeds delta take the current value; invalid current
    pixels persist the history value when it is valid.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"Temporal alpha must be in (0, 1], got {alpha}")
    if current.shape != history.shape:
        raise DimensionError(f"Current {current.shape} and history {history.shape} differ", axis="spatial")
    current_valid = current > 0
    history_valid = history > 0
    out = current.copy()
    blend = current_valid & history_valid & (np.abs(current - history) <= delta)
    out[blend] = alpha * current[blend] + (1.0 - alpha) * history[blend]
    persist = ~current_valid & history_valid
    out[persist] = history[persist]
    return out


def _fit_plane(depth, valid_mask):
    """Least-squares plane a*x + b*y + c over the valid pixels, evaluated everywhere"""
    rows, cols = np.nonzero(valid_mask)
    design = np.column_stack([cols, rows, np.ones(rows.size)]).astype(np.float64)
    values = depth[rows, cols].astype(np.float64)
    coeffs, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
    if rank < 3:
        coeffs = np.array([0.0, 0.0, values.mean()])
    ys, xs = np.mgrid[0 : depth.shape[0], 0 : depth.shape[1]]
    return coeffs[0] * xs + coeffs[1] * ys + coeffs[2]


def inpaint_invalid(depth, valid_mask, radius=3):
    """
    Fast-marching (Telea) inpainting of invalid depth pixels

    A least-squares plane through the valid pixels is removed first and added
    back after filling, so sloped surfaces are continued rather than flattened.

    Returns:
        np.ndarray: float32 depth with no invalid pixels

    Raises:
        DataError: If no pixel is valid
    """
    valid_mask = valid_mask.astype(bool)
    if valid_mask.all():
        return depth.astype(np.float32, copy=True)
    if not valid_mask.any():
        raise DataError("Cannot inpaint a depth image without any valid pixel")

    plane = _fit_plane(depth, valid_mask)
    residual = np.where(valid_mask, depth - plane, 0.0).astype(np.float32)
    # cv2.inpaint mishandles the image border, so work on a 1-pixel replicated margin.
    image = cv2.copyMakeBorder(residual, 1, 1, 1, 1, cv2.BORDER_REPLICATE)
    holes = cv2.copyMakeBorder((~valid_mask).astype(np.uint8), 1, 1, 1, 1, cv2.BORDER_REPLICATE)
    filled = cv2.inpaint(image, holes, radius, cv2.INPAINT_TELEA)[1:-1, 1:-1] + plane
    return np.where(valid_mask, depth, filled).astype(np.float32)


def center_crop_offset(shape, size):
    """(row, col) offset of a centered size x size crop"""
    height, width = shape[:2]
    if height < size or width < size:
        raise DimensionError(f"Frame {height} x {width} is smaller than the {size} x {size} crop", axis="spatial")
    return (height - size) // 2, (width - size) // 2


def crop_array(array, offset, size):
    row, col = offset
    return array[row : row + size, col : col + size]


def uncrop_pixel(x, y, crop_offset):
    """Map crop pixel coordinates back to the full frame"""
    row, col = crop_offset
    return x + col, y + row


def assemble_input(frame, stats=None, size=300):
    """
    Build the 1 x 4 x size x size network input (R, G, B, D)

    The crop offset is recorded on frame.crop_offset.
    """
    stats = stats or NormalizationStats()
    offset = center_crop_offset(frame.shape, size)
    frame.crop_offset = offset
    rgb = crop_array(frame.rgb, offset, size).astype(np.float32) / 255.0
    rgb = rgb - np.asarray(stats.rgb_mean, dtype=np.float32)
    depth_m = crop_array(frame.depth, offset, size).astype(np.float64) / 1000.0
    depth_m = depth_m - depth_m.mean()
    tensor = np.concatenate([rgb.transpose(2, 0, 1), depth_m[None].astype(np.float32)], axis=0)
    return tensor[None].astype(np.float32)


def preprocess_depth(frame, history=None, config=None):
    """
    Temporal -> spatial -> inpaint on one frame

    Args:
        frame (RgbdFrame): Raw frame
        history (np.ndarray): Previous temporal output for this camera stream, or None
        config (PreprocessConfig): Filter parameters

    Returns:
        tuple: (conditioned RgbdFrame, new temporal history)
    """
    config = config or PreprocessConfig()
    depth = frame.depth.astype(np.float32)
    if history is not None:
        depth = temporal_filter(depth, history, config.temporal_alpha, config.temporal_delta)
    new_history = depth.copy()
    valid = depth > 0
    if config.spatial:
        depth = domain_transform_filter(
            depth, frame.rgb, config.sigma_s, config.sigma_r, config.iterations, valid_mask=valid
        )
    depth = inpaint_invalid(depth, valid, config.inpaint_radius)
    return replace(frame, depth=depth, valid_mask=frame.valid_mask.copy()), new_history
