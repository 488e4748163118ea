"""
Differentiable operators over N x C x H x W numpy tensors

Every forward operator has a companion ``*_backward`` that takes the upstream
gradient and returns the gradients of the operator inputs. Operators keep the
dtype of their inputs, so 64-bit arrays give 64-bit results for gradient checks.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft
from scipy.fft import next_fast_len

from src.utils.errors import DimensionError, NumericalError, ParameterError

# Upper bound on the number of elements in one im2col block.
_CHUNK_ELEMENTS = 1 << 22

# FFT tile sides for small and large receptive fields.
_FFT_TILE_SMALL = 32
_FFT_TILE_LARGE = 64

_default_dtype = np.float32


def set_default_dtype(dtype):
    """
    Switch between 32-bit production mode and 64-bit gradient-check mode

    Args:
        dtype: np.float32 or np.float64
    """
    global _default_dtype
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ParameterError(f"Unsupported tensor dtype: {dtype}")
    _default_dtype = dtype


def get_default_dtype():
    return _default_dtype


def check_finite(tensor, name="tensor"):
    """Raise NumericalError if the tensor holds NaN or Inf"""
    if not np.all(np.isfinite(tensor)):
        raise NumericalError(f"Non-finite values in {name}")
    return tensor


def kaiming_uniform(rng, shape, dtype=None):
    """Kaiming-uniform fan-in initialization for a (C_out, C_in, K, K) kernel"""
    fan_in = int(np.prod(shape[1:]))
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype or _default_dtype)


@dataclass(frozen=True)
class ConvSpec:
    """Convolution geometry: kernel size, stride, zero padding and dilation (pixels)"""

    kernel_size: int
    stride: int = 1
    padding: int = 0
    dilation: int = 1

    def __post_init__(self):
        if self.kernel_size < 1 or self.stride < 1 or self.dilation < 1 or self.padding < 0:
            raise ParameterError(f"Invalid convolution geometry: {self}")

    @property
    def receptive_field(self):
        return self.dilation * (self.kernel_size - 1) + 1

    def output_size(self, size):
        out = (size + 2 * self.padding - self.dilation * (self.kernel_size - 1) - 1) // self.stride + 1
        if out < 1:
            raise DimensionError(
                f"Convolution output size {out} < 1 for input size {size} with {self}",
                axis="spatial",
            )
        return out


def _require_4d(tensor, name):
    if tensor.ndim != 4:
        raise DimensionError(f"{name} must be N x C x H x W, got shape {tensor.shape}", axis="rank")


def _windows(input, spec):
    """Strided view (N, C, H_out, W_out, K, K) over the zero-padded input"""
    out_h = spec.output_size(input.shape[2])
    out_w = spec.output_size(input.shape[3])
    p = spec.padding
    padded = np.pad(input, ((0, 0), (0, 0), (p, p), (p, p))) if p else input
    span = spec.receptive_field
    view = sliding_window_view(padded, (span, span), axis=(2, 3))
    view = view[:, :, :: spec.stride, :: spec.stride, :: spec.dilation, :: spec.dilation]
    return view[:, :, :out_h, :out_w], padded.shape


def _row_chunk(n, out_w, patch):
    return max(1, _CHUNK_ELEMENTS // max(1, n * out_w * patch))


def _check_conv_shapes(input, kernel, bias):
    _require_4d(input, "conv2d input")
    _require_4d(kernel, "conv2d kernel")
    if kernel.shape[1] != input.shape[1]:
        raise DimensionError(
            f"Kernel expects {kernel.shape[1]} input channels, input has {input.shape[1]}",
            axis="channels",
        )
    if kernel.shape[2] != kernel.shape[3]:
        raise DimensionError(f"Kernel must be square, got {kernel.shape[2:]}", axis="kernel")
    if bias is not None and bias.shape != (kernel.shape[0],):
        raise DimensionError(
            f"Bias has shape {bias.shape}, expected ({kernel.shape[0]},)", axis="bias"
        )


def conv2d(input, kernel, bias, spec):
    """
    Dilated 2-D cross-correlation with zero padding

    Args:
        input (np.ndarray): (N, C_in, H, W)
        kernel (np.ndarray): (C_out, C_in, K, K)
        bias (np.ndarray): (C_out,) or None
        spec (ConvSpec): Geometry; spec.kernel_size must equal K

    Returns:
        np.ndarray: (N, C_out, H_out, W_out)
    """
    _check_conv_shapes(input, kernel, bias)
    if spec.kernel_size != kernel.shape[2]:
        raise DimensionError(
            f"ConvSpec kernel_size {spec.kernel_size} != kernel size {kernel.shape[2]}",
            axis="kernel",
        )
    n, c_in = input.shape[:2]
    c_out, k = kernel.shape[0], kernel.shape[2]
    windows, _ = _windows(input, spec)
    out_h, out_w = windows.shape[2], windows.shape[3]
    patch = c_in * k * k
    weights = kernel.reshape(c_out, patch)

    out = np.empty((n, c_out, out_h, out_w), dtype=np.result_type(input, kernel))
    rows = _row_chunk(n, out_w, patch)
    for r0 in range(0, out_h, rows):
        r1 = min(out_h, r0 + rows)
        cols = windows[:, :, r0:r1].transpose(0, 2, 3, 1, 4, 5).reshape(-1, patch)
        block = cols @ weights.T
        out[:, :, r0:r1] = block.reshape(n, r1 - r0, out_w, c_out).transpose(0, 3, 1, 2)
    if bias is not None:
        out += bias.reshape(1, c_out, 1, 1)
    return check_finite(out, "conv2d output")


def _fft_tile(span, padded_hw):
    tile = _FFT_TILE_LARGE if span > 8 else _FFT_TILE_SMALL
    return max(span, min(tile, next_fast_len(max(padded_hw), real=True)))


def conv2d_fft(input, kernel, bias, spec):
    """
    conv2d through overlap-save FFT tiles

    Matches conv2d up to floating-point rounding at a fraction of the cost for
    large maps and kernels. Strided geometries fall back to conv2d.

    Args:
        input (np.ndarray): (N, C_in, H, W)
        kernel (np.ndarray): (C_out, C_in, K, K)
        bias (np.ndarray): (C_out,) or None
        spec (ConvSpec): Geometry; spec.kernel_size must equal K

    Returns:
        np.ndarray: (N, C_out, H_out, W_out) in the dtype conv2d would return
    """
    _check_conv_shapes(input, kernel, bias)
    if spec.kernel_size != kernel.shape[2]:
        raise DimensionError(
            f"ConvSpec kernel_size {spec.kernel_size} != kernel size {kernel.shape[2]}",
            axis="kernel",
        )
    if spec.stride != 1:
        return conv2d(input, kernel, bias, spec)
    n, c_in, h, w = input.shape
    c_out = kernel.shape[0]
    out_h, out_w = spec.output_size(h), spec.output_size(w)
    dtype = np.result_type(input, kernel)
    span = spec.receptive_field
    p = spec.padding

    tile = _fft_tile(span, (h + 2 * p, w + 2 * p))
    step = tile - span + 1
    tiles_y, tiles_x = -(-out_h // step), -(-out_w // step)
    padded = np.zeros((n, c_in, (tiles_y - 1) * step + tile, (tiles_x - 1) * step + tile), dtype=dtype)
    padded[:, :, p : p + h, p : p + w] = input
    windows = sliding_window_view(padded, (tile, tile), axis=(2, 3))[:, :, ::step, ::step]

    spectrum = fft.rfft2(windows, axes=(-2, -1))
    kernel_spectrum = np.conj(fft.rfft2(dilate_kernel(kernel.astype(dtype), spec.dilation), s=(tile, tile)))
    freqs = spectrum.shape[-2] * spectrum.shape[-1]
    # one (C_out x C_in) @ (C_in x tiles) product per frequency
    stacked = spectrum.transpose(4, 5, 1, 0, 2, 3).reshape(freqs, c_in, n * tiles_y * tiles_x)
    mixing = kernel_spectrum.transpose(2, 3, 0, 1).reshape(freqs, c_out, c_in)
    product = (mixing @ stacked).reshape(tile, -1, c_out, n, tiles_y, tiles_x).transpose(3, 2, 4, 5, 0, 1)

    blocks = fft.irfft2(product, s=(tile, tile), axes=(-2, -1))[..., :step, :step]
    out = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(n, c_out, tiles_y * step, tiles_x * step)
    out = np.ascontiguousarray(out[:, :, :out_h, :out_w], dtype=dtype)
    if bias is not None:
        out += bias.reshape(1, c_out, 1, 1).astype(dtype)
    return check_finite(out, "conv2d output")


def conv2d_backward(grad_output, input, kernel, spec):
    """
    Gradients of conv2d

    Returns:
        tuple: (grad_input, grad_kernel, grad_bias)
    """
    n, c_in, h, w = input.shape
    c_out, k = kernel.shape[0], kernel.shape[2]
    windows, padded_shape = _windows(input, spec)
    out_h, out_w = windows.shape[2], windows.shape[3]
    if grad_output.shape != (n, c_out, out_h, out_w):
        raise DimensionError(
            f"Upstream gradient shape {grad_output.shape} != output shape {(n, c_out, out_h, out_w)}",
            axis="grad",
        )
    patch = c_in * k * k
    weights = kernel.reshape(c_out, patch)
    s, d, p = spec.stride, spec.dilation, spec.padding

    grad_weights = np.zeros((c_out, patch), dtype=kernel.dtype)
    grad_padded = np.zeros(padded_shape, dtype=input.dtype)
    rows = _row_chunk(n, out_w, patch)
    for r0 in range(0, out_h, rows):
        r1 = min(out_h, r0 + rows)
        g = grad_output[:, :, r0:r1].transpose(0, 2, 3, 1).reshape(-1, c_out)
        cols = windows[:, :, r0:r1].transpose(0, 2, 3, 1, 4, 5).reshape(-1, patch)
        grad_weights += g.T @ cols
        grad_cols = (g @ weights).reshape(n, r1 - r0, out_w, c_in, k, k)
        for i in range(k):
            row_start = r0 * s + i * d
            row_stop = (r1 - 1) * s + i * d + 1
            for j in range(k):
                col_start = j * d
                col_stop = (out_w - 1) * s + j * d + 1
                grad_padded[:, :, row_start:row_stop:s, col_start:col_stop:s] += grad_cols[
                    :, :, :, :, i, j
                ].transpose(0, 3, 1, 2)

    grad_input = grad_padded[:, :, p : p + h, p : p + w]
    grad_bias = grad_output.sum(axis=(0, 2, 3))
    return (
        check_finite(np.ascontiguousarray(grad_input), "conv2d input gradient"),
        check_finite(grad_weights.reshape(kernel.shape), "conv2d kernel gradient"),
        grad_bias,
    )


def conv2d_reference(input, kernel, bias, spec):
    """Direct nested-loop convolution, kept as the oracle for conv2d"""
    _check_conv_shapes(input, kernel, bias)
    n, c_in, h, w = input.shape
    c_out, _, k, _ = kernel.shape
    out_h, out_w = spec.output_size(h), spec.output_size(w)
    out = np.zeros((n, c_out, out_h, out_w), dtype=np.float64)
    for b in range(n):
        for o in range(c_out):
            for y in range(out_h):
                for x in range(out_w):
                    total = 0.0 if bias is None else float(bias[o])
                    for c in range(c_in):
                        for i in range(k):
                            for j in range(k):
                                row = y * spec.stride + i * spec.dilation - spec.padding
                                col = x * spec.stride + j * spec.dilation - spec.padding
                                if 0 <= row < h and 0 <= col < w:
                                    total += float(input[b, c, row, col]) * float(kernel[o, c, i, j])
                    out[b, o, y, x] = total
    return out


def dilate_kernel(kernel, dilation):
    """Insert dilation - 1 zeros between kernel taps"""
    if dilation == 1:
        return kernel.copy()
    c_out, c_in, k, _ = kernel.shape
    span = dilation * (k - 1) + 1
    dilated = np.zeros((c_out, c_in, span, span), dtype=kernel.dtype)
    dilated[:, :, ::dilation, ::dilation] = kernel
    return dilated


def max_pool2(input):
    """2 x 2 non-overlapping max pooling"""
    _require_4d(input, "max_pool2 input")
    n, c, h, w = input.shape
    if h % 2 or w % 2:
        raise DimensionError(f"max_pool2 needs even spatial dims, got {h} x {w}", axis="spatial")
    blocks = input.reshape(n, c, h // 2, 2, w // 2, 2)
    return blocks.max(axis=(3, 5))


def max_pool2_backward(grad_output, input):
    """Route each upstream gradient to the first maximum of its window"""
    n, c, h, w = input.shape
    windows = input.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(n, c, h // 2, w // 2, 4)
    winner = windows.argmax(axis=-1)
    routed = (np.arange(4) == winner[..., None]) * grad_output[..., None]
    routed = routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return routed.reshape(n, c, h, w).astype(input.dtype, copy=False)


@lru_cache(maxsize=64)
def _interpolation_matrix(size, factor, dtype_name):
    """(size * factor, size) align-corners-false linear interpolation operator"""
    out_size = size * factor
    matrix = np.zeros((out_size, size), dtype=np.float64)
    for dst in range(out_size):
        src = max((dst + 0.5) / factor - 0.5, 0.0)
        lo = min(int(np.floor(src)), size - 1)
        hi = min(lo + 1, size - 1)
        frac = src - lo
        matrix[dst, lo] += 1.0 - frac
        matrix[dst, hi] += frac
    matrix = matrix.astype(dtype_name)
    matrix.setflags(write=False)
    return matrix


def upsample_bilinear(input, factor):
    """Bilinear upsampling by an integer factor (align_corners=False)"""
    if factor < 2:
        raise ParameterError(f"Upsampling factor must be >= 2, got {factor}")
    _require_4d(input, "upsample input")
    rows = _interpolation_matrix(input.shape[2], factor, input.dtype.name)
    cols = _interpolation_matrix(input.shape[3], factor, input.dtype.name)
    return rows @ input @ cols.T


def upsample_bilinear_backward(grad_output, input_shape, factor):
    """Adjoint of upsample_bilinear"""
    dtype = grad_output.dtype.name
    rows = _interpolation_matrix(input_shape[2], factor, dtype)
    cols = _interpolation_matrix(input_shape[3], factor, dtype)
    return rows.T @ grad_output @ cols


def relu(input):
    return np.maximum(input, 0).astype(input.dtype, copy=False)


def relu_backward(grad_output, input):
    return grad_output * (input > 0)


def mse_pixelwise(pred, target):
    """
    Mean squared error over every pixel of every map

    Args:
        pred: (N, 5, H, W) array or GraspMaps
        target: same shape as pred

    Returns:
        tuple: (loss as float, gradient with respect to pred)
    """
    pred = _as_array(pred)
    target = _as_array(target)
    if pred.shape != target.shape:
        raise DimensionError(f"Prediction shape {pred.shape} != target shape {target.shape}", axis="maps")
    diff = pred - target
    loss = float(np.mean(np.square(diff, dtype=np.float64)))
    grad = (2.0 / diff.size) * diff
    return loss, grad.astype(pred.dtype, copy=False)


def _as_array(value):
    if hasattr(value, "to_tensor"):
        return value.to_tensor()
    return np.asarray(value)
