"""
Depthwise over-parameterized convolution (DO-Conv)

Each input channel c owns a (K*K, K*K) matrix D_c that acts on the unrolled
K*K kernel vectors of W. Training updates D and W; inference folds them into a
single plain kernel E[o, c] = D_c @ W[o, c].
"""

from dataclasses import dataclass

import numpy as np

from src.nn.functional import (
    _windows,
    check_finite,
    conv2d,
    get_default_dtype,
    kaiming_uniform,
)
from src.utils.errors import DimensionError


@dataclass
class DoConvParams:
    """Trainable parameters of one DO-Conv layer"""

    W: np.ndarray  # (C_out, C_in, K, K)
    D: np.ndarray  # (C_in, K*K, K*K)
    bias: np.ndarray  # (C_out,)

    @classmethod
    def initialize(cls, rng, c_out, c_in, kernel_size, dtype=None):
        """Kaiming-uniform W, identity D, zero bias"""
        dtype = dtype or get_default_dtype()
        kk = kernel_size * kernel_size
        W = kaiming_uniform(rng, (c_out, c_in, kernel_size, kernel_size), dtype)
        D = np.tile(np.eye(kk, dtype=dtype), (c_in, 1, 1))
        return cls(W=W, D=D, bias=np.zeros(c_out, dtype=dtype))

    @property
    def kernel_size(self):
        return self.W.shape[2]

    def tensors(self):
        return [self.W, self.D, self.bias]


def _validate(params):
    c_out, c_in, k, k2 = params.W.shape
    kk = k * k
    if k != k2:
        raise DimensionError(f"DO-Conv W must be square, got {params.W.shape}", axis="kernel")
    if params.D.ndim != 3 or params.D.shape[1] != params.D.shape[2]:
        raise DimensionError(f"DO-Conv D must be square per channel, got {params.D.shape}", axis="D")
    if params.D.shape != (c_in, kk, kk):
        raise DimensionError(f"DO-Conv D has shape {params.D.shape}, expected {(c_in, kk, kk)}", axis="D")
    return c_out, c_in, k


def doconv_fold(params):
    """
    Fold D into W

    Args:
        params (DoConvParams): Layer parameters

    Returns:
        tuple: (effective kernel of shape W.shape, bias)
    """
    c_out, c_in, k = _validate(params)
    flat = params.W.reshape(c_out, c_in, k * k)
    folded = np.einsum("cij,ocj->oci", params.D, flat)
    return folded.reshape(params.W.shape).astype(params.W.dtype, copy=False), params.bias


def doconv_fold_backward(grad_kernel, params):
    """
    Chain rule through the fold

    Returns:
        tuple: (grad_W, grad_D)
    """
    c_out, c_in, k = _validate(params)
    grad = grad_kernel.reshape(c_out, c_in, k * k)
    flat = params.W.reshape(c_out, c_in, k * k)
    grad_W = np.einsum("cij,oci->ocj", params.D, grad).reshape(params.W.shape)
    grad_D = np.einsum("oci,ocj->cij", grad, flat)
    return check_finite(grad_W, "DO-Conv W gradient"), check_finite(grad_D, "DO-Conv D gradient")


def doconv_composite(input, params, spec):
    """Two-stage forward: depthwise transform of every input patch, then W"""
    c_out, c_in, k = _validate(params)
    windows, _ = _windows(input, spec)
    n, _, out_h, out_w = windows.shape[:4]
    patches = windows.transpose(0, 2, 3, 1, 4, 5).reshape(-1, c_in, k * k)
    composed = np.einsum("rci,cij->rcj", patches, params.D)
    out = composed.reshape(-1, c_in * k * k) @ params.W.reshape(c_out, -1).T
    out = out.reshape(n, out_h, out_w, c_out).transpose(0, 3, 1, 2)
    return out + params.bias.reshape(1, c_out, 1, 1)


def doconv_forward(input, params, spec):
    """Forward through the folded kernel"""
    kernel, bias = doconv_fold(params)
    return conv2d(input, kernel, bias, spec)
