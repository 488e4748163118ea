"""
Adam optimizer over a flat list of parameter arrays
"""

from dataclasses import dataclass, field, replace

import numpy as np

from src.utils.errors import DimensionError


@dataclass
class AdamState:
    """Moment accumulators and hyper-parameters"""

    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, **hyper):
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **hyper,
        )


def adam_step(params, grads, state):
    """
    One bias-corrected Adam update

    Args:
        params (list): Parameter arrays
        grads (list): Gradients aligned with params
        state (AdamState): Optimizer state for the same parameters

    Returns:
        tuple: (new parameter list, new AdamState)
    """
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise DimensionError(
            f"Adam received {len(params)} params, {len(grads)} grads, {len(state.m)} moments",
            axis="params",
        )
    t = state.t + 1
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t

    new_params, new_m, new_v = [], [], []
    for index, (p, g, m, v) in enumerate(zip(params, grads, state.m, state.v)):
        if not (p.shape == g.shape == m.shape == v.shape):
            raise DimensionError(
                f"Adam shape mismatch at parameter {index}: param {p.shape}, grad {g.shape}",
                axis=f"param[{index}]",
            )
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        step = state.alpha * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        new_params.append((p - step).astype(p.dtype, copy=False))
        new_m.append(m.astype(p.dtype, copy=False))
        new_v.append(v.astype(p.dtype, copy=False))

    return new_params, replace(state, t=t, m=new_m, v=new_v)
