"""AdamW with decoupled weight decay.

    m <- b1 m + (1 - b1) g
    v <- b2 v + (1 - b2) g^2
    mhat = m / (1 - b1^t),  vhat = v / (1 - b2^t)
    params <- params - lr (mhat / (sqrt(vhat) + eps) + wd * params)

Decay multiplies the parameters directly (scaled by lr), never the
gradient. One state per parameter tensor; step counts updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ParameterError, ShapeError


@dataclass
class AdamWState:
    """Moment buffers and hyperparameters for one parameter tensor."""
    m: np.ndarray
    v: np.ndarray
    lr: float = 1e-5
    weight_decay: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    name: str = "param"

    def __post_init__(self):
        if self.m.shape != self.v.shape:
            raise ShapeError(
                f"moment shapes disagree: m {self.m.shape} vs v {self.v.shape}")
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ParameterError(
                f"betas must lie in (0, 1), got ({self.beta1}, {self.beta2})")
        if self.eps <= 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")


def init_adamw(shape, lr: float = 1e-5, weight_decay: float = 0.1,
               beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
               name: str = "param") -> AdamWState:
    """Fresh zero-moment state for a parameter tensor of the given shape."""
    return AdamWState(m=np.zeros(shape), v=np.zeros(shape), lr=lr,
                      weight_decay=weight_decay, beta1=beta1, beta2=beta2,
                      eps=eps, name=name)


def adamw_step(state: AdamWState, params: np.ndarray, grads: np.ndarray
               ) -> np.ndarray:
    """One update. Mutates state in place and returns the new parameters."""
    if params.shape != state.m.shape or grads.shape != params.shape:
        raise ShapeError(
            f"adamw_step shapes disagree: params {params.shape}, grads "
            f"{grads.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(grads)):
        raise DivergenceError(
            f"non-finite gradient for parameter {state.name!r}")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    mhat = state.m / (1.0 - state.beta1 ** state.step)
    vhat = state.v / (1.0 - state.beta2 ** state.step)
    return params - state.lr * (mhat / (np.sqrt(vhat) + state.eps)
                                + state.weight_decay * params)
