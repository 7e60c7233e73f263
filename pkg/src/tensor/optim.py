"""Adam optimizer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..utils.errors import ShapeMismatchError
from .tensor import Tensor


@dataclass
class AdamState:
    """Moment estimates for one parameter list, aligned by position."""

    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(
    params: Sequence[Tensor], grads: Sequence[Optional[np.ndarray]], state: AdamState
) -> AdamState:
    """Apply one Adam update in place and advance ``state.step``.

    A ``None`` gradient is treated as zero.
    """
    if len(params) != len(grads):
        raise ShapeMismatchError(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    if len(state.m) != len(params):
        raise ShapeMismatchError(
            f"Optimizer state tracks {len(state.m)} parameters, got {len(params)}"
        )

    state.step += 1
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step
    for i, (param, grad) in enumerate(zip(params, grads)):
        g = np.zeros_like(param.data) if grad is None else np.asarray(grad, dtype=param.dtype)
        if g.shape != param.shape or state.m[i].shape != param.shape:
            raise ShapeMismatchError(
                f"Parameter {i}: shape {param.shape}, gradient {g.shape}, moment {state.m[i].shape}"
            )
        state.m[i] = state.beta1 * state.m[i] + (1 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1 - state.beta2) * g * g
        m_hat = state.m[i] / bias1
        v_hat = state.v[i] / bias2
        param.data = (param.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(
            param.dtype
        )
    return state


class Adam:
    """Adam over a fixed parameter list, reading gradients from ``param.grad``."""

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 2e-4,
        beta1: float = 0.5,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self) -> None:
        adam_step(self.params, [p.grad for p in self.params], self.state)

    def zero_grad(self) -> None:
        for param in self.params:
            param.grad = None
