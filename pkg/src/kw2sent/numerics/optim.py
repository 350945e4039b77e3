from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .tensor import TapeStateError, Tensor


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def register(self, params: Mapping[str, Tensor]) -> None:
        for name, p in params.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(p.data)
                self.v[name] = np.zeros_like(p.data)


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> None:
    """Bias-corrected Adam update in place, then clear the gradients.

    Raises :class:`TapeStateError` if any parameter has no gradient; nothing
    is updated in that case.
    """
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise TapeStateError(f"adam_step: no gradient for parameter(s) {', '.join(missing)}")
    state.register(params)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for name, p in params.items():
        g = p.grad.astype(p.dtype, copy=False)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / corr1
        v_hat = v / corr2
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype, copy=False)
        p.grad = None


class Adam:
    """Thin stateful wrapper so training code reads ``opt.step()``."""

    def __init__(self, params: Mapping[str, Tensor], lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        self.state.register(self.params)

    def step(self) -> None:
        adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


def global_grad_norm(params: Mapping[str, Tensor]) -> float:
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float(np.dot(p.grad.ravel().astype(np.float64), p.grad.ravel().astype(np.float64)))
    return math.sqrt(total)


def clip_grad_norm(params: Mapping[str, Tensor], max_norm: float) -> float:
    """Rescale all gradients so their joint L2 norm is at most ``max_norm``."""
    norm = global_grad_norm(params)
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad = (p.grad * factor).astype(p.dtype, copy=False)
    return norm
