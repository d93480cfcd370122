"""Gradient-based optimizers over registered trainable tensors."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import ConfigError
from .tensor import Tensor


def clip_grad_norm(params: Sequence[Tensor], max_norm: float) -> float:
    """Rescale gradients in place so their global L2 norm is at most ``max_norm``.

    Returns the norm measured before clipping.
    """
    grads = [p.grad for p in params if p.grad is not None]
    if not grads:
        return 0.0
    total = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads)))
    if total > max_norm:
        scale = max_norm / (total + 1e-6)
        for p in params:
            if p.grad is not None:
                p.grad = (p.grad * scale).astype(p.grad.dtype)
    return total


class Optimizer:
    kind = "base"

    def __init__(self, params: Sequence[Tensor], lr: float, clip: float | None = None, zero_after_step: bool = True):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        params = list(params)
        for p in params:
            if not p.requires_grad:
                raise ConfigError(f"optimizer given a non-trainable tensor {p!r}")
        self.params = params
        self.lr = lr
        self.clip = clip
        self.zero_after_step = zero_after_step

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        if self.clip is not None:
            clip_grad_norm(self.params, self.clip)
        for i, p in enumerate(self.params):
            if p.grad is not None:
                self._update(i, p)
        if self.zero_after_step:
            self.zero_grad()

    def _update(self, i: int, p: Tensor) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def _update(self, i, p):
        p.data -= (self.lr * p.grad).astype(p.data.dtype)


class Momentum(Optimizer):
    kind = "sgd-momentum"

    def __init__(self, params, lr=1e-2, momentum=0.9, **kw):
        super().__init__(params, lr, **kw)
        self.momentum = momentum
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def _update(self, i, p):
        v = self.velocity[i]
        v *= self.momentum
        v += p.grad
        p.data -= (self.lr * v).astype(p.data.dtype)


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, **kw):
        super().__init__(params, lr, **kw)
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        super().step()

    def _update(self, i, p):
        g = p.grad
        m, v = self.m[i], self.v[i]
        m *= self.b1
        m += (1 - self.b1) * g
        v *= self.b2
        v += (1 - self.b2) * g * g
        mhat = m / (1 - self.b1**self.t)
        vhat = v / (1 - self.b2**self.t)
        p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.data.dtype)


OPTIMIZERS = ("sgd", "sgd-momentum", "adam")


def make_optimizer(kind: str, params: Sequence[Tensor], lr: float, clip: float | None = None) -> Optimizer:
    table = dict(zip(OPTIMIZERS, (SGD, Momentum, Adam)))
    if kind not in table:
        raise ConfigError(f"unknown optimizer {kind!r}; expected one of {OPTIMIZERS}")
    return table[kind](params, lr=lr, clip=clip)
