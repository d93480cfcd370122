"""Inaccuracy detection by reconstruction distance.

A position's score D_t is a learned linear readout of the elementwise
product of the unit-normalised actual and reconstructed word vectors. With
visual input the readout also sees a per-word gated projection of the
video feature, added inside the product before ``W_d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .encoder import uniform_param
from .exceptions import ConfigError, ContractError, DimensionError
from .tensor import Tensor

MASK_VALUE = -1e9
VISUAL_MODES = ("none", "gated", "concat")


class DetectionHead:
    """Distance readout ``W_d`` plus the optional visual bias.

    ``visual`` is ``"none"`` (text only), ``"gated"`` (gated visual bias) or
    ``"concat"`` (video feature concatenated onto both word vectors and
    projected back to d_x, the baseline the gated bias is compared against).
    """

    def __init__(self, d_x: int, d_v: int = 0, visual: str = "none", rng: np.random.Generator | None = None):
        if visual not in VISUAL_MODES:
            raise ConfigError(f"unknown visual mode {visual!r}; expected one of {VISUAL_MODES}")
        if visual != "none" and d_v < 1:
            raise ConfigError("visual detection needs d_v >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.visual = visual
        self.d_x, self.d_v = d_x, d_v
        self.W_d = uniform_param(rng, (1, d_x), d_x, "W_d")
        self.W_v = self.W_g = self.W_cx = self.W_ch = None
        if visual == "gated":
            self.W_v = uniform_param(rng, (d_x, d_v), d_v, "W_v")
            self.W_g = uniform_param(rng, (d_x, d_x), d_x, "W_g")
        elif visual == "concat":
            self.W_cx = uniform_param(rng, (d_x, d_x + d_v), d_x + d_v, "W_cx")
            self.W_ch = uniform_param(rng, (d_x, d_x + d_v), d_x + d_v, "W_ch")

    @property
    def visual_enabled(self) -> bool:
        return self.visual != "none"

    def params(self) -> list[Tensor]:
        return [p for p in (self.W_d, self.W_v, self.W_g, self.W_cx, self.W_ch) if p is not None]

    def _check_omega(self, omega: Tensor) -> None:
        if omega.shape[-1] != self.d_v:
            raise DimensionError(f"visual feature has width {omega.shape[-1]}, model expects d_v={self.d_v}")

    def visual_gate_bias(self, X: Tensor, omega: Tensor) -> Tensor:
        """v_t = normalize(W_v omega) * sigmoid(W_g x_t).

        Accepts a single word vector (d_x,) with omega (d_v,), a sentence
        (N, d_x) with omega (d_v,), or a batch (B, N, d_x) with omega (B, d_v).
        """
        if self.visual != "gated":
            raise ContractError("visual_gate_bias needs a gated visual head")
        self._check_omega(omega)
        psi = T.l2_normalize(T.linear(omega, self.W_v))
        if X.ndim == 1:
            gate = T.sigmoid(T.linear(X.reshape(1, -1), self.W_g)).reshape(-1)
            return psi * gate
        gate = T.sigmoid(T.linear(X, self.W_g))
        if X.ndim == 3:
            B, N, d = X.shape
            psi = T.broadcast_to(psi.reshape(B, 1, d), X.shape)
        else:
            psi = T.broadcast_to(psi, X.shape)
        return psi * gate

    def _concat_project(self, V: Tensor, omega: Tensor, W: Tensor) -> Tensor:
        shape = V.shape[:-1] + (self.d_v,)
        om = omega.reshape(omega.shape[0], 1, self.d_v) if V.ndim == 3 else omega
        return T.linear(T.concat([V, T.broadcast_to(om, shape)], axis=-1), W)

    def scores(self, X: Tensor, x_hat: Tensor, omega: Tensor | None = None, mask: np.ndarray | None = None) -> Tensor:
        """Detection scores D, shape X.shape[:-1]. Padded positions get ``MASK_VALUE``."""
        if X.shape != x_hat.shape:
            raise DimensionError(f"detection_scores: X {X.shape} vs x_hat {x_hat.shape}")
        if self.visual_enabled and omega is None:
            raise ContractError("visual detection head called without a visual feature")
        if self.visual == "concat":
            self._check_omega(omega)
            X, x_hat = self._concat_project(X, omega, self.W_cx), self._concat_project(x_hat, omega, self.W_ch)
        sim = T.l2_normalize(x_hat) * T.l2_normalize(X)
        if self.visual == "gated":
            sim = sim + self.visual_gate_bias(X, omega)
        D = T.linear(sim, self.W_d)
        D = D.reshape(D.shape[:-1])
        if mask is not None:
            D = D + Tensor(np.where(mask > 0, 0.0, MASK_VALUE).astype(D.dtype))
        return D


@dataclass
class DetectionResult:
    D: Tensor
    T_star: Tensor
    t_star: np.ndarray
    loss: Tensor | None = None


def detect(D) -> int:
    """Position of the largest score; ties go to the smallest index."""
    d = np.asarray(D.data if isinstance(D, Tensor) else D)
    if d.size == 0:
        raise ContractError("detect on an empty score vector")
    return int(np.argmax(d))


def detect_k(D, k: int) -> list[int]:
    """Indices of the k largest scores, by descending score, ties toward smaller index."""
    d = np.asarray(D.data if isinstance(D, Tensor) else D, dtype=np.float64)
    if not 1 <= k <= d.size:
        raise ContractError(f"detect_k: k={k} outside 1..{d.size}")
    return [int(i) for i in np.argsort(-d, kind="stable")[:k]]


def detection_loss(D: Tensor, y) -> Tensor:
    """Cross-entropy between softmax(D) and the one-hot ground truth ``y``.

    ``y`` is one-hot over the last axis of D (a single sentence or a batch).
    """
    y = np.asarray(y)
    if y.shape != D.shape or not np.all((y == 0) | (y == 1)) or not np.all(y.sum(axis=-1) == 1):
        raise ContractError("detection_loss: y must be one-hot with the shape of D")
    return T.cross_entropy(D, np.argmax(y, axis=-1))
