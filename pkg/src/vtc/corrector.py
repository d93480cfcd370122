"""Replacement-word prediction.

Every position t gets a hypothetical sentence encoding q_t (the sentence
read as if word t were the blank). The detector's softmax T* pools them
into u_q, which is added to the encoded video u_V and classified over the
candidate list beta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as T
from .encoder import uniform_param
from .exceptions import ConfigError, ContractError, CorpusError, DimensionError
from .tensor import Tensor


class CorrectionHead:
    def __init__(
        self,
        d_x: int,
        beta: Sequence[int],
        d_q: int = 128,
        d_v: int = 0,
        visual: bool = False,
        rng: np.random.Generator | None = None,
    ):
        if len(beta) < 2:
            raise ConfigError("candidate set beta needs at least two words")
        if len(set(beta)) != len(beta):
            raise ConfigError("candidate set beta has duplicates")
        if visual and d_v < 1:
            raise ConfigError("visual correction needs d_v >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.beta = [int(b) for b in beta]
        self.beta_index = {w: i for i, w in enumerate(self.beta)}
        self.d_q, self.d_v, self.visual = d_q, d_v, visual
        self.W_q = uniform_param(rng, (d_q, d_x), d_x, "W_q")
        self.W_V = uniform_param(rng, (d_q, d_v), d_v, "W_V") if visual else None
        self.W_i = uniform_param(rng, (len(self.beta), d_q), d_q, "W_i")

    def params(self) -> list[Tensor]:
        return [p for p in (self.W_q, self.W_V, self.W_i) if p is not None]

    def encode_candidates(self, x_hat: Tensor) -> Tensor:
        """Q with q_t = tanh(W_q x_hat_t) on every position."""
        return T.tanh(T.linear(x_hat, self.W_q))

    def attend(self, T_star: Tensor, Q: Tensor) -> Tensor:
        """u_q = sum_t T*_t q_t; (N,) with (N, d_q), or batched (B, N) with (B, N, d_q)."""
        sums = T_star.data.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > 1e-4):
            raise ContractError("attend: T* must sum to 1 within 1e-4")
        if T_star.shape != Q.shape[:-1]:
            raise DimensionError(f"attend: T* {T_star.shape} vs Q {Q.shape}")
        if T_star.ndim == 1:
            return T.matmul(T_star.reshape(1, -1), Q).reshape(-1)
        B, N = T_star.shape
        return T.matmul(T_star.reshape(B, 1, N), Q).reshape(B, self.d_q)

    def encode_video(self, omega: Tensor | None, batch_shape: tuple[int, ...] = ()) -> Tensor:
        """u_V = tanh(W_V omega); the zero vector in text-only mode."""
        if not self.visual:
            return Tensor(np.zeros(batch_shape + (self.d_q,), dtype=self.W_q.dtype))
        if omega is None:
            raise ContractError("visual correction head called without a visual feature")
        if omega.shape[-1] != self.d_v:
            raise DimensionError(f"visual feature has width {omega.shape[-1]}, model expects d_v={self.d_v}")
        return T.tanh(T.linear(omega, self.W_V))

    def logits(self, u_q: Tensor, u_V: Tensor) -> Tensor:
        return T.linear(u_q + u_V, self.W_i)

    def predict_word(self, u_q: Tensor, u_V: Tensor) -> tuple[Tensor, np.ndarray]:
        """Logits over beta and the argmax position in beta (lowest index on ties)."""
        logits = self.logits(u_q, u_V)
        return logits, np.argmax(logits.data, axis=-1)

    def target_index(self, words) -> np.ndarray:
        try:
            return np.asarray([self.beta_index[int(w)] for w in np.ravel(words)]).reshape(np.shape(words))
        except KeyError as exc:
            raise CorpusError(f"true word index {exc.args[0]} is not in the candidate set") from None

    def score_all_pairs(self, D: Tensor, Q: Tensor, u_V: Tensor) -> np.ndarray:
        """Joint log-probability of every (position, candidate) pair, shape (N, |beta|).

        score(t, w) = log T*_t + log softmax(W_i (q_t + u_V))_w with T* = softmax(D),
        where q_t stands in for u_q as if attention were hard on t.
        """
        uv = u_V.reshape(u_V.shape[0], 1, self.d_q) if Q.ndim == 3 else u_V
        with T.no_grad():
            per_pos = T.linear(Q + T.broadcast_to(uv, Q.shape), self.W_i)
            logp_w = T.log_softmax(per_pos).data.astype(np.float64)
        d = np.asarray(D.data if isinstance(D, Tensor) else D, dtype=np.float64)
        z = d - d.max(axis=-1, keepdims=True)
        logp_t = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
        return logp_t[..., None] + logp_w


@dataclass
class CorrectionResult:
    u_q: Tensor
    u_V: Tensor
    logits: Tensor
    w_star: np.ndarray
    loss: Tensor | None = None


def correction_loss(logits: Tensor, target) -> Tensor:
    return T.cross_entropy(logits, target)


def joint_loss(detection_loss: Tensor, correction_logits: Tensor, target) -> tuple[Tensor, Tensor]:
    """l = l_f + l_d; returns (l, l_f)."""
    l_f = correction_loss(correction_logits, target)
    return l_f + detection_loss, l_f
