"""Word reconstruction from context.

Two paths produce a reconstructed vector for every position: stacked
position-gated convolutions with GLU activations (short range) and a pair
of fragment LSTMs that read everything left and right of the position
(long range). Their outputs are summed.

All forward methods take batched inputs shaped (B, N, ...) together with a
(B, N) 0/1 mask; padded positions never influence real ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .exceptions import ConfigError, DimensionError, LengthError
from .tensor import Tensor


def uniform_param(rng: np.random.Generator, shape, fan_in: int, name: str) -> Tensor:
    k = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-k, k, size=shape), requires_grad=True, name=name, dtype=T.DTYPE)


def _mask3(mask: np.ndarray, width: int, dtype) -> Tensor:
    return Tensor(np.broadcast_to(mask[..., None], mask.shape + (width,)).astype(dtype))


PATHS = ("conv+lstm", "conv", "lstm")


class EmbeddingTable:
    def __init__(self, vocab_size: int, d_x: int, rng: np.random.Generator):
        self.theta_x = Tensor(rng.normal(0.0, 0.1, size=(vocab_size, d_x)), requires_grad=True, name="theta_x", dtype=T.DTYPE)

    @property
    def d_x(self) -> int:
        return self.theta_x.shape[1]

    def __call__(self, tokens) -> Tensor:
        return T.embedding(self.theta_x, tokens)


class PositionTable:
    def __init__(self, n_max: int, d_x: int, rng: np.random.Generator):
        self.P = Tensor(rng.normal(0.0, 0.1, size=(n_max, d_x)), requires_grad=True, name="pos_table", dtype=T.DTYPE)

    @property
    def n_max(self) -> int:
        return self.P.shape[0]

    def gate(self, X: Tensor) -> Tensor:
        """I_t = x_t * sigmoid(p_t) for every position t."""
        n = X.shape[-2]
        if n > self.n_max:
            raise LengthError(f"sentence of length {n} exceeds N_max={self.n_max}")
        gates = T.sigmoid(self.P[:n])
        if X.ndim == 3:
            gates = T.broadcast_to(gates, X.shape)
        return X * gates


class ConvNGramStack:
    """Stacked 1-D convolutions with GLU activations.

    Each layer convolves d_x channels into 2 * d_x, takes the first half as
    content A and the second half as gates B, and emits A * sigmoid(B).
    """

    def __init__(self, d_x: int, kernel_size: int, depth: int, rng: np.random.Generator):
        if kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {kernel_size}")
        if depth < 1:
            raise ConfigError("conv stack needs at least one layer")
        fan_in = kernel_size * d_x
        self.layers = [
            (
                uniform_param(rng, (kernel_size, d_x, 2 * d_x), fan_in, f"conv.{i}.kernel"),
                uniform_param(rng, (2 * d_x,), fan_in, f"conv.{i}.bias"),
            )
            for i in range(depth)
        ]
        self.kernel_size = kernel_size

    @property
    def depth(self) -> int:
        return len(self.layers)

    def glu_layer(self, I: Tensor, i: int) -> Tensor:
        kernel, bias = self.layers[i]
        C = T.conv1d(I, kernel, bias)
        A, B = T.split(C, 2, axis=-1)
        return A * T.sigmoid(B)

    def __call__(self, I: Tensor, mask: np.ndarray | None = None) -> Tensor:
        phi = I
        m3 = None if mask is None else _mask3(mask, I.shape[-1], I.dtype)
        for i in range(self.depth):
            phi = self.glu_layer(phi, i)
            if m3 is not None:
                phi = phi * m3
        return phi


class LSTMCell:
    """Standard LSTM with gate order [input, forget, cell, output]."""

    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator, prefix: str):
        self.hidden = hidden
        self.w_ih = uniform_param(rng, (4 * hidden, d_in), d_in, f"{prefix}.w_ih")
        self.w_hh = uniform_param(rng, (4 * hidden, hidden), hidden, f"{prefix}.w_hh")
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = 1.0
        self.bias = Tensor(b, requires_grad=True, name=f"{prefix}.bias", dtype=T.DTYPE)

    def params(self) -> list[Tensor]:
        return [self.w_ih, self.w_hh, self.bias]

    def project(self, X: Tensor) -> Tensor:
        return T.add_bias(T.linear(X, self.w_ih), self.bias)


class FragmentEncoder:
    """Encodes the words before and after each position with separate LSTMs.

    u^l_t is the last hidden state after reading x_1..x_{t-1}; u^r_t is the
    last hidden state after reading x_N..x_{t+1} in reverse. Empty fragments
    encode to zero. Both come out of a single sweep per direction.
    """

    def __init__(self, d_x: int, hidden: int, rng: np.random.Generator):
        self.left = LSTMCell(d_x, hidden, rng, "lstm_l")
        self.right = LSTMCell(d_x, hidden, rng, "lstm_r")
        self.W_c = uniform_param(rng, (d_x, 2 * hidden), 2 * hidden, "W_c")

    def fragments(self, X: Tensor, mask: np.ndarray) -> tuple[Tensor, Tensor]:
        """Return (U_left, U_right), each (B, N, h)."""
        B, N, _ = X.shape
        H = self.left.hidden
        zero = Tensor(np.zeros((B, 2 * H), dtype=X.dtype))

        zl = self.left.project(X)
        state, lefts = zero, []
        for t in range(N):
            lefts.append(state)
            if t < N - 1:
                state = T.lstm_step(zl[:, t], state, self.left.w_hh)

        zr = self.right.project(X)
        state, rights = zero, [None] * N
        for t in range(N - 1, -1, -1):
            rights[t] = state
            if t > 0:
                # padding sits at the tail, so the reverse sweep starts at each sentence's own last word
                state = T.lstm_step(zr[:, t], state, self.right.w_hh, mask=mask[:, t])

        U_l = T.stack(lefts, axis=1)[..., :H]
        U_r = T.stack(rights, axis=1)[..., :H]
        return U_l, U_r

    def __call__(self, X: Tensor, mask: np.ndarray) -> Tensor:
        U_l, U_r = self.fragments(X, mask)
        return T.linear(T.concat([U_l, U_r], axis=-1), self.W_c)


@dataclass
class EncodedSentence:
    X: Tensor
    x_hat_C: Tensor | None
    x_hat_R: Tensor | None
    x_hat: Tensor


def fuse(x_hat_C: Tensor, x_hat_R: Tensor) -> Tensor:
    if x_hat_C.shape != x_hat_R.shape:
        raise DimensionError(f"fuse: {x_hat_C.shape} vs {x_hat_R.shape}")
    return x_hat_C + x_hat_R


class TextEncoder:
    """Embedding, conv N-gram path and fragment path.

    ``paths`` selects which reconstructions are summed: ``"conv+lstm"``,
    ``"conv"`` or ``"lstm"``. ``use_position=False`` drops the position gate.
    """

    PATHS = PATHS

    def __init__(
        self,
        vocab_size: int,
        d_x: int = 64,
        hidden: int = 64,
        kernel_size: int = 5,
        depth: int = 3,
        n_max: int = 40,
        paths: str = "conv+lstm",
        use_position: bool = True,
        rng: np.random.Generator | None = None,
    ):
        if paths not in self.PATHS:
            raise ConfigError(f"unknown encoder paths {paths!r}; expected one of {self.PATHS}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.paths = paths
        self.use_position = use_position
        self.n_max = n_max
        self.embedding = EmbeddingTable(vocab_size, d_x, rng)
        self.position = PositionTable(n_max, d_x, rng) if use_position and "conv" in paths else None
        self.conv = ConvNGramStack(d_x, kernel_size, depth, rng) if "conv" in paths else None
        self.fragment = FragmentEncoder(d_x, hidden, rng) if "lstm" in paths else None

    def params(self) -> list[Tensor]:
        out = [self.embedding.theta_x]
        if self.position is not None:
            out.append(self.position.P)
        if self.conv is not None:
            for k, b in self.conv.layers:
                out += [k, b]
        if self.fragment is not None:
            out += self.fragment.left.params() + self.fragment.right.params() + [self.fragment.W_c]
        return out

    def embed(self, tokens: np.ndarray, mask: np.ndarray | None = None) -> Tensor:
        tokens = np.asarray(tokens)
        if tokens.shape[-1] > self.n_max:
            raise LengthError(f"sentence of length {tokens.shape[-1]} exceeds N_max={self.n_max}")
        if tokens.shape[-1] < 1:
            raise LengthError("empty sentence")
        X = self.embedding(tokens)
        if mask is not None:
            X = X * _mask3(mask, X.shape[-1], X.dtype)
        return X

    def conv_ngram(self, X: Tensor, mask: np.ndarray | None = None) -> Tensor:
        I = self.position.gate(X) if self.position is not None else X
        return self.conv(I, mask)

    def reconstruct_recurrent(self, X: Tensor, mask: np.ndarray) -> Tensor:
        return self.fragment(X, mask)

    def __call__(self, tokens: np.ndarray, mask: np.ndarray) -> EncodedSentence:
        X = self.embed(tokens, mask)
        x_c = self.conv_ngram(X, mask) if self.conv is not None else None
        x_r = self.reconstruct_recurrent(X, mask) if self.fragment is not None else None
        if x_c is not None and x_r is not None:
            x_hat = fuse(x_c, x_r)
        else:
            x_hat = x_c if x_c is not None else x_r
        return EncodedSentence(X, x_c, x_r, x_hat)
