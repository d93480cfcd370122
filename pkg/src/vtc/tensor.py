"""Dense tensors with define-by-run reverse-mode differentiation.

Every op records its parents and a closure mapping the output gradient to
one gradient per parent. ``Tensor.backward`` walks the recorded graph in
reverse topological order. Leaf tensors created with ``requires_grad=True``
accumulate into ``.grad`` across calls until ``zero_grad`` is called.

Arrays are float32 unless the inputs are already float64; gradient checks
promote to float64 to keep finite differences meaningful.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .exceptions import ConfigError, ContractError, DimensionError, NumericError, VocabIndexError

DTYPE = np.float32
NORM_EPS = 1e-8

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif not (isinstance(data, (np.ndarray, np.generic)) and arr.dtype == np.float64):
            # float64 numpy input is kept (gradient checks); everything else is float32
            arr = arr.astype(DTYPE, copy=False)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return len(self.data)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None):
        return tsum(self, axis)

    def backward(self, grad=None) -> None:
        """Populate ``.grad`` on every trainable leaf reachable from this tensor.

        Only scalars may be differentiated without an explicit seed gradient.
        """
        if grad is None:
            if self.data.size != 1:
                raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=self.data.dtype).reshape(self.shape)

        order = _topological(self)
        grads: dict[int, np.ndarray] = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    out = Tensor(data, dtype=data.dtype)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and a.data.size != 1 and b.data.size != 1:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _fit(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # reduce a gradient back onto a scalar operand
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


# ---------------------------------------------------------------- pointwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape("add", a, b)
    sa, sb = a.shape, b.shape
    return _result(a.data + b.data, (a, b), lambda g: (_fit(g, sa), _fit(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape("sub", a, b)
    sa, sb = a.shape, b.shape
    return _result(a.data - b.data, (a, b), lambda g: (_fit(g, sa), _fit(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape("mul", a, b)
    ad, bd = a.data, b.data
    return _result(ad * bd, (a, b), lambda g: (_fit(g * bd, ad.shape), _fit(g * ad, bd.shape)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x)


def sigmoid(a: Tensor) -> Tensor:
    out = _sigmoid(a.data)
    return _result(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _result(out, (a,), lambda g: (g * (1.0 - out * out),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    x = a.data
    return _result(np.log(x), (a,), lambda g: (g / x,))


def pointwise(op: str, *args) -> Tensor:
    """Dispatch one of the named elementwise ops."""
    table = {"sigmoid": sigmoid, "tanh": tanh, "mul": mul, "add": add, "sub": sub}
    try:
        fn = table[op]
    except KeyError:
        raise ContractError(f"unknown pointwise op {op!r}") from None
    return fn(*args)


# ---------------------------------------------------------------- shape ops


def reshape(a: Tensor, shape) -> Tensor:
    src = a.shape
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(src),))


def broadcast_to(a: Tensor, shape) -> Tensor:
    """Explicit broadcast; the gradient is summed back over the new axes."""
    shape = tuple(shape)
    src = a.shape
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError:
        raise DimensionError(f"broadcast_to: cannot broadcast {src} to {shape}") from None
    lead = len(shape) - len(src)

    def back(g):
        g = g.sum(axis=tuple(range(lead))) if lead else g
        axes = tuple(i for i, n in enumerate(src) if n == 1 and g.shape[i] != 1)
        if axes:
            g = g.sum(axis=axes, keepdims=True)
        return (g,)

    return _result(np.ascontiguousarray(out), (a,), back)


def getitem(a: Tensor, key) -> Tensor:
    src, dtype = a.shape, a.data.dtype

    def back(g):
        out = np.zeros(src, dtype=dtype)
        np.add.at(out, key, g)
        return (out,)

    return _result(a.data[key], (a,), back)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _result(data, tensors, lambda g: tuple(np.split(g, bounds, axis=axis)))


def split(a: Tensor, sections: int, axis: int = -1) -> list[Tensor]:
    """Split into equal parts; used for the GLU [A, B] halving."""
    n = a.shape[axis]
    if n % sections:
        raise DimensionError(f"split: axis of size {n} not divisible by {sections}")
    step = n // sections
    ax = axis % a.ndim
    parts = []
    for i in range(sections):
        idx = [slice(None)] * a.ndim
        idx[ax] = slice(i * step, (i + 1) * step)
        parts.append(getitem(a, tuple(idx)))
    return parts


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=axis)
    n = len(tensors)

    def back(g):
        return tuple(np.take(g, i, axis=axis) for i in range(n))

    return _result(data, tensors, back)


def tsum(a: Tensor, axis=None) -> Tensor:
    src = a.shape

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, src).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), src).copy(),)

    return _result(np.asarray(a.data.sum(axis=axis)), (a,), back)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis), 1.0 / n)


# ---------------------------------------------------------------- linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes.

    ``a`` may carry leading batch axes; ``b`` is either a plain matrix shared
    across the batch or has the same leading axes as ``a``.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul: need at least 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions differ for {a.shape} and {b.shape}")
    if b.ndim > 2 and b.shape[:-2] != a.shape[:-2]:
        raise DimensionError(f"matmul: batch dimensions differ for {a.shape} and {b.shape}")
    ad, bd = a.data, b.data

    def back(g):
        ga = g @ np.swapaxes(bd, -1, -2)
        if bd.ndim == 2 and ad.ndim > 2:
            gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.swapaxes(ad, -1, -2) @ g
        return ga, gb

    return _result(ad @ bd, (a, b), back)


def linear(x: Tensor, weight: Tensor) -> Tensor:
    """``x @ weight.T`` over the last axis, i.e. ``W × x`` for row vectors."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.shape[-1] != weight.shape[-1]:
        raise DimensionError(f"linear: input width {x.shape} does not match weight {weight.shape}")
    xd, wd = x.data, weight.data

    def back(g):
        gx = g @ wd
        gw = g.reshape(-1, g.shape[-1]).T @ xd.reshape(-1, xd.shape[-1])
        return gx, gw

    return _result(xd @ wd.T, (x, weight), back)


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a vector along the last axis of ``x``."""
    x, bias = as_tensor(x), as_tensor(bias)
    if bias.ndim != 1 or bias.shape[0] != x.shape[-1]:
        raise DimensionError(f"add_bias: bias {bias.shape} does not fit {x.shape}")
    return _result(
        x.data + bias.data,
        (x, bias),
        lambda g: (g, g.reshape(-1, g.shape[-1]).sum(axis=0)),
    )


def conv1d(x: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    """Same-length 1-D cross-correlation along the sequence axis.

    x has shape (..., N, d_in), kernel (m, d_in, d_out), bias (d_out,).
    The input is zero-padded by (m - 1) / 2 on both ends.
    """
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    if kernel.ndim != 3:
        raise DimensionError(f"conv1d: kernel must be (m, d_in, d_out), got {kernel.shape}")
    m, d_in, d_out = kernel.shape
    if m % 2 == 0:
        raise ConfigError(f"conv1d: receptive field must be odd, got {m}")
    if x.shape[-1] != d_in:
        raise DimensionError(f"conv1d: input {x.shape} does not match kernel {kernel.shape}")
    if bias.shape != (d_out,):
        raise DimensionError(f"conv1d: bias {bias.shape} does not match kernel {kernel.shape}")
    half = (m - 1) // 2
    xd = x.data
    n = xd.shape[-2]
    pad = [(0, 0)] * (xd.ndim - 2) + [(half, half), (0, 0)]
    xp = np.pad(xd, pad)
    # windows: (..., N, d_in, m) -> (..., N, m, d_in) -> flatten taps
    win = np.lib.stride_tricks.sliding_window_view(xp, m, axis=-2)
    cols = np.ascontiguousarray(np.swapaxes(win, -1, -2)).reshape(*xd.shape[:-2], n, m * d_in)
    kmat = kernel.data.reshape(m * d_in, d_out)
    out = cols @ kmat + bias.data

    def back(g):
        g2 = g.reshape(-1, d_out)
        gk = (cols.reshape(-1, m * d_in).T @ g2).reshape(m, d_in, d_out)
        gb = g2.sum(axis=0)
        gcols = (g @ kmat.T).reshape(*xd.shape[:-2], n, m, d_in)
        gxp = np.zeros(xp.shape, dtype=xd.dtype)
        for j in range(m):
            gxp[..., j : j + n, :] += gcols[..., :, j, :]
        gx = gxp[..., half : half + n, :]
        return gx, gk, gb

    return _result(out, (x, kernel, bias), back)


def embedding(table: Tensor, indices) -> Tensor:
    """Row lookup; gradients land only on the rows that were read."""
    idx = np.asarray(indices, dtype=np.int64)
    vocab = table.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= vocab):
        raise VocabIndexError(f"embedding: index out of range for table of {vocab} rows")
    td = table.data

    def back(g):
        out = np.zeros_like(td)
        np.add.at(out, idx, g)
        return (out,)

    return _result(td[idx], (table,), back)


# ---------------------------------------------------------------- normalisation and losses


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    x = a.data
    if np.isnan(x).any():
        raise NumericError("softmax: NaN in input")
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _result(out, (a,), back)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    x = a.data
    if np.isnan(x).any():
        raise NumericError("log_softmax: NaN in input")
    z = x - x.max(axis=axis, keepdims=True)
    out = z - np.log(np.exp(z).sum(axis=axis, keepdims=True))

    def back(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return _result(out, (a,), back)


def l2_normalize(a: Tensor, axis: int = -1, eps: float = NORM_EPS) -> Tensor:
    """Unit-norm along ``axis``; vectors with norm below ``eps`` map to zero."""
    x = a.data
    norm = np.sqrt((x * x).sum(axis=axis, keepdims=True))
    live = norm >= eps
    safe = np.where(live, norm, 1.0)
    out = np.where(live, x / safe, 0.0).astype(x.dtype)

    def back(g):
        proj = (g * out).sum(axis=axis, keepdims=True)
        return (np.where(live, (g - out * proj) / safe, 0.0).astype(x.dtype),)

    return _result(out, (a,), back)


def cross_entropy(logits: Tensor, target, reduction: str = "mean") -> Tensor:
    """-log softmax(logits)[target], computed in log space.

    ``logits`` is (C,) with an integer target, or (B, C) with B targets.
    """
    x = logits.data
    tgt = np.asarray(target, dtype=np.int64)
    n_cls = x.shape[-1]
    if tgt.shape != x.shape[:-1]:
        raise DimensionError(f"cross_entropy: targets {tgt.shape} do not match logits {x.shape}")
    if tgt.size and (tgt.min() < 0 or tgt.max() >= n_cls):
        raise VocabIndexError(f"cross_entropy: target out of range for {n_cls} classes")
    z = x - x.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - lse
    picked = np.take_along_axis(logp, tgt[..., None], axis=-1)[..., 0]
    count = max(tgt.size, 1)
    if reduction == "mean":
        value = -picked.sum() / count
        scale = 1.0 / count
    elif reduction == "sum":
        value = -picked.sum()
        scale = 1.0
    else:
        raise ContractError(f"cross_entropy: unknown reduction {reduction!r}")

    def back(g):
        probs = np.exp(logp)
        np.put_along_axis(probs, tgt[..., None], np.take_along_axis(probs, tgt[..., None], -1) - 1.0, -1)
        return ((g * scale * probs).astype(x.dtype),)

    return _result(np.asarray(value, dtype=x.dtype), (logits,), back)


# ---------------------------------------------------------------- recurrent


def lstm_step(zx: Tensor, state: Tensor, w_hh: Tensor, mask=None) -> Tensor:
    """One LSTM step with the input projection precomputed.

    zx is (B, 4H) holding W_ih x + b in gate order [input, forget, cell, output];
    state is (B, 2H) holding [h | c]; w_hh is (4H, H). Returns the new packed
    state. Rows where ``mask`` is 0 carry the previous state through unchanged.
    """
    zd, sd, wd = zx.data, state.data, w_hh.data
    hid = wd.shape[1]
    if zd.shape[-1] != 4 * hid or sd.shape[-1] != 2 * hid:
        raise DimensionError(f"lstm_step: shapes {zx.shape}, {state.shape}, {w_hh.shape} disagree")
    h, c = sd[:, :hid], sd[:, hid:]
    z = zd + h @ wd.T
    zi, zf, zg, zo = z[:, :hid], z[:, hid : 2 * hid], z[:, 2 * hid : 3 * hid], z[:, 3 * hid :]
    gi, gf, go = _sigmoid(zi), _sigmoid(zf), _sigmoid(zo)
    gg = np.tanh(zg)
    c_new = gf * c + gi * gg
    tc = np.tanh(c_new)
    h_new = go * tc
    new = np.concatenate([h_new, c_new], axis=1)
    if mask is not None:
        m = np.asarray(mask, dtype=sd.dtype).reshape(-1, 1)
        out = m * new + (1 - m) * sd
    else:
        m = None
        out = new

    def back(g):
        g_prev_carry = None
        if m is not None:
            g_prev_carry = (1 - m) * g
            g = m * g
        gh, gc = g[:, :hid], g[:, hid:]
        d_o = gh * tc
        dc = gc + gh * go * (1 - tc * tc)
        d_i = dc * gg
        d_f = dc * c
        d_g = dc * gi
        dz = np.concatenate(
            [d_i * gi * (1 - gi), d_f * gf * (1 - gf), d_g * (1 - gg * gg), d_o * go * (1 - go)], axis=1
        )
        dh = dz @ wd
        d_state = np.concatenate([dh, dc * gf], axis=1)
        if g_prev_carry is not None:
            d_state = d_state + g_prev_carry
        return dz, d_state, dz.T @ h

    return _result(out, (zx, state, w_hh), back)
