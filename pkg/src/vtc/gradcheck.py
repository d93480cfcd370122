"""Central finite-difference checks for the autodiff engine."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numerical_grad(fn: Callable[[], Tensor], tensor: Tensor, step: float = 1e-3, coords=None) -> np.ndarray:
    """Central differences of the scalar ``fn()`` w.r.t. ``tensor``.

    With ``coords`` only those flat indices are perturbed; the other
    entries of the result stay NaN.
    """
    flat = tensor.data.reshape(-1)
    out = np.full(flat.shape, np.nan, dtype=np.float64)
    idx = range(flat.size) if coords is None else coords
    for i in idx:
        orig = flat[i]
        flat[i] = orig + step
        up = float(fn().data)
        flat[i] = orig - step
        down = float(fn().data)
        flat[i] = orig
        out[i] = (up - down) / (2 * step)
    return out.reshape(tensor.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a|| + ||n||, tiny), the norm-wise relative error."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    keep = ~np.isnan(n)
    a, n = a[keep], n[keep]
    denom = max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / denom)


def gradcheck(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    step: float = 1e-3,
    coords_per_input: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[float]:
    """Compare autodiff against central differences for each of ``inputs``.

    ``fn`` rebuilds the graph on every call and returns a scalar tensor.
    Returns one relative error per input.
    """
    for t in inputs:
        t.grad = None
    fn().backward()
    analytic = [np.zeros(t.shape) if t.grad is None else t.grad.astype(np.float64).copy() for t in inputs]
    errors = []
    for t, a in zip(inputs, analytic):
        coords = None
        if coords_per_input is not None:
            rng = rng or np.random.default_rng(0)
            coords = rng.choice(t.data.size, size=min(coords_per_input, t.data.size), replace=False)
        num = numerical_grad(fn, t, step, coords)
        errors.append(relative_error(a, num))
    return errors
