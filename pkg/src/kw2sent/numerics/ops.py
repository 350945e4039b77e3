"""Differentiable operations.

Broadcasting is limited to a scalar operand (shape ``()`` or ``(1,)``);
anything wider goes through an explicit op (``linear``, ``rowscale``,
``expand``).  Every op below registers its local gradient rule via
:func:`make_result`.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .tensor import (
    DimensionError,
    InvalidMaskError,
    NumericDegenerateError,
    Tensor,
    as_tensor,
    make_result,
)


def _is_scalar(t: Tensor) -> bool:
    return t.size == 1 and t.ndim <= 1


def _coerce(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor(b, dtype=a.dtype)
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor(a, dtype=b.dtype)
    else:
        a, b = as_tensor(a), as_tensor(b)
    return a, b


def _binary_shapes(name: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise DimensionError(f"{name}: incompatible shapes {a.shape} and {b.shape}")


def _reduce_to(g: np.ndarray, t: Tensor) -> np.ndarray:
    if g.shape == t.shape:
        return g
    return np.asarray(g.sum(), dtype=g.dtype).reshape(t.shape)


def add(a, b) -> Tensor:
    a, b = _coerce(a, b)
    _binary_shapes("add", a, b)
    return make_result(a.data + b.data, (a, b), lambda g: (_reduce_to(g, a), _reduce_to(g, b)))


def sub(a, b) -> Tensor:
    a, b = _coerce(a, b)
    _binary_shapes("sub", a, b)
    return make_result(a.data - b.data, (a, b), lambda g: (_reduce_to(g, a), _reduce_to(-g, b)))


def mul(a, b) -> Tensor:
    a, b = _coerce(a, b)
    _binary_shapes("mul", a, b)
    return make_result(
        a.data * b.data,
        (a, b),
        lambda g: (_reduce_to(g * b.data, a), _reduce_to(g * a.data, b)),
    )


def scale(x: Tensor, c: float) -> Tensor:
    c = x.dtype.type(c)
    return make_result(x.data * c, (x,), lambda g: (g * c,))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return make_result(y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    return make_result(y, (x,), lambda g: (g * y * (1.0 - y),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = list(tensors)
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"concat: {[t.shape for t in tensors]}: {exc}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def back(g):
        return np.split(g, bounds, axis=axis)

    return make_result(data, tensors, back)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise DimensionError(f"stack: shapes differ {sorted(shapes)}")
    data = np.stack([t.data for t in tensors], axis=axis)

    def back(g):
        return [np.take(g, i, axis=axis) for i in range(len(tensors))]

    return make_result(data, tensors, back)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return make_result(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """``x[..., i] @ w[i, o] (+ b[o])`` applied over all leading axes."""
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise DimensionError(f"linear: input {x.shape} does not match weight {w.shape}")
    if b is not None and b.shape != (w.shape[1],):
        raise DimensionError(f"linear: bias {b.shape} does not match weight {w.shape}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, w.shape[0])
    y = x2 @ w.data
    if b is not None:
        y = y + b.data
    y = y.reshape(lead + (w.shape[1],))

    def back(g):
        g2 = g.reshape(-1, w.shape[1])
        dx = (g2 @ w.data.T).reshape(x.shape)
        dw = x2.T @ g2
        if b is None:
            return dx, dw
        return dx, dw, g2.sum(axis=0)

    inputs = (x, w) if b is None else (x, w, b)
    return make_result(y, inputs, back)


def reshape(x: Tensor, shape: tuple) -> Tensor:
    try:
        y = x.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}") from None
    return make_result(y, (x,), lambda g: (g.reshape(x.shape),))


def select(x: Tensor, axis: int, index: int) -> Tensor:
    """Pick one slice along ``axis`` (the axis is dropped)."""
    y = np.take(x.data, index, axis=axis)

    def back(g):
        full = np.zeros_like(x.data)
        idx = [slice(None)] * x.ndim
        idx[axis] = index
        full[tuple(idx)] = g
        return (full,)

    return make_result(y, (x,), back)


def expand(x: Tensor, axis: int, n: int) -> Tensor:
    """Insert a new axis of length ``n`` by repetition; gradient sums it back."""
    y = np.repeat(np.expand_dims(x.data, axis), n, axis=axis)
    return make_result(y, (x,), lambda g: (g.sum(axis=axis),))


def embedding(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"embedding: id out of range [0, {table.shape[0]})")
    y = table.data[ids]

    def back(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return make_result(y, (table,), back)


def rowscale(x: Tensor, s: Tensor) -> Tensor:
    """Scale each trailing vector of ``x`` by the matching entry of ``s``."""
    if s.shape != x.shape[:-1]:
        raise DimensionError(f"rowscale: scale {s.shape} does not match rows of {x.shape}")
    y = x.data * s.data[..., None]
    return make_result(y, (x, s), lambda g: (g * s.data[..., None], (g * x.data).sum(axis=-1)))


def blend(mask, a: Tensor, b: Tensor) -> Tensor:
    """Row-wise select: ``a`` where ``mask`` is true, ``b`` elsewhere."""
    mask = np.asarray(mask, dtype=bool)
    if a.shape != b.shape or mask.shape != a.shape[:-1]:
        raise DimensionError(f"blend: shapes {mask.shape}, {a.shape}, {b.shape}")
    m = mask[..., None]
    y = np.where(m, a.data, b.data)
    return make_result(y, (a, b), lambda g: (np.where(m, g, 0.0), np.where(m, 0.0, g)))


def _check_mask(mask, shape, name: str) -> np.ndarray | None:
    if mask is None:
        return None
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise DimensionError(f"{name}: mask {mask.shape} does not match {shape}")
    if not mask.any(axis=-1).all():
        raise InvalidMaskError(f"{name}: every position of some row is masked")
    return mask


def softmax(x: Tensor, mask=None) -> Tensor:
    """Softmax over the last axis; masked positions come out exactly 0."""
    mask = _check_mask(mask, x.shape, "softmax")
    if x.shape[-1] == 0:
        raise InvalidMaskError("softmax over an empty axis")
    z = x.data if mask is None else np.where(mask, x.data, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return make_result(y, (x,), back)


def log_softmax_np(logits: np.ndarray) -> np.ndarray:
    """Non-differentiable log-softmax over the last axis (inference helper)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(logits: Tensor, target, weights=None, reduction: str = "mean") -> Tensor:
    """Negative log-likelihood of ``target`` under ``softmax(logits)``.

    ``weights`` (same shape as ``target``) zero out padded positions; with
    ``reduction="mean"`` the sum is divided by the total weight.
    """
    target = np.asarray(target, dtype=np.int64)
    V = logits.shape[-1]
    if target.shape != logits.shape[:-1]:
        raise DimensionError(f"cross_entropy: targets {target.shape} vs logits {logits.shape}")
    if target.size and (target.min() < 0 or target.max() >= V):
        raise IndexError(f"cross_entropy: target out of range [0, {V})")
    w = np.ones(target.shape, dtype=logits.dtype) if weights is None else np.asarray(weights, dtype=logits.dtype)
    if w.shape != target.shape:
        raise DimensionError(f"cross_entropy: weights {w.shape} vs targets {target.shape}")
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    denom_e = e.sum(axis=-1, keepdims=True)
    logp = z - np.log(denom_e)
    picked = np.take_along_axis(logp, target[..., None], axis=-1)[..., 0]
    total = -(w * picked).sum()
    if reduction == "mean":
        norm = w.sum()
        if norm <= 0:
            raise DimensionError("cross_entropy: no positions carry weight")
    elif reduction == "sum":
        norm = 1.0
    else:
        raise ValueError(f"unknown reduction {reduction!r}")
    norm = logits.dtype.type(norm)
    loss = np.asarray(total / norm, dtype=logits.dtype)

    def back(g):
        p = e / denom_e
        np.put_along_axis(p, target[..., None], np.take_along_axis(p, target[..., None], axis=-1) - 1.0, axis=-1)
        return (p * (w[..., None] * (g / norm)),)

    return make_result(loss, (logits,), back)


def _norms(x: np.ndarray, name: str) -> np.ndarray:
    n = np.sqrt((x * x).sum(axis=-1))
    if np.any(n == 0.0):
        raise NumericDegenerateError(f"{name}: zero-norm vector has no cosine similarity")
    return n


def cosine(a: Tensor, b: Tensor) -> Tensor:
    """Cosine similarity over the last axis of two equally shaped tensors."""
    if a.shape != b.shape:
        raise DimensionError(f"cosine: shapes differ {a.shape} vs {b.shape}")
    na = _norms(a.data, "cosine")
    nb = _norms(b.data, "cosine")
    dot = (a.data * b.data).sum(axis=-1)
    y = dot / (na * nb)

    def back(g):
        g = g[..., None]
        da = g * (b.data / (na * nb)[..., None] - y[..., None] * a.data / (na * na)[..., None])
        db = g * (a.data / (na * nb)[..., None] - y[..., None] * b.data / (nb * nb)[..., None])
        return da, db

    return make_result(y, (a, b), back)


def pairwise_cosine(a: Tensor, b: Tensor) -> Tensor:
    """All-pairs cosine: ``a[B, M, d]`` x ``b[B, U, d]`` -> ``[B, M, U]``."""
    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimensionError(f"pairwise_cosine: shapes {a.shape} and {b.shape}")
    na = _norms(a.data, "pairwise_cosine")[..., None]
    nb = _norms(b.data, "pairwise_cosine")[..., None]
    an = a.data / na
    bn = b.data / nb
    y = np.matmul(an, bn.transpose(0, 2, 1))

    def back(g):
        d_an = np.matmul(g, bn)
        d_bn = np.matmul(g.transpose(0, 2, 1), an)
        da = (d_an - an * (d_an * an).sum(axis=-1, keepdims=True)) / na
        db = (d_bn - bn * (d_bn * bn).sum(axis=-1, keepdims=True)) / nb
        return da, db

    return make_result(y, (a, b), back)


def masked_max(x: Tensor, mask=None) -> tuple[Tensor, np.ndarray]:
    """Max over the last axis; ties go to the lowest index.

    Returns the values and the winning indices.  The gradient reaches only
    the winning entry (subgradient of max).
    """
    mask = _check_mask(mask, x.shape, "masked_max")
    z = x.data if mask is None else np.where(mask, x.data, -np.inf)
    idx = z.argmax(axis=-1)
    y = np.take_along_axis(x.data, idx[..., None], axis=-1)[..., 0]

    def back(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, idx[..., None], g[..., None], axis=-1)
        return (full,)

    return make_result(y, (x,), back), idx


def weighted_sum(alpha: Tensor, h: Tensor) -> Tensor:
    """``sum_j alpha[:, j] * h[:, j, :]`` accumulated left to right over ``j``."""
    if alpha.ndim != 2 or h.ndim != 3 or alpha.shape != h.shape[:2]:
        raise DimensionError(f"weighted_sum: weights {alpha.shape} vs rows {h.shape}")
    acc = np.zeros((h.shape[0], h.shape[2]), dtype=h.dtype)
    for j in range(h.shape[1]):
        acc = acc + alpha.data[:, j, None] * h.data[:, j, :]

    def back(g):
        d_alpha = (g[:, None, :] * h.data).sum(axis=-1)
        d_h = alpha.data[:, :, None] * g[:, None, :]
        return d_alpha, d_h

    return make_result(acc, (alpha, h), back)


def masked_mean(h: Tensor, mask) -> Tensor:
    """Mean of the unmasked rows ``h[:, j, :]``, summed left to right."""
    mask = _check_mask(mask, h.shape[:2], "masked_mean")
    if mask is None:
        mask = np.ones(h.shape[:2], dtype=bool)
    count = mask.sum(axis=1).astype(h.dtype)[:, None]
    acc = np.zeros((h.shape[0], h.shape[2]), dtype=h.dtype)
    for j in range(h.shape[1]):
        acc = acc + np.where(mask[:, j, None], h.data[:, j, :], 0.0)
    y = acc / count

    def back(g):
        return (mask[:, :, None] * (g / count)[:, None, :],)

    return make_result(y.astype(h.dtype, copy=False), (h,), back)


def gather_rows(x: Tensor, idx) -> Tensor:
    """``x[b, idx[b], :]`` for a ``[B, M, d]`` tensor."""
    idx = np.asarray(idx, dtype=np.int64)
    if x.ndim != 3 or idx.shape != (x.shape[0],):
        raise DimensionError(f"gather_rows: {x.shape} with index {idx.shape}")
    rows = np.arange(x.shape[0])
    y = x.data[rows, idx]

    def back(g):
        full = np.zeros_like(x.data)
        full[rows, idx] = g
        return (full,)

    return make_result(y, (x,), back)


def take_rows(x: Tensor, idx) -> Tensor:
    """``y[b, j] = x[b, idx[b, j]]`` along axis 1 (used to reorder keywords)."""
    idx = np.asarray(idx, dtype=np.int64)
    if x.ndim < 2 or idx.shape != x.shape[:2]:
        raise DimensionError(f"take_rows: {x.shape} with index {idx.shape}")
    full_idx = idx.reshape(idx.shape + (1,) * (x.ndim - 2))
    y = np.take_along_axis(x.data, full_idx, axis=1)

    def back(g):
        full = np.zeros_like(x.data)
        rows = np.arange(x.shape[0])[:, None]
        np.add.at(full, (rows, idx), g)
        return (full,)

    return make_result(y, (x,), back)


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, train: bool = True) -> Tensor:
    """Inverted dropout; identity when not training."""
    if not train or p <= 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / x.dtype.type(1.0 - p)
    return make_result(x.data * keep, (x,), lambda g: (g * keep,))


def sum(x: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    return make_result(np.asarray(x.data.sum(), dtype=x.dtype), (x,), lambda g: (np.full_like(x.data, g),))


def gru_step(gx: Tensor, h: Tensor, wh: Tensor, bh: Tensor) -> Tensor:
    """One GRU update given the precomputed input projection ``gx`` ([B, 3H])."""
    H = h.shape[1]
    if gx.shape != (h.shape[0], 3 * H) or wh.shape != (H, 3 * H) or bh.shape != (3 * H,):
        raise DimensionError(f"gru_step: gx {gx.shape}, h {h.shape}, wh {wh.shape}, bh {bh.shape}")
    gh = h.data @ wh.data + bh.data
    gxd = np.ascontiguousarray(gx.data)
    hd = np.ascontiguousarray(h.data)
    gh = np.ascontiguousarray(gh, dtype=hd.dtype)
    h_new, r, z, n = kernels.gru_forward(gxd, gh, hd)

    def back(g):
        d_gx, d_gh, dh = kernels.gru_backward(np.ascontiguousarray(g, dtype=hd.dtype), gh, hd, r, z, n)
        dh = dh + d_gh @ wh.data.T
        return d_gx, dh, hd.T @ d_gh, d_gh.sum(axis=0)

    return make_result(h_new, (gx, h, wh, bh), back)


def gru_cell(x: Tensor, h: Tensor, wx: Tensor, wh: Tensor, bx: Tensor, bh: Tensor) -> Tensor:
    return gru_step(linear(x, wx, bx), h, wh, bh)


_ELEMENTWISE = {
    "tanh": tanh,
    "sigmoid": sigmoid,
    "add": add,
    "mul": mul,
    "scale": scale,
    "concat": lambda *ts, axis=-1: concat(ts, axis=axis),
}


def elementwise(op: str, *args, **kwargs) -> Tensor:
    """Dispatch by name: ``elementwise("tanh", x)``, ``elementwise("add", a, b)``."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}; choose from {sorted(_ELEMENTWISE)}") from None
    return fn(*args, **kwargs)
