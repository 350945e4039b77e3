"""Dense tensors recorded on a computation tape for reverse-mode autodiff.

Every differentiable operation that touches a tensor with ``requires_grad``
appends one node to the active :class:`Tape`.  :func:`backward` walks that
tape once in reverse and accumulates gradients into the leaves.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, Sequence

import numpy as np


class NumericsError(Exception):
    """Base class for errors raised by the tensor library."""


class DimensionError(NumericsError, ValueError):
    pass


class InvalidMaskError(NumericsError, ValueError):
    pass


class NumericDegenerateError(NumericsError, ArithmeticError):
    pass


class TapeStateError(NumericsError, RuntimeError):
    pass


_local = threading.local()


def _stack() -> list:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
        _local.default = None
        _local.grad_enabled = True
        _local.dtype = np.float32
    return _local.tapes


def get_default_dtype() -> type:
    _stack()
    return _local.dtype


def set_default_dtype(dtype) -> None:
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"unsupported dtype {dtype!r}")
    _stack()
    _local.dtype = dtype


@contextmanager
def precision(dtype) -> Iterator[None]:
    """Temporarily switch the default floating dtype (e.g. float64 for checks)."""
    old = get_default_dtype()
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(old)


def grad_enabled() -> bool:
    _stack()
    return _local.grad_enabled


@contextmanager
def no_grad() -> Iterator[None]:
    _stack()
    old = _local.grad_enabled
    _local.grad_enabled = False
    try:
        yield
    finally:
        _local.grad_enabled = old


class _Node:
    __slots__ = ("out", "inputs", "backward")

    def __init__(self, out: "Tensor", inputs: tuple, backward: Callable):
        self.out = out
        self.inputs = inputs
        self.backward = backward


class Tape:
    """Ordered record of executed operations.

    Nodes are appended in execution order, so the list is already a
    topological order.  A tape can be consumed by exactly one backward pass.
    """

    def __init__(self) -> None:
        self.nodes: list[_Node] = []
        self.consumed = False

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, out: "Tensor", inputs: tuple, backward: Callable) -> None:
        if self.consumed:
            raise TapeStateError("cannot record on a tape that was already consumed by backward()")
        self.nodes.append(_Node(out, inputs, backward))
        out._tape = self

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _stack().remove(self)


def active_tape() -> Tape:
    tapes = _stack()
    if tapes:
        return tapes[-1]
    if _local.default is None or _local.default.consumed:
        _local.default = Tape()
    return _local.default


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_tape", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str | None = None):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64):
                dtype = data.dtype
            else:
                dtype = get_default_dtype()
        self.data = np.asarray(data, dtype=dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._tape: Tape | None = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}{label}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops

        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def make_result(data: np.ndarray, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    """Wrap ``data`` as an op output; record a tape node if any input needs grad.

    ``backward(g)`` receives the output gradient and returns one gradient per
    input (``None`` for inputs that need none).
    """
    out = Tensor(data, dtype=data.dtype)
    if grad_enabled() and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        active_tape().record(out, tuple(inputs), backward)
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that requires grad."""
    if loss.size != 1:
        raise DimensionError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise TapeStateError("loss does not depend on any tensor that requires grad")
    if loss.is_leaf:
        loss.grad = np.ones_like(loss.data) if loss.grad is None else loss.grad + 1.0
        return
    tape = loss._tape
    if tape.consumed:
        raise TapeStateError("tape already consumed; recompute the forward pass before calling backward() again")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        in_grads = node.backward(g)
        for inp, gi in zip(node.inputs, in_grads):
            if gi is None or not inp.requires_grad:
                continue
            if inp.is_leaf:
                inp.grad = gi.copy() if inp.grad is None else inp.grad + gi
            else:
                key = id(inp)
                prev = grads.get(key)
                grads[key] = gi if prev is None else prev + gi
    tape.consumed = True
    tape.nodes.clear()
