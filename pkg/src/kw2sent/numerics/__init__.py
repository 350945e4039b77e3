"""Minimal dense-tensor library with tape-based reverse-mode autodiff."""
from . import kernels, ops
from .ops import (
    add,
    blend,
    concat,
    cosine,
    cross_entropy,
    dropout,
    elementwise,
    embedding,
    expand,
    gather_rows,
    gru_cell,
    gru_step,
    linear,
    log_softmax_np,
    masked_max,
    masked_mean,
    matmul,
    mul,
    pairwise_cosine,
    reshape,
    rowscale,
    scale,
    select,
    sigmoid,
    softmax,
    stack,
    sub,
    take_rows,
    tanh,
    weighted_sum,
)
from .optim import Adam, AdamState, adam_step, clip_grad_norm, global_grad_norm
from .tensor import (
    DimensionError,
    InvalidMaskError,
    NumericDegenerateError,
    NumericsError,
    Tape,
    TapeStateError,
    Tensor,
    active_tape,
    as_tensor,
    backward,
    get_default_dtype,
    grad_enabled,
    no_grad,
    precision,
    set_default_dtype,
)

sum = ops.sum  # noqa: A001

__all__ = [name for name in dir() if not name.startswith("_")]
