"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback in ``_pykernels`` is used.  Set ``KW2SENT_PURE_PYTHON=1`` to force
the fallback.

The GRU forward pass always takes the numpy path: it is bound by
tanh/exp evaluation, where numpy's vectorized math beats the scalar
compiled loop (see ``benchmarks/bench_kernels.py``).  The compiled
forward kernel is kept for the benchmark and for parity tests.
"""
from __future__ import annotations

import os

from . import _pykernels

fallback = _pykernels
compiled = None

if os.environ.get("KW2SENT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

BACKEND = "compiled" if compiled is not None else "python"
_impl = compiled if compiled is not None else fallback

gru_forward = fallback.gru_forward
gru_backward = _impl.gru_backward
lcs_length = _impl.lcs_length
