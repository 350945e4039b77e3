"""Reference numpy / pure-Python versions of the compiled kernels.

Gate layout for the GRU arrays is ``[reset | update | candidate]`` along the
last axis, each block ``H`` wide.
"""
from __future__ import annotations

import numpy as np


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def gru_forward(gx: np.ndarray, gh: np.ndarray, h: np.ndarray):
    """Returns ``(h_new, r, z, n)`` given input/hidden projections and ``h``."""
    H = h.shape[1]
    r = _sigmoid(gx[:, :H] + gh[:, :H])
    z = _sigmoid(gx[:, H : 2 * H] + gh[:, H : 2 * H])
    n = np.tanh(gx[:, 2 * H :] + r * gh[:, 2 * H :])
    h_new = (1.0 - z) * n + z * h
    return h_new, r, z, n


def gru_backward(dh_new, gh, h, r, z, n):
    """Returns ``(d_gx, d_gh, dh_direct)``; ``dh_direct`` excludes the path through ``gh``."""
    H = h.shape[1]
    dn = dh_new * (1.0 - z)
    dz = dh_new * (h - n)
    dh_direct = dh_new * z
    dn_pre = dn * (1.0 - n * n)
    dr = dn_pre * gh[:, 2 * H :]
    dr_pre = dr * r * (1.0 - r)
    dz_pre = dz * z * (1.0 - z)
    d_gx = np.concatenate([dr_pre, dz_pre, dn_pre], axis=1)
    d_gh = np.concatenate([dr_pre, dz_pre, dn_pre * r], axis=1)
    return d_gx, d_gh, dh_direct


def lcs_length(a, b) -> int:
    """Length of the longest common subsequence of two integer sequences."""
    a = list(a)
    b = list(b)
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            if x == y:
                cur.append(prev[j] + 1)
            else:
                cur.append(cur[j] if cur[j] > prev[j + 1] else prev[j + 1])
        prev = cur
    return prev[-1]
