# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: fused GRU gate math and the LCS dynamic program."""
import numpy as np

from libc.math cimport exp

ctypedef fused real:
    float
    double


cdef inline double _tanh(double x) noexcept nogil:
    # exp-based form: cheaper than libm tanh, exact to ~1e-16 absolute
    if x >= 0.0:
        return 1.0 - 2.0 / (exp(2.0 * x) + 1.0)
    return 2.0 / (exp(-2.0 * x) + 1.0) - 1.0


cdef inline double _sigmoid(double x) noexcept nogil:
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    cdef double e = exp(x)
    return e / (1.0 + e)


def gru_forward(real[:, ::1] gx, real[:, ::1] gh, real[:, ::1] h):
    cdef Py_ssize_t B = h.shape[0]
    cdef Py_ssize_t H = h.shape[1]
    if gx.shape[0] != B or gh.shape[0] != B or gx.shape[1] != 3 * H or gh.shape[1] != 3 * H:
        raise ValueError("gru_forward: inconsistent shapes")
    dtype = np.float32 if real is float else np.float64
    h_new_a = np.empty((B, H), dtype=dtype)
    r_a = np.empty((B, H), dtype=dtype)
    z_a = np.empty((B, H), dtype=dtype)
    n_a = np.empty((B, H), dtype=dtype)
    cdef real[:, ::1] h_new = h_new_a
    cdef real[:, ::1] r = r_a
    cdef real[:, ::1] z = z_a
    cdef real[:, ::1] n = n_a
    cdef Py_ssize_t b, k
    cdef double rv, zv, nv
    with nogil:
        for b in range(B):
            for k in range(H):
                rv = _sigmoid(gx[b, k] + gh[b, k])
                zv = _sigmoid(gx[b, H + k] + gh[b, H + k])
                nv = _tanh(gx[b, 2 * H + k] + rv * gh[b, 2 * H + k])
                r[b, k] = <real>rv
                z[b, k] = <real>zv
                n[b, k] = <real>nv
                h_new[b, k] = <real>((1.0 - zv) * nv + zv * h[b, k])
    return h_new_a, r_a, z_a, n_a


def gru_backward(real[:, ::1] dh_new, real[:, ::1] gh, real[:, ::1] h,
                 real[:, ::1] r, real[:, ::1] z, real[:, ::1] n):
    cdef Py_ssize_t B = h.shape[0]
    cdef Py_ssize_t H = h.shape[1]
    dtype = np.float32 if real is float else np.float64
    d_gx_a = np.empty((B, 3 * H), dtype=dtype)
    d_gh_a = np.empty((B, 3 * H), dtype=dtype)
    dh_a = np.empty((B, H), dtype=dtype)
    cdef real[:, ::1] d_gx = d_gx_a
    cdef real[:, ::1] d_gh = d_gh_a
    cdef real[:, ::1] dh = dh_a
    cdef Py_ssize_t b, k
    cdef double g, rv, zv, nv, dn_pre, dr_pre, dz_pre
    with nogil:
        for b in range(B):
            for k in range(H):
                g = dh_new[b, k]
                rv = r[b, k]
                zv = z[b, k]
                nv = n[b, k]
                dn_pre = g * (1.0 - zv) * (1.0 - nv * nv)
                dr_pre = dn_pre * gh[b, 2 * H + k] * rv * (1.0 - rv)
                dz_pre = g * (h[b, k] - nv) * zv * (1.0 - zv)
                d_gx[b, k] = <real>dr_pre
                d_gx[b, H + k] = <real>dz_pre
                d_gx[b, 2 * H + k] = <real>dn_pre
                d_gh[b, k] = <real>dr_pre
                d_gh[b, H + k] = <real>dz_pre
                d_gh[b, 2 * H + k] = <real>(dn_pre * rv)
                dh[b, k] = <real>(g * zv)
    return d_gx_a, d_gh_a, dh_a


def lcs_length(a, b):
    cdef long long[::1] x = np.ascontiguousarray(a, dtype=np.int64)
    cdef long long[::1] y = np.ascontiguousarray(b, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = y.shape[0]
    if n == 0 or m == 0:
        return 0
    prev_a = np.zeros(m + 1, dtype=np.int64)
    cur_a = np.zeros(m + 1, dtype=np.int64)
    cdef long long[::1] prev = prev_a
    cdef long long[::1] cur = cur_a
    cdef long long[::1] tmp
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            cur[0] = 0
            for j in range(m):
                if x[i] == y[j]:
                    cur[j + 1] = prev[j] + 1
                elif cur[j] > prev[j + 1]:
                    cur[j + 1] = cur[j]
                else:
                    cur[j + 1] = prev[j + 1]
            tmp = prev
            prev = cur
            cur = tmp
    return int(prev[m])
