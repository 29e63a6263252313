# cython: language_level=3
"""Compiled versions of the per-pixel loops in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log, expm1, tanh, sqrt

cnp.import_array()

cdef double SERIES_EPS = 1e-2


def uniform_logmgf_grad(t, lo, hi):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] uu = np.ascontiguousarray(
        np.broadcast_to(lo, np.shape(t)), dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] vv = np.ascontiguousarray(
        np.broadcast_to(hi, np.shape(t)), dtype=np.float64).ravel()
    cdef Py_ssize_t n = tt.shape[0]
    cdef cnp.ndarray[double, ndim=1] grad = np.empty(n, dtype=np.float64)
    cdef double total = 0.0
    cdef double ti, u, v, w, mid, s, a, s2, y
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ti = tt[i]
            u = uu[i]
            v = vv[i]
            w = v - u
            mid = 0.5 * (u + v)
            s = ti * w
            a = fabs(s)
            if a < SERIES_EPS:
                s2 = s * s
                total += ti * mid + s2 / 24.0 - s2 * s2 / 2880.0
                grad[i] = mid + w * (s / 12.0 - s * s2 / 720.0)
            else:
                if s > 0:
                    total += ti * v
                else:
                    total += ti * u
                total += log(-expm1(-a)) - log(a)
                y = 0.5 * s
                grad[i] = mid + 0.5 * w * (1.0 / tanh(y) - 1.0 / y)
    return float(total), grad.reshape(np.shape(t))


def chambolle_tv(f, double weight, int n_iter, double tau):
    ff_arr = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t h = ff_arr.shape[0]
    cdef Py_ssize_t w = ff_arr.shape[1]
    if h < 2 or w < 2:
        return ff_arr.copy()
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef const double[:, ::1] ff = ff_arr
    cdef double[:, ::1] px = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] py = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] g = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double inv_w = 1.0 / weight
    cdef double gx, gy, denom
    cdef Py_ssize_t i, j, it
    with nogil:
        for it in range(n_iter):
            for i in range(h):
                for j in range(w):
                    g[i, j] = _div(px, py, i, j, h, w) - ff[i, j] * inv_w
            for i in range(h):
                for j in range(w):
                    gx = g[i + 1, j] - g[i, j] if i < h - 1 else 0.0
                    gy = g[i, j + 1] - g[i, j] if j < w - 1 else 0.0
                    denom = 1.0 + tau * sqrt(gx * gx + gy * gy)
                    px[i, j] = (px[i, j] + tau * gx) / denom
                    py[i, j] = (py[i, j] + tau * gy) / denom
        for i in range(h):
            for j in range(w):
                out[i, j] = ff[i, j] - weight * _div(px, py, i, j, h, w)
    return out_arr


cdef inline double _div(double[:, ::1] px, double[:, ::1] py,
                        Py_ssize_t i, Py_ssize_t j,
                        Py_ssize_t h, Py_ssize_t w) noexcept nogil:
    cdef double d
    if i == 0:
        d = px[i, j]
    elif i == h - 1:
        d = -px[i - 1, j]
    else:
        d = px[i, j] - px[i - 1, j]
    if j == 0:
        d += py[i, j]
    elif j == w - 1:
        d -= py[i, j - 1]
    else:
        d += py[i, j] - py[i, j - 1]
    return d
