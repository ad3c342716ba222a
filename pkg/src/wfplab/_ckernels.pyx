# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. See ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, floor, INFINITY, fabs

cnp.import_array()


def neumaier_sum(a):
    cdef const double[::1] v = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double s = 0.0, c = 0.0, t, x
    with nogil:
        for i in range(n):
            x = v[i]
            t = s + x
            if fabs(s) >= fabs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
    return s + c


def log_sum_exp(logs):
    cdef const double[::1] v = np.ascontiguousarray(logs, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double top = -INFINITY, s = 0.0, c = 0.0, t, x
    if n == 0:
        return -INFINITY
    for i in range(n):
        if v[i] > top:
            top = v[i]
    if top == -INFINITY:
        return -INFINITY
    with nogil:
        for i in range(n):
            x = exp(v[i] - top)
            t = s + x
            if fabs(s) >= fabs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
    return top + log(s + c)


cdef inline void _weights(double t, int kind, double* w) noexcept nogil:
    cdef double t2 = t * t, t3 = t2 * t
    if kind == 0:
        w[0] = 0.5 * (-t3 + 2.0 * t2 - t)
        w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
        w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
        w[3] = 0.5 * (t3 - t2)
    else:
        w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0
        w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
        w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0
        w[3] = (t + 1.0) * t * (t - 1.0) / 6.0


def interp2_batch(f, px, py, int kind):
    cdef const double[:, :, ::1] F = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[::1] X = np.ascontiguousarray(px, dtype=np.float64).ravel()
    cdef const double[::1] Y = np.ascontiguousarray(py, dtype=np.float64).ravel()
    cdef Py_ssize_t nx = F.shape[0], ny = F.shape[1], nb = F.shape[2]
    cdef Py_ssize_t npts = X.shape[0], p, a, b, k, ix, iy
    out_arr = np.zeros((npts, nb))
    cdef double[:, ::1] out = out_arr
    cdef double wx[4]
    cdef double wy[4]
    cdef double fx, fy, wgt
    cdef Py_ssize_t bx, by
    with nogil:
        for p in range(npts):
            fx = floor(X[p])
            fy = floor(Y[p])
            bx = <Py_ssize_t>fx
            by = <Py_ssize_t>fy
            _weights(X[p] - fx, kind, wx)
            _weights(Y[p] - fy, kind, wy)
            for a in range(4):
                ix = bx + a - 1
                if ix < 0 or ix >= nx:
                    continue
                for b in range(4):
                    iy = by + b - 1
                    if iy < 0 or iy >= ny:
                        continue
                    wgt = wx[a] * wy[b]
                    for k in range(nb):
                        out[p, k] += wgt * F[ix, iy, k]
    return out_arr


def theta_direct(w, dv, sintab):
    cdef const double[:, ::1] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[:, ::1] D = np.ascontiguousarray(dv, dtype=np.float64)
    cdef const double[:, ::1] S = np.ascontiguousarray(sintab, dtype=np.float64)
    cdef Py_ssize_t nx = W.shape[0], n = W.shape[1], ne = D.shape[1], nq = S.shape[1]
    cdef Py_ssize_t i, j, l, e, q
    cdef double acc, de
    out_arr = np.zeros((nx, n))
    cdef double[:, ::1] out = out_arr
    ker_arr = np.empty(nq)
    cdef double[::1] K = ker_arr
    with nogil:
        for i in range(nx):
            # K[q] = sum_e dv[i, e] sintab[e, q], then a direct correlation with w[i, :]
            for q in range(nq):
                K[q] = 0.0
            for e in range(ne):
                de = D[i, e]
                for q in range(nq):
                    K[q] = K[q] + de * S[e, q]
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc = acc + W[i, l] * K[j - l + n - 1]
                out[i, j] = acc
    return out_arr
