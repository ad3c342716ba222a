"""Numpy fallback for the compiled kernels in ``_ckernels.pyx``.

Signatures and results match the compiled versions; only speed differs.
"""
import math

import numpy as np


def neumaier_sum(a):
    # math.fsum is exactly rounded, so it is at least as accurate as Neumaier.
    return math.fsum(np.ascontiguousarray(a, dtype=np.float64).ravel())


def log_sum_exp(logs):
    """Return log(sum(exp(logs))) with a max shift and compensated summation."""
    logs = np.ascontiguousarray(logs, dtype=np.float64).ravel()
    if logs.size == 0:
        return -math.inf
    top = float(np.max(logs))
    if top == -math.inf:
        return -math.inf
    return top + math.log(neumaier_sum(np.exp(logs - top)))


def _weights(t, kind):
    t2 = t * t
    t3 = t2 * t
    if kind == 0:
        # Keys cubic convolution, a = -1/2
        return (
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        )
    # 4-point Lagrange on nodes -1, 0, 1, 2
    return (
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    )


def interp2_batch(f, px, py, kind):
    """Interpolate ``f[ix, iy, b]`` at fractional index points (px, py).

    Samples outside the array are treated as zero. Returns shape (npts, B).
    """
    f = np.ascontiguousarray(f, dtype=np.float64)
    nx, ny, nb = f.shape
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    bx = np.floor(px).astype(np.int64)
    by = np.floor(py).astype(np.int64)
    wx = _weights(px - bx, kind)
    wy = _weights(py - by, kind)
    out = np.zeros((px.size, nb))
    for a in range(4):
        ix = bx + a - 1
        okx = (ix >= 0) & (ix < nx)
        for b in range(4):
            iy = by + b - 1
            ok = okx & (iy >= 0) & (iy < ny)
            wgt = np.where(ok, wx[a] * wy[b], 0.0)
            vals = f[np.where(ok, ix, 0), np.where(ok, iy, 0)]
            out += wgt[:, None] * vals
    return out


def theta_direct(w, dv, sintab):
    """Direct double sum out[i, j] = sum_e dv[i, e] sum_l w[i, l] sintab[e, j - l + n - 1].

    The η-sum is taken first, K[i, q] = sum_e dv[i, e] sintab[e, q], leaving one correlation per row.
    """
    w = np.asarray(w, dtype=np.float64)
    nx, n = w.shape
    K = np.asarray(dv, dtype=np.float64) @ np.asarray(sintab, dtype=np.float64)  # (nx, 2n - 1)
    idx = np.arange(n)[:, None] - np.arange(n)[None, :] + n - 1
    return np.einsum("ijl,il->ij", K[:, idx], w, optimize=True)
