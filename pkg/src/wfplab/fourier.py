"""Spectral building blocks on the periodic box: derivatives, shifts, resampling.

Odd-order derivative symbols vanish on the Nyquist mode so real fields stay real.
"""
from __future__ import annotations

import functools
import os

import numpy as np
import scipy.fft as sfft

_WORKERS = [None]


def set_workers(n: int | None) -> None:
    """Number of threads scipy.fft may use (None = library default)."""
    _WORKERS[0] = n


def workers():
    if _WORKERS[0] is None:
        env = os.environ.get("WFP_LAB_THREADS")
        return int(env) if env else None
    return _WORKERS[0]


@functools.lru_cache(maxsize=64)
def wavenumbers(n: int, h: float) -> np.ndarray:
    k = 2.0 * np.pi * sfft.fftfreq(n, h)
    k.flags.writeable = False
    return k


@functools.lru_cache(maxsize=64)
def rwavenumbers(n: int, h: float) -> np.ndarray:
    k = 2.0 * np.pi * sfft.rfftfreq(n, h)
    k.flags.writeable = False
    return k


@functools.lru_cache(maxsize=64)
def _deriv_symbol(n: int, h: float, order: int) -> np.ndarray:
    k = rwavenumbers(n, h)
    sym = (1j * k) ** order
    if order % 2 and n % 2 == 0:
        sym = sym.copy()
        sym[-1] = 0.0
    sym.flags.writeable = False
    return sym


def _along(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    sh = [1] * ndim
    sh[axis] = vec.shape[0]
    return vec.reshape(sh)


def deriv(f: np.ndarray, axis: int, h: float, order: int = 1) -> np.ndarray:
    """Spectral derivative of a real periodic array along ``axis``."""
    n = f.shape[axis]
    fh = sfft.rfft(f, axis=axis, workers=workers())
    fh *= _along(_deriv_symbol(n, h, order), axis, f.ndim)
    return sfft.irfft(fh, n=n, axis=axis, workers=workers())


def shift_along(f: np.ndarray, axis: int, h: float, offsets) -> np.ndarray:
    """Evaluate f at y_axis + offsets (periodic trigonometric interpolation).

    ``offsets`` broadcasts against f with the shifted axis collapsed to length 1.
    """
    n = f.shape[axis]
    k = _along(rwavenumbers(n, h), axis, f.ndim)
    off = np.asarray(offsets, dtype=float)
    phase = np.exp(1j * k * off)
    if n % 2 == 0:
        # Nyquist mode: keep the real part of the shifted cosine
        idx = [slice(None)] * f.ndim
        idx[axis] = slice(n // 2, n // 2 + 1)
        phase[tuple(idx)] = np.cos(k[tuple(idx)] * off)
    fh = sfft.rfft(f, axis=axis, workers=workers())
    return sfft.irfft(fh * phase, n=n, axis=axis, workers=workers())


@functools.lru_cache(maxsize=64)
def resample_matrix(n: int, half: float, scale: float) -> np.ndarray:
    """Matrix R with (R f)_j ≈ f(scale·y_j) for samples f on the grid y_j = -half + j·h.

    Rows whose target falls outside the box are zero (fields vanish there).
    """
    h = 2.0 * half / n
    y = -half + h * np.arange(n)
    k = wavenumbers(n, h)
    tgt = scale * y
    E = np.exp(1j * np.outer(tgt - y[0], k))
    E[:, n // 2] = np.cos((tgt - y[0]) * k[n // 2])
    # forward DFT relative to y[0]
    F = np.exp(-1j * np.outer(k, y - y[0])) / n
    R = (E @ F).real
    R[(tgt < -half) | (tgt >= half)] = 0.0
    R.flags.writeable = False
    return R


def apply_along(M: np.ndarray, f: np.ndarray, axis: int) -> np.ndarray:
    """Apply matrix M to f along ``axis``."""
    return np.moveaxis(np.tensordot(M, f, axes=([1], [axis])), 0, axis)


def upsample2(f: np.ndarray, axis: int) -> np.ndarray:
    """Trigonometric interpolation onto a grid with half the spacing along ``axis``."""
    n = f.shape[axis]
    fh = sfft.fft(f, axis=axis, workers=workers())
    sh = list(f.shape)
    sh[axis] = 2 * n
    g = np.zeros(sh, dtype=complex)
    idx_lo = [slice(None)] * f.ndim
    idx_hi = [slice(None)] * f.ndim
    idx_lo[axis] = slice(0, n // 2)
    idx_hi[axis] = slice(n // 2 + 1, n)
    g[tuple(idx_lo)] = fh[tuple(idx_lo)]
    tgt = [slice(None)] * f.ndim
    tgt[axis] = slice(2 * n - (n - n // 2 - 1), 2 * n)
    g[tuple(tgt)] = fh[tuple(idx_hi)]
    # split the Nyquist coefficient symmetrically
    nyq = [slice(None)] * f.ndim
    nyq[axis] = slice(n // 2, n // 2 + 1)
    half = 0.5 * fh[tuple(nyq)]
    g[tuple(nyq)] = half
    nyq2 = [slice(None)] * f.ndim
    nyq2[axis] = slice(2 * n - n // 2, 2 * n - n // 2 + 1)
    g[tuple(nyq2)] += half
    out = sfft.ifft(g, axis=axis, workers=workers()) * 2.0
    return out if np.iscomplexobj(f) else out.real
