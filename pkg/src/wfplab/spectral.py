"""Dense spectral analysis of the generator on a coarse d = 1 grid.

L and H = √μ⁻¹ L √μ share their spectrum; H = Δ + ½(F·∇ + ∇·F) + U is assembled
from Kronecker products of spectral differentiation matrices.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .errors import ConfigError, DivergenceError
from .grid import GridSpec, form_for, mass, mu_values, WignerField, l2_norm
from .operators import potential_U

MAX_COARSE = 64
COARSE_HALF_WIDTHS = (13.0, 8.0)
KERNEL_TOL = 1e-4
GAP_TOL = 1e-3


def coarse_grid(n: int = 48, x_max: float = COARSE_HALF_WIDTHS[0], xi_max: float = COARSE_HALF_WIDTHS[1]) -> GridSpec:
    return GridSpec(d=1, n_x=n, n_xi=n, x_max=x_max, xi_max=xi_max)


@functools.lru_cache(maxsize=16)
def diff_matrices(n: int, h: float) -> tuple:
    """Spectral first and second derivative matrices (Nyquist removed from the first)."""
    k = 2.0 * np.pi * sfft.fftfreq(n, h)
    F = sfft.fft(np.eye(n), axis=0)
    s1 = 1j * k
    s1[n // 2] = 0.0
    D1 = sfft.ifft(s1[:, None] * F, axis=0).real
    D2 = sfft.ifft((-(k**2))[:, None] * F, axis=0).real
    return D1, D2


def assemble_generator(grid: GridSpec) -> np.ndarray:
    """Dense matrix of H on ``grid`` (row-major (x, ξ) flattening)."""
    if grid.d != 1:
        raise ConfigError("dense assembly is implemented for d = 1 only")
    if grid.n_x > MAX_COARSE or grid.n_xi > MAX_COARSE:
        raise ConfigError(f"dense assembly limited to {MAX_COARSE} points per axis")
    D1x, D2x = diff_matrices(grid.n_x, grid.dx)
    D1p, D2p = diff_matrices(grid.n_xi, grid.dxi)
    Ix, Ip = np.eye(grid.n_x), np.eye(grid.n_xi)
    Dx = np.kron(D1x, Ip)
    Dp = np.kron(Ix, D1p)
    Fx, Fp = (np.broadcast_to(f, grid.shape).ravel() for f in form_for(1).rotation(grid.coords()))
    H = np.kron(D2x, Ip) + np.kron(Ix, D2p)
    H += 0.5 * (Fx[:, None] * Dx + Fp[:, None] * Dp + Dx * Fx[None, :] + Dp * Fp[None, :])
    H[np.diag_indices_from(H)] += potential_U(grid).ravel()
    return H


def eigs_rightmost(H: np.ndarray, k: int = 10) -> np.ndarray:
    """The k eigenvalues with largest real part, sorted by real part descending."""
    try:
        ev = sla.eigvals(H, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise DivergenceError(f"dense eigensolver failed: {exc}") from exc
    order = np.lexsort((-ev.imag, -ev.real))
    return ev[order][:k]


@dataclass
class GapReport:
    passed: bool
    n_kernel: int
    kernel_eig: complex
    second_re: float
    sigma: float
    inv_gap: float

    def as_dict(self) -> dict:
        return {
            "passed": self.passed, "n_kernel": self.n_kernel,
            "kernel_eig": [float(np.real(self.kernel_eig)), float(np.imag(self.kernel_eig))],
            "second_re": self.second_re, "sigma": self.sigma, "inv_gap": self.inv_gap,
        }


def verify_gap(eigs, sigma: float, kernel_tol: float = KERNEL_TOL, gap_tol: float = GAP_TOL) -> GapReport:
    """Exactly one eigenvalue with |Re| ≤ kernel_tol, every other with Re ≤ -σ + gap_tol."""
    eigs = np.asarray(eigs, dtype=complex)
    near = np.abs(eigs.real) <= kernel_tol
    rest = eigs[~near]
    second = float(np.max(rest.real)) if rest.size else -np.inf
    passed = bool(near.sum() == 1 and second <= -sigma + gap_tol)
    kern = eigs[near][0] if near.any() else complex(np.nan)
    return GapReport(passed, int(near.sum()), complex(kern), second, sigma,
                     float(1.0 / -second) if second < 0 else np.inf)


def kernel_direction(H: np.ndarray, grid: GridSpec, shift: float = 1e-3, iters: int = 4) -> WignerField:
    """Kernel eigenvector by shifted inverse iteration, mapped back by √μ and normalized to unit mass."""
    n = H.shape[0]
    lu = sla.lu_factor(H - shift * np.eye(n))
    v = np.ones(n) / np.sqrt(n)
    for _ in range(iters):
        v = sla.lu_solve(lu, v)
        v /= np.linalg.norm(v)
    w = WignerField(grid, v.reshape(grid.shape) * np.sqrt(mu_values(grid)))
    return w / mass(w)


def kernel_residual(H: np.ndarray, grid: GridSpec) -> float:
    """‖H√μ‖ / ‖√μ‖."""
    s = np.sqrt(mu_values(grid)).ravel()
    return float(np.linalg.norm(H @ s) / np.linalg.norm(s))


def spectrum_report(n: int = 48, k: int = 10) -> dict:
    grid = coarse_grid(n)
    H = assemble_generator(grid)
    ev = eigs_rightmost(H, k)
    gap = verify_gap(ev, form_for(1).sigma)
    kd = kernel_direction(H, grid)
    mu = WignerField(grid, mu_values(grid))
    return {
        "n": n, "box": [grid.x_max, grid.xi_max], "eigenvalues": ev, "gap": gap,
        "kernel_residual": kernel_residual(H, grid),
        "kernel_vs_mu": l2_norm(kd - mu) / l2_norm(mu),
    }
