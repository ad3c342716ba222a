"""Wigner function ↔ density-matrix kernel (d = 1) and trace / Hilbert-Schmidt / positivity diagnostics.

Conventions: w(x, ξ) = (2π)⁻¹ ∫ ρ(x + η/2, x - η/2) e^{-iξη} dη and its exact inverse
ρ(x, y) = ∫ w((x+y)/2, ξ) e^{+iξ(x-y)} dξ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fourier
from .errors import ConfigError, InvariantError
from .grid import GridSpec, WignerField, l2_norm

HERMITIAN_TOL = 1e-8


@dataclass
class DensityMatrixKernel:
    """ρ(x_i, x_j) on the position grid x_i = x0 + i·dx."""

    entries: np.ndarray
    dx: float
    x0: float

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ConfigError("density-matrix kernel must be a square matrix")
        if not np.all(np.isfinite(self.entries)):
            raise InvariantError("density-matrix kernel has non-finite entries")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)


def _require_1d(grid: GridSpec) -> None:
    if grid.d != 1:
        raise ConfigError("density matrices are implemented for d = 1 only")


def wigner_to_rho(w: WignerField) -> DensityMatrixKernel:
    """ρ[i, j] = Σ_l w((x_i + x_j)/2, ξ_l) e^{iξ_l (x_i - x_j)} dξ.

    Midpoints sit on the half-spacing grid, reached by trigonometric upsampling in x.
    The ξ-sum is periodic in x - y with period 2π/dξ, so ξ is upsampled until that
    period is at least 4·x_max and the aliased copy lands where the kernel has decayed.
    """
    grid = w.grid
    _require_1d(grid)
    n = grid.n_x
    vals, dxi = w.values, grid.dxi
    while 2.0 * math.pi / dxi < 4.0 * grid.x_max:
        vals, dxi = fourier.upsample2(vals, 1), 0.5 * dxi
    xi = -grid.xi_max + dxi * np.arange(vals.shape[1])
    fine = fourier.upsample2(vals, 0)  # (2n, n_ξ), fine index i + j ↔ midpoint
    q = np.arange(-(n - 1), n)
    phase = np.exp(1j * np.outer(xi, q * grid.dx)) * dxi  # (n_ξ, 2n-1)
    table = fine @ phase  # table[s, q] = ρ at midpoint index s, difference q·dx
    i = np.arange(n)
    s = i[:, None] + i[None, :]
    dq = i[:, None] - i[None, :]
    rho = table[s, dq + n - 1]
    return DensityMatrixKernel(rho, grid.dx, float(grid.x[0]))


def hermiticity_error(rho: DensityMatrixKernel) -> float:
    """max |ρ - ρ*| relative to max |ρ|."""
    scale = float(np.max(np.abs(rho.entries))) or 1.0
    return float(np.max(np.abs(rho.entries - rho.entries.conj().T))) / scale


def rho_to_wigner(rho: DensityMatrixKernel, grid: GridSpec) -> WignerField:
    """w(x_r, ξ) = (2π)⁻¹ Σ_q ρ(x_r + q·dx/2, x_r - q·dx/2) e^{-iξ q dx} dx."""
    _require_1d(grid)
    if rho.n != grid.n_x or abs(rho.dx - grid.dx) > 1e-12 * grid.dx:
        raise ConfigError("kernel does not match the grid's position axis")
    herr = hermiticity_error(rho)
    if herr > HERMITIAN_TOL:
        raise InvariantError(f"density-matrix kernel is not Hermitian (relative error {herr:.2e})")
    n = rho.n
    fine = fourier.upsample2(fourier.upsample2(rho.entries, 0), 1)  # spacing dx/2 on both axes
    r = np.arange(n)
    q = np.arange(-(n - 1), n)
    a = 2 * r[:, None] + q[None, :]
    b = 2 * r[:, None] - q[None, :]
    ok = (a >= 0) & (a < 2 * n) & (b >= 0) & (b < 2 * n)
    theta = np.where(ok, fine[np.clip(a, 0, 2 * n - 1), np.clip(b, 0, 2 * n - 1)], 0.0)
    phase = np.exp(-1j * np.outer(q * grid.dx, grid.xi)) * (grid.dx / (2.0 * math.pi))
    out = theta @ phase
    scale = float(np.max(np.abs(out.real))) or 1.0
    if float(np.max(np.abs(out.imag))) > 1e-6 * scale:
        raise InvariantError("inverse Wigner transform produced a complex field")
    return WignerField(grid, out.real)


def trace_of(rho: DensityMatrixKernel) -> float:
    return float(np.sum(np.diag(rho.entries)).real) * rho.dx


def t2_norm(rho: DensityMatrixKernel) -> float:
    """Hilbert-Schmidt norm: Frobenius norm of the kernel times dx."""
    return float(np.linalg.norm(rho.entries)) * rho.dx


def t2_relation_error(rho: DensityMatrixKernel, w: WignerField) -> float:
    """|‖ρ‖_{T₂} - √(2π)‖w‖_{L²}| relative to the latter."""
    ref = math.sqrt(2.0 * math.pi) * l2_norm(w)
    return abs(t2_norm(rho) - ref) / ref if ref else t2_norm(rho)


def operator_eigenvalues(rho: DensityMatrixKernel) -> np.ndarray:
    """Eigenvalues of the integral operator, i.e. of the Hermitian part of ρ·dx."""
    herm = 0.5 * (rho.entries + rho.entries.conj().T)
    return np.linalg.eigvalsh(herm * rho.dx)


def positivity_spectrum(rho: DensityMatrixKernel) -> tuple:
    """(min eigenvalue, Σ |negative eigenvalues|) of the operator."""
    ev = operator_eigenvalues(rho)
    return float(ev[0]), float(-np.sum(ev[ev < 0]))


def trace_norm(rho: DensityMatrixKernel) -> float:
    """Σ |eigenvalues|, the T₁ norm of the Hermitian operator."""
    return float(np.sum(np.abs(operator_eigenvalues(rho))))


def pure_state_wigner(grid: GridSpec) -> WignerField:
    """Wigner function (1/π) e^{-x²-ξ²} of φ(x) = π^{-1/4} e^{-x²/2}."""
    return WignerField(grid, np.exp(-grid.x[:, None] ** 2 - grid.xi[None, :] ** 2) / math.pi)


def pure_state_kernel(grid: GridSpec) -> DensityMatrixKernel:
    phi = math.pi**-0.25 * np.exp(-0.5 * grid.x**2)
    return DensityMatrixKernel(np.outer(phi, phi), grid.dx, float(grid.x[0]))
