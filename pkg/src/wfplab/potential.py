"""Perturbation potentials V₀ and the pseudo-differential operator Θ[V₀].

Θ[V₀] w = -i F⁻¹_{η→ξ}( δV₀(x, η) · F_{ξ→η} w ),  δV₀(x, η) = V₀(x + η/2) - V₀(x - η/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
import scipy.sparse.linalg as spla
from numpy.polynomial import hermite_e
from scipy.special import comb, factorial

from . import fourier, kernels
from .errors import ConfigError, DivergenceError, InvariantError
from .grid import GridSpec, WignerField, hm_weight

KINDS = ("none", "sinusoidal", "gaussian_bump", "tabulated", "custom")
IMAG_TOL = 1e-8
QUADRATURE_MAX_POINTS = 2**20


def snap_k0(k0, dxi: float):
    """Round each wave-vector component to a multiple of 2·dξ so that k₀/2 shifts are exact."""
    step = 2.0 * dxi
    return tuple(float(round(k / step) * step) for k in np.atleast_1d(k0))


@dataclass
class PotentialSpec:
    """λ and the perturbation V₀.

    ``kind`` is one of none, sinusoidal (amp·sin(k₀·x)), gaussian_bump
    (amp·exp(-|x - center|²/(2 width²))), tabulated (d = 1 samples on the x grid)
    or custom (``func`` acting on a list of coordinate arrays).
    """

    lam: float = 0.0
    kind: str = "none"
    d: int = 1
    k0: tuple = (1.0,)
    amp: float = 1.0
    center: tuple = (0.0,)
    width: float = 1.0
    table: Optional[np.ndarray] = None
    table_x_max: float = 12.0
    func: Optional[Callable] = None
    custom_deriv_sup: Optional[tuple] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        self.k0 = tuple(float(v) for v in np.atleast_1d(self.k0))
        self.center = tuple(float(v) for v in np.atleast_1d(self.center))
        if self.kind == "sinusoidal" and len(self.k0) != self.d:
            self.k0 = self.k0[:1] * self.d if len(self.k0) == 1 else self.k0
        if self.kind == "gaussian_bump":
            if self.width <= 0:
                raise ConfigError("gaussian_bump width must be positive")
            if len(self.center) != self.d:
                self.center = self.center[:1] * self.d
        if self.kind == "tabulated":
            if self.d != 1 or self.table is None:
                raise ConfigError("tabulated potentials need d = 1 and a sample table")
            self.table = np.asarray(self.table, dtype=float).ravel()
            edge = max(abs(self.table[0]), abs(self.table[-1]))
            if edge > 1e-8:
                raise ConfigError(f"tabulated V0 must decay below 1e-8 at the box edge (got {edge:.2e})")
        if self.kind == "custom" and self.func is None:
            raise ConfigError("custom potentials need func")

    @property
    def active(self) -> bool:
        return self.kind != "none" and self.amp != 0.0

    def snapped(self, grid: GridSpec) -> "PotentialSpec":
        """Copy with k₀ snapped to the grid (sinusoidal only)."""
        if self.kind != "sinusoidal":
            return self
        return PotentialSpec(
            lam=self.lam, kind=self.kind, d=self.d, k0=snap_k0(self.k0, grid.dxi), amp=self.amp,
        )

    def is_snapped(self, grid: GridSpec) -> bool:
        return self.kind == "sinusoidal" and all(
            abs(k / (2.0 * grid.dxi) - round(k / (2.0 * grid.dxi))) < 1e-9 for k in self.k0
        )

    def V0(self, xs) -> np.ndarray:
        """V₀ at the points given by a list of d coordinate arrays."""
        xs = [np.asarray(x, dtype=float) for x in xs]
        if self.kind == "none":
            return np.zeros(np.broadcast(*xs).shape)
        if self.kind == "sinusoidal":
            return self.amp * np.sin(sum(k * x for k, x in zip(self.k0, xs)))
        if self.kind == "gaussian_bump":
            r2 = sum((x - c) ** 2 for x, c in zip(xs, self.center))
            return self.amp * np.exp(-r2 / (2.0 * self.width**2))
        if self.kind == "tabulated":
            return self.amp * _trig_eval(self.table, self.table_x_max, xs[0])
        return self.amp * np.asarray(self.func(xs))

    def deriv_sup(self, m_max: int) -> np.ndarray:
        """Sup-norms D_p = max_{|j| = p} ‖∂^j V₀‖_∞ for p = 0..m_max."""
        key = ("dsup", m_max)
        if key in self._cache:
            return self._cache[key]
        p = np.arange(m_max + 1)
        if self.kind == "none" or self.amp == 0.0:
            out = np.zeros(m_max + 1)
        elif self.kind == "sinusoidal":
            kmax = max(abs(k) for k in self.k0)
            out = abs(self.amp) * kmax**p
        elif self.kind == "gaussian_bump":
            M = np.array([_hermite_sup(j) for j in p]) / self.width**p
            if self.d == 1:
                out = abs(self.amp) * M
            else:
                out = abs(self.amp) * np.array([max(M[a] * M[j - a] for a in range(j + 1)) for j in p])
        elif self.kind == "tabulated":
            out = abs(self.amp) * _tabulated_sup(self.table, self.table_x_max, m_max)
        else:
            if self.custom_deriv_sup is None or len(self.custom_deriv_sup) <= m_max:
                raise ConfigError("custom potential lacks derivative sup-norm data")
            out = np.asarray(self.custom_deriv_sup[: m_max + 1], dtype=float)
        if np.any(~np.isfinite(out)) or np.any(out < 0):
            raise InvariantError("derivative sup-norms must be finite and nonnegative")
        self._cache[key] = out
        return out


def _trig_eval(samples: np.ndarray, half: float, t) -> np.ndarray:
    """Periodic trigonometric interpolant of samples on [-half, half), zero outside the box."""
    n = samples.size
    h = 2.0 * half / n
    k = fourier.wavenumbers(n, h)
    c = np.fft.fft(samples) / n
    t = np.asarray(t, dtype=float)
    flat = t.ravel() + half
    ph = np.exp(1j * np.outer(flat, k))
    ph[:, n // 2] = np.cos(flat * k[n // 2])
    vals = (ph @ c).real
    vals[(t.ravel() < -half) | (t.ravel() >= half)] = 0.0
    return vals.reshape(t.shape)


def _hermite_sup(j: int) -> float:
    """max_t |d^j/dt^j e^{-t²/2}| = max_t |He_j(t)| e^{-t²/2}."""
    t = np.linspace(-(j + 8.0), j + 8.0, 20001)
    coef = np.zeros(j + 1)
    coef[j] = 1.0
    return float(np.max(np.abs(hermite_e.hermeval(t, coef)) * np.exp(-0.5 * t * t)))


def _tabulated_sup(table: np.ndarray, half: float, m_max: int) -> np.ndarray:
    fine = fourier.upsample2(fourier.upsample2(table, 0), 0)
    h = 2.0 * half / fine.size
    out = [float(np.max(np.abs(fine)))]
    for p in range(1, m_max + 1):
        out.append(float(np.max(np.abs(fourier.deriv(fine, 0, h, p)))))
    return np.array(out)


def delta_V(x, eta, spec: PotentialSpec) -> np.ndarray:
    """δV₀(x, η) = V₀(x + η/2) - V₀(x - η/2); x and η are lists of d coordinate arrays."""
    if spec.d == 1 and not isinstance(x, (list, tuple)):
        x, eta = [x], [eta]
    plus = [xi + 0.5 * e for xi, e in zip(x, eta)]
    minus = [xi - 0.5 * e for xi, e in zip(x, eta)]
    return spec.V0(plus) - spec.V0(minus)


def _symbol(spec: PotentialSpec, grid: GridSpec) -> np.ndarray:
    """δV₀ on (x-grid, η-grid) in FFT ordering, Nyquist η-modes zeroed; cached per grid."""
    key = ("sym", grid)
    if key in spec._cache:
        return spec._cache[key]
    d = grid.d
    eta = fourier.wavenumbers(grid.n_xi, grid.dxi)
    nd = 2 * d
    xs, es = [], []
    for i in range(d):
        sh = [1] * nd
        sh[i] = grid.n_x
        xs.append(grid.x.reshape(sh))
        sh = [1] * nd
        sh[d + i] = grid.n_xi
        es.append(eta.reshape(sh))
    sym = np.broadcast_to(delta_V(xs, es, spec), grid.shape).copy()
    nyq = grid.n_xi // 2
    for i in range(d):
        idx = [slice(None)] * nd
        idx[d + i] = nyq
        sym[tuple(idx)] = 0.0
    sym.flags.writeable = False
    spec._cache[key] = sym
    return sym


def _xi_axes(grid: GridSpec) -> tuple:
    return tuple(range(grid.d, 2 * grid.d))


def _multiplier(w: WignerField, mult: np.ndarray) -> np.ndarray:
    axes = _xi_axes(w.grid)
    wh = sfft.fftn(w.values, axes=axes, workers=fourier.workers())
    out = sfft.ifftn(wh * mult, axes=axes, workers=fourier.workers())
    scale = float(np.max(np.abs(out.real))) if out.size else 0.0
    resid = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if resid > IMAG_TOL * max(scale, 1e-300) and resid > 1e-300:
        raise InvariantError(f"Θ output has imaginary residue {resid:.2e} (aliasing or under-resolved grid)")
    return out.real


def apply_theta(w: WignerField, spec: PotentialSpec) -> WignerField:
    """Θ[V₀] w via the partial Fourier transform in ξ."""
    if not spec.active:
        return WignerField(w.grid, np.zeros(w.grid.shape))
    return WignerField(w.grid, _multiplier(w, -1j * _symbol(spec, w.grid)))


def exp_theta(w: WignerField, spec: PotentialSpec, tau: float) -> WignerField:
    """exp(-τ λ Θ[V₀]) w, exact because Θ is a multiplier in (x, η)."""
    if not spec.active or spec.lam == 0.0 or tau == 0.0:
        return w.copy()
    return WignerField(w.grid, _multiplier(w, np.exp(1j * tau * spec.lam * _symbol(spec, w.grid))))


def apply_theta_quadrature(w: WignerField, spec: PotentialSpec) -> WignerField:
    """Direct double-sum discretization of the Θ integral (d = 1 oracle).

    (Θw)(x, ξ_j) = (1/N) Σ_η δV₀(x, η) Σ_l w(x, ξ_l) sin(η(ξ_j - ξ_l)) over the symmetric
    η set without the Nyquist mode; the cosine part cancels because δV₀ is odd in η.
    """
    grid = w.grid
    if grid.d != 1:
        raise ConfigError("quadrature oracle is implemented for d = 1 only")
    if grid.size > QUADRATURE_MAX_POINTS:
        raise ConfigError(f"quadrature oracle refuses grids above {QUADRATURE_MAX_POINTS} points")
    if not spec.active:
        return WignerField(grid, np.zeros(grid.shape))
    n = grid.n_xi
    j = np.arange(-(n // 2) + 1, n // 2)
    eta = 2.0 * np.pi * j / (n * grid.dxi)
    dv = np.empty((grid.n_x, eta.size))
    for e, et in enumerate(eta):
        dv[:, e] = spec.V0([grid.x + 0.5 * et]) - spec.V0([grid.x - 0.5 * et])
    offs = (np.arange(2 * n - 1) - (n - 1)) * grid.dxi
    sintab = np.sin(np.outer(eta, offs))
    out = kernels.theta_direct(w.values, dv, sintab) / n
    return WignerField(grid, out)


def _theta_raw(vals: np.ndarray, spec: PotentialSpec, grid: GridSpec) -> np.ndarray:
    return _multiplier(WignerField(grid, vals), -1j * _symbol(spec, grid))


def gamma_m_estimate(spec: PotentialSpec, m: int, grid: GridSpec, tol: float = 1e-6,
                     maxiter: int = 500, seed: int = 42) -> float:
    """Estimate ‖Θ[V₀]‖ on the discretized H_m (weighted ℓ²).

    Lanczos on the symmetrized normal operator W^{-1/2} Θᵀ W Θ W^{-1/2} (Θᵀ = -Θ on
    the grid); the Rayleigh quotient is a lower bound on the discrete norm.
    """
    if m < 0:
        raise ConfigError("m must be >= 0")
    if not spec.active:
        return 0.0
    W = hm_weight(grid, m)
    sw = np.sqrt(W)
    shape = grid.shape

    def normal(u):
        v = u.reshape(shape) / sw
        t = _theta_raw(v, spec, grid)
        return (-_theta_raw(W * t, spec, grid) / sw).ravel()

    op = spla.LinearOperator((grid.size, grid.size), matvec=normal, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(grid.size)
    try:
        val = spla.eigsh(op, k=1, which="LA", tol=tol, maxiter=maxiter, v0=v0,
                         return_eigenvectors=False)[0]
    except spla.ArpackNoConvergence as exc:
        raise DivergenceError(f"Γ_m estimate did not converge in {maxiter} iterations") from exc
    return math.sqrt(max(float(val), 0.0))


def _multi_indices(j: int, d: int):
    if d == 1:
        yield (j,)
        return
    for a in range(j + 1):
        for rest in _multi_indices(j - a, d - 1):
            yield (a,) + rest


def gamma_m_bound(spec: PotentialSpec, m: int) -> float:
    """Analytic bound on ‖Θ[V₀]‖_{B(H_m)} from the Leibniz expansion.

    With D_p = max_{|k|=p} ‖∂^k V₀‖_∞ and |∂_η^k δV₀| ≤ 2^{1-|k|} D_{|k|}:
      ‖|x|^{m-j} ξ^n Θw‖ ≤ S_n ‖w‖_m,  S_n = Σ_{k≤n} C(n,k) 2^{1-|k|} D_{|k|},
    where ‖w‖²_m = ∬|w|²(1 + |y|^{2m}). Expanding (|x|²+|ξ|²)^m and |ξ|^{2j} gives
      ∬|Θw|²(1+|y|^{2m}) ≤ (4D₀² + Σ_j C(m,j) Σ_{|n|=j} j!/n! S_n²) ‖w‖²_m,
    and |y|²/12 ≤ A ≤ |y|² converts both sides to H_m at the cost of 12^m.
    For m = 0 the L² estimate ‖Θw‖ ≤ 2D₀‖w‖ is used directly.
    """
    if m < 0:
        raise ConfigError("m must be >= 0")
    D = spec.deriv_sup(m)
    if m == 0:
        return 2.0 * float(D[0])
    d = spec.d
    total = 4.0 * D[0] ** 2
    for j in range(m + 1):
        inner = 0.0
        for n in _multi_indices(j, d):
            S = 0.0
            for k in product(*(range(ni + 1) for ni in n)):
                S += float(np.prod([comb(ni, ki, exact=True) for ni, ki in zip(n, k)])) * 2.0 ** (1 - sum(k)) * D[sum(k)]
            multinom = factorial(j, exact=True) // int(np.prod([factorial(ni, exact=True) for ni in n]))
            inner += multinom * S * S
        total += comb(m, j, exact=True) * inner
    return 12.0 ** (m / 2.0) * math.sqrt(total)
