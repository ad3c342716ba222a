"""Matrix-free generator L, its splittings, the ground-state transform and Q.

L w = -ξ·∇ₓw + x·∇_ξw + Δ_ξw + 2 div_ξ(ξw) + Δₓw = Δw + div((∇A + F) w).
All derivatives are spectral on the periodic box.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from . import fourier
from .errors import ConfigError, InvariantError
from .grid import GridSpec, WignerField, form_for, hm_weight, mu_values


def _D(f: np.ndarray, grid: GridSpec, axis: int, order: int = 1) -> np.ndarray:
    return fourier.deriv(f, axis, grid.spacing(axis), order)


def _lap(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    return sum(_D(f, grid, ax, 2) for ax in range(2 * grid.d))


def apply_L(w: WignerField) -> WignerField:
    grid = w.grid
    d = grid.d
    ys = grid.coords()
    f = w.values
    out = np.zeros(grid.shape)
    for i in range(d):
        x, p = ys[i], ys[d + i]
        out += -p * _D(f, grid, i) + x * _D(f, grid, d + i)
        out += _D(f, grid, d + i, 2) + 2.0 * _D(p * f, grid, d + i) + _D(f, grid, i, 2)
    return WignerField(grid, out)


def apply_Ls(w: WignerField) -> WignerField:
    """L^s w = div(∇w + w∇A)."""
    grid = w.grid
    f = w.values
    gA = form_for(grid.d).gradient(grid.coords())
    out = _lap(f, grid)
    for ax in range(2 * grid.d):
        out = out + _D(f * gA[ax], grid, ax)
    return WignerField(grid, out)


def apply_Las(w: WignerField) -> WignerField:
    """L^as w = div(F w)."""
    grid = w.grid
    f = w.values
    F = form_for(grid.d).rotation(grid.coords())
    out = np.zeros(grid.shape)
    for ax in range(2 * grid.d):
        out += _D(f * F[ax], grid, ax)
    return WignerField(grid, out)


@functools.lru_cache(maxsize=8)
def potential_U(grid: GridSpec) -> np.ndarray:
    """U = ½ΔA - ¼|∇A|² on the grid."""
    form = form_for(grid.d)
    g = form.gradient(grid.coords())
    U = 0.5 * form.laplacian - 0.25 * sum(np.broadcast_to(gi, grid.shape) ** 2 for gi in g)
    U = np.broadcast_to(U, grid.shape).copy()
    U.flags.writeable = False
    return U


def apply_H(v: WignerField) -> WignerField:
    """H v = Δv + F·∇v + U v, transport written as ½(F·∇v + div(Fv)) (equal since div F = 0)."""
    grid = v.grid
    f = v.values
    F = form_for(grid.d).rotation(grid.coords())
    out = _lap(f, grid) + potential_U(grid) * f
    for ax in range(2 * grid.d):
        out = out + 0.5 * (F[ax] * _D(f, grid, ax) + _D(F[ax] * f, grid, ax))
    return WignerField(grid, out)


SQRT_MU_FLOOR = 1e-150


def groundstate_transform(w: WignerField) -> WignerField:
    """v = w / √μ."""
    s = np.sqrt(mu_values(w.grid))
    tiny = s < SQRT_MU_FLOOR
    if np.any(tiny & (w.values != 0.0)):
        raise InvariantError("w/√μ underflows: field is nonzero where √μ < 1e-150")
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(tiny, 0.0, w.values / np.where(tiny, 1.0, s))
    return WignerField(w.grid, v)


def inverse_groundstate_transform(v: WignerField) -> WignerField:
    return WignerField(v.grid, v.values * np.sqrt(mu_values(v.grid)))


# --- cutoff χ and the ε-split -------------------------------------------------

RAMP_A = 0.1


@functools.lru_cache(maxsize=4)
def _ramp_spline(a: float = RAMP_A):
    """Smooth step s(u): 1 on u ≤ 0, 0 on u ≥ 1, s' = -φ/∫φ with φ = exp(-a/(u(1-u)))."""
    u = np.linspace(0.0, 1.0, 4097)
    with np.errstate(divide="ignore", over="ignore"):
        phi = np.where((u > 0) & (u < 1), np.exp(-a / (u * (1.0 - u))), 0.0)
    cum = cumulative_simpson(phi, x=u, initial=0.0)
    total = cum[-1]
    return CubicHermiteSpline(u, 1.0 - cum / total, -phi / total), total


def ramp(u) -> np.ndarray:
    spline, _ = _ramp_spline()
    return np.clip(spline(np.clip(u, 0.0, 1.0)), 0.0, 1.0)


def ramp_slope_max() -> float:
    _, total = _ramp_spline()
    return math.exp(-4.0 * RAMP_A) / total


def eps_max(m: int) -> float:
    """Largest admissible ε for given m: min{1/(12√m), 1/24}."""
    return min(1.0 / (12.0 * math.sqrt(m)), 1.0 / 24.0) if m > 0 else 1.0 / 24.0


@dataclass(frozen=True)
class CutoffSpec:
    """χ_ε(y) = χ(εy) with χ ≡ 1 on B₁, supp χ ⊂ B₂ and |∇χ| ≤ √2."""

    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError("epsilon must lie in (0, 1)")

    @staticmethod
    def chi(r) -> np.ndarray:
        """χ as a function of |y|."""
        return ramp(np.asarray(r, dtype=float) - 1.0)

    def values(self, grid: GridSpec) -> np.ndarray:
        r = np.sqrt(sum(np.broadcast_to(y, grid.shape) ** 2 for y in grid.coords()))
        return self.chi(self.epsilon * r)

    def check(self, m: int) -> None:
        if self.epsilon > eps_max(m) * (1.0 + 1e-12):
            raise ConfigError(f"epsilon = {self.epsilon:g} exceeds min(1/(12√m), 1/24) = {eps_max(m):g} for m = {m}")


def log_weight_gradient(grid: GridSpec, m: int) -> list:
    """ν_m ∇ν_m⁻¹ = m A^{m-1} ∇A / (1 + A^m), one array per axis."""
    form = form_for(grid.d)
    ys = grid.coords()
    if m == 0:
        return [np.zeros(grid.shape) for _ in ys]
    A = form.value(ys)
    fac = m * A ** (m - 1) / (1.0 + A**m)
    return [np.broadcast_to(fac * g, grid.shape) for g in form.gradient(ys)]


def apply_L1eps(w: WignerField, m: int, cut: CutoffSpec) -> WignerField:
    """L₁^ε w = (d·w - ν_m∇ν_m⁻¹·∇w) χ_ε."""
    cut.check(m)
    grid = w.grid
    f = w.values
    b = log_weight_gradient(grid, m)
    inner = grid.d * f
    for ax in range(2 * grid.d):
        inner = inner - b[ax] * _D(f, grid, ax)
    return WignerField(grid, inner * cut.values(grid))


def apply_L2eps(w: WignerField, m: int, cut: CutoffSpec) -> WignerField:
    """L₂^ε = L - L₁^ε."""
    return apply_L(w) - apply_L1eps(w, m, cut)


# --- generalized diffusion and the Lindblad condition -------------------------


@dataclass(frozen=True)
class DiffusionCoefficients:
    D_pp: float = 1.0
    D_pq: float = 0.0
    D_f: float = 1.0
    D_qq: float = 1.0


@dataclass(frozen=True)
class LindbladResult:
    passed: bool
    margin: float


def apply_Q(w: WignerField, coeffs: DiffusionCoefficients) -> WignerField:
    """D_pp Δ_ξw + 2D_pq div_x(∇_ξw) + 2D_f div_ξ(ξw) + D_qq Δ_xw."""
    grid = w.grid
    d = grid.d
    ys = grid.coords()
    f = w.values
    out = np.zeros(grid.shape)
    for i in range(d):
        p = ys[d + i]
        if coeffs.D_pp:
            out += coeffs.D_pp * _D(f, grid, d + i, 2)
        if coeffs.D_pq:
            out += 2.0 * coeffs.D_pq * _D(_D(f, grid, d + i), grid, i)
        if coeffs.D_f:
            out += 2.0 * coeffs.D_f * _D(p * f, grid, d + i)
        if coeffs.D_qq:
            out += coeffs.D_qq * _D(f, grid, i, 2)
    return WignerField(grid, out)


def lindblad_check(coeffs: DiffusionCoefficients) -> LindbladResult:
    """Pass iff D_pp ≥ 0 and D_pp D_qq - (D_pq² + D_f²/4) ≥ 0; margin is the latter."""
    margin = coeffs.D_pp * coeffs.D_qq - (coeffs.D_pq**2 + coeffs.D_f**2 / 4.0)
    return LindbladResult(passed=bool(coeffs.D_pp >= 0.0 and margin >= 0.0), margin=float(margin))


def zero_mass_projection(w: WignerField) -> WignerField:
    """w - (mass(w)/mass(μ))·μ, with both masses taken on the grid so the result has zero discrete mass."""
    grid = w.grid
    mu = mu_values(grid)
    return WignerField(grid, w.values - float(np.sum(w.values)) / float(np.sum(mu)) * mu)


def hm_weight_of(w: WignerField, m: int) -> np.ndarray:
    return hm_weight(w.grid, m)
