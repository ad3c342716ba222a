"""Perturbed steady state w_∞ = μ + w_* by fixed-point iteration L w_n = λΘ[V₀](w_{n-1} + μ).

Two realizations of L⁻¹ on zero-mass fields: the time integral -∫₀^∞ U_t g dt
(Simpson's rule over exact unperturbed steps) and preconditioned GMRES.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft
import scipy.sparse.linalg as spla

from . import fourier
from .errors import ConfigError, DivergenceError
from .grid import GridSpec, WignerField, l2_norm, mass, mu_field, mu_values, norm_Hm, zeros
from .operators import apply_L, zero_mass_projection
from .potential import PotentialSpec, apply_theta
from .propagator import step_unperturbed

BACKENDS = ("krylov", "semigroup")
MASS_TOL = 1e-6


def _check_zero_mass(g: WignerField) -> None:
    m = mass(g)
    if abs(m) > MASS_TOL * max(1.0, l2_norm(g)):
        raise ConfigError(f"L⁻¹ needs a zero-mass right-hand side (mass = {m:.3e})")


def solve_Linv_semigroup(g: WignerField, tol: float = 1e-13, h: float = 0.025, t_max: float = 40.0,
                         t_decay: float = 20.0) -> WignerField:
    """L⁻¹g = -∫₀^∞ U_t g dt by composite Simpson on steps of length h.

    Integration stops at t_max or once ‖U_t g‖ < tol·‖g‖; if the integrand has not
    shrunk below ‖g‖ by t_decay the flow is not decaying and DivergenceError is raised.
    """
    _check_zero_mass(g)
    g0 = l2_norm(g)
    if g0 == 0.0:
        return zeros(g.grid)
    nsteps = int(round(t_max / h))
    nsteps += nsteps % 2
    u = g
    acc = g.values.copy()
    for j in range(1, nsteps + 1):
        u = step_unperturbed(u, h)
        wgt = 1.0 if j == nsteps else (4.0 if j % 2 else 2.0)
        acc += wgt * u.values
        if j % 2 == 0:
            nu = l2_norm(u)
            if not math.isfinite(nu):
                raise DivergenceError("semigroup integrand became non-finite")
            if j * h >= t_decay and nu >= g0:
                raise DivergenceError(f"‖U_t g‖ has not decayed by t = {j * h:g}")
            if nu < tol * g0:
                acc -= (wgt - 1.0) * u.values
                break
    return zero_mass_projection(WignerField(g.grid, -h / 3.0 * acc))


class _KrylovOperator:
    """Right-preconditioned projected operator v ↦ P L P (Δ - 1)⁻¹ v."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        ksq = np.zeros(grid.shape)
        for ax in range(2 * grid.d):
            k = fourier.wavenumbers(grid.shape[ax], grid.spacing(ax))
            sh = [1] * (2 * grid.d)
            sh[ax] = k.size
            ksq = ksq + k.reshape(sh) ** 2
        self.inv_symbol = -1.0 / (ksq + 1.0)
        self.mu = mu_values(grid)
        self.mu_sum = float(np.sum(self.mu))
        self.nmv = 0

    def proj(self, v: np.ndarray) -> np.ndarray:
        return v - float(np.sum(v)) / self.mu_sum * self.mu.ravel().reshape(np.shape(v))

    def prec(self, v: np.ndarray) -> np.ndarray:
        vh = sfft.fftn(v.reshape(self.grid.shape), workers=fourier.workers())
        return sfft.ifftn(vh * self.inv_symbol, workers=fourier.workers()).real

    def matvec(self, v: np.ndarray) -> np.ndarray:
        self.nmv += 1
        x = self.proj(self.prec(v))
        return self.proj(apply_L(WignerField(self.grid, x)).values).ravel()


def solve_Linv_krylov(g: WignerField, tol: float = 1e-12, restart: int = 100, max_restarts: int = 50) -> WignerField:
    """GMRES on the zero-mass subspace; relative L² residual ≤ tol or DivergenceError."""
    _check_zero_mass(g)
    grid = g.grid
    gnorm = l2_norm(g)
    if gnorm == 0.0:
        return zeros(grid)
    op = _KrylovOperator(grid)
    n = grid.size
    A = spla.LinearOperator((n, n), matvec=op.matvec, dtype=float)
    rhs = op.proj(g.values).ravel()
    y, info = spla.gmres(A, rhs, rtol=tol, atol=0.0, restart=restart, maxiter=max_restarts)
    x = WignerField(grid, op.proj(op.prec(y)))
    res = l2_norm(apply_L(x) - g) / gnorm
    if info != 0 and res > 10.0 * tol:
        raise DivergenceError(f"GMRES stagnated after {max_restarts} restarts (relative residual {res:.2e})")
    return x


def solve_Linv(g: WignerField, backend: str = "krylov", tol: Optional[float] = None) -> WignerField:
    if backend == "krylov":
        return solve_Linv_krylov(g, tol=tol or 1e-12)
    if backend == "semigroup":
        return solve_Linv_semigroup(g, tol=tol or 1e-13)
    raise ConfigError(f"unknown L⁻¹ backend {backend!r}; expected one of {BACKENDS}")


def stationarity_residual(w: WignerField, spec: PotentialSpec, m: int = 4) -> float:
    """‖L w - λΘ[V₀] w‖_{H_m}."""
    r = apply_L(w)
    if spec.active and spec.lam != 0.0:
        r = r - apply_theta(w, spec) * spec.lam
    return norm_Hm(r, m)


@dataclass
class FixedPointReport:
    iterations: int
    increments: list
    residuals: list
    ratios: list
    w_inf: WignerField
    backend: str
    lam: float
    m: int
    theoretical_ratio: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else 0.0

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "backend": self.backend,
            "lambda": self.lam,
            "m": self.m,
            "increments": list(self.increments),
            "residuals": list(self.residuals),
            "ratios": list(self.ratios),
            "final_residual": self.final_residual,
            "mass": mass(self.w_inf),
            "theoretical_ratio": self.theoretical_ratio,
            **self.extra,
        }


def fixed_point_solve(spec: PotentialSpec, grid: GridSpec, m: int = 4, tol: float = 1e-10, max_iter: int = 50,
                      backend: str = "krylov", theoretical_ratio: Optional[float] = None) -> FixedPointReport:
    """Iterate w_n = L⁻¹(λΘ[V₀](w_{n-1} + μ)) from w₀ = 0 until ‖w_n - w_{n-1}‖_{H_m} ≤ tol."""
    if backend not in BACKENDS:
        raise ConfigError(f"unknown L⁻¹ backend {backend!r}; expected one of {BACKENDS}")
    mu = mu_field(grid)
    if not spec.active or spec.lam == 0.0:
        return FixedPointReport(0, [], [stationarity_residual(mu, spec, m)], [], mu, backend, spec.lam, m,
                                theoretical_ratio)
    ws = zeros(grid)
    incs, res, ratios = [], [], []
    bad = 0
    for it in range(1, max_iter + 1):
        rhs = zero_mass_projection(apply_theta(ws + mu, spec) * spec.lam)
        new = solve_Linv(rhs, backend)
        inc = norm_Hm(new - ws, m)
        ws = new
        incs.append(inc)
        res.append(stationarity_residual(mu + ws, spec, m))
        if len(incs) >= 2 and incs[-2] > 0:
            ratio = inc / incs[-2]
            ratios.append(ratio)
            bad = bad + 1 if ratio >= 1.0 else 0
            if bad >= 3:
                raise DivergenceError(
                    "fixed-point contraction ratio ≥ 1 for 3 consecutive iterations; |λ| is outside the "
                    "contraction regime |λ| < σ_m/Γ_m"
                )
        if not math.isfinite(inc):
            raise DivergenceError("fixed-point iterate became non-finite")
        if inc <= tol:
            break
    return FixedPointReport(len(incs), incs, res, ratios, mu + ws, backend, spec.lam, m, theoretical_ratio)
