"""Time stepping: exact unperturbed flow, Strang splitting with λΘ[V₀], diagnostics.

For λ = 0 the equation is an Ornstein-Uhlenbeck flow with drift matrix N = [[0, 1], [-1, -2]]
acting on each (x_i, ξ_i) pair, so

    U_t w = G_t * ( e^{2t} w(e^t P_t ·) ),  P_t = [[1-t, -t], [t, 1+t]],

where G_t is a Gaussian convolution, diagonal in Fourier variables (k, η). In those
variables the transport vector field is M = [[0, -1], [1, -2]] (the CFL guard acts on it)
and the damping exponent is |a|²I₀ + 2a·b I₁ + |b|²I₂ with a = (k, η), b = (k-η)(1, 1).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft
from scipy.linalg import expm

from . import fourier, kernels
from .errors import ConfigError, DivergenceError, InvariantError
from .grid import GridSpec, WignerField, h_distance_trunc, l2_norm, mass, mu_field, norm_Hm, shifted_mu
from .potential import PotentialSpec, apply_theta, exp_theta

INTERPOLATIONS = ("exact_shear", "trig_bicubic", "lagrange4")
THETA_SUBSTEPS = ("rk2", "exact_shift")
FOURIER_DRIFT = np.array([[0.0, -1.0], [1.0, -2.0]])
WINDOW_FRAC = 0.05


@dataclass
class PropagatorConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    record_every: int = 10
    theta_substep: str = "rk2"
    interpolation: str = "exact_shear"
    window_frac: float = WINDOW_FRAC
    m: int = 4

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ConfigError("t_end must be at least dt")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.theta_substep not in THETA_SUBSTEPS:
            raise ConfigError(f"theta_substep must be one of {THETA_SUBSTEPS}")
        if self.interpolation not in INTERPOLATIONS:
            raise ConfigError(f"interpolation must be one of {INTERPOLATIONS}")
        if not 0.0 <= self.window_frac < 0.5:
            raise ConfigError("window_frac must lie in [0, 0.5)")

    def validate_for(self, spec: PotentialSpec, grid: GridSpec) -> None:
        if self.theta_substep == "exact_shift" and spec.active:
            if spec.kind != "sinusoidal" or not spec.is_snapped(grid):
                raise ConfigError("exact_shift needs a sinusoidal potential snapped to the grid")
        if self.interpolation != "exact_shear" and grid.d != 1:
            raise ConfigError(f"interpolation {self.interpolation!r} is implemented for d = 1 only")


# --- exact unperturbed flow --------------------------------------------------


def damping_exponent(k, eta, t: float):
    """∫₀ᵗ q(e^{sM} z) ds for one (k, η) pair, in closed form."""
    em = math.exp(-2.0 * t)
    I0 = (1.0 - em) / 2.0
    I1 = (1.0 - em * (1.0 + 2.0 * t)) / 4.0
    I2 = 0.25 - em * (t * t / 2.0 + t / 2.0 + 0.25)
    b = k - eta
    return (k * k + eta * eta) * I0 + 2.0 * b * (k + eta) * I1 + 2.0 * b * b * I2


@functools.lru_cache(maxsize=64)
def check_cfl(grid: GridSpec, dt: float) -> None:
    """Reject dt if e^{dt·M} moves a Fourier-box corner by half the box or more along some axis."""
    E = expm(dt * FOURIER_DRIFT)
    kmax = math.pi / grid.dx
    emax = math.pi / grid.dxi
    for sk in (-1.0, 1.0):
        for se in (-1.0, 1.0):
            z = np.array([sk * kmax, se * emax])
            disp = np.abs(E @ z - z)
            if disp[0] >= 0.5 * kmax or disp[1] >= 0.5 * emax:
                raise ConfigError(
                    f"dt = {dt:g} violates the characteristic CFL guard on this grid "
                    f"(corner displacement {disp[0]:.3g}, {disp[1]:.3g} vs limits {0.5 * kmax:.3g}, {0.5 * emax:.3g})"
                )


def _ramp(u):
    u = np.clip(u, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * u))


@functools.lru_cache(maxsize=16)
def absorbing_window(grid: GridSpec, frac: float) -> np.ndarray:
    """1 inside, cosine taper to 0 over the outer ``frac`` of every axis."""
    win = np.ones(grid.shape)
    if frac > 0:
        for ax, y in enumerate(grid.coords()):
            half = grid.half_width(ax)
            win = win * _ramp((np.abs(y) - (1.0 - frac) * half) / (frac * half))
    win.flags.writeable = False
    return win


@functools.lru_cache(maxsize=16)
def _damping(grid: GridSpec, t: float) -> np.ndarray:
    """Gaussian multiplier on the rfftn layout (last axis halved)."""
    d = grid.d
    nd = 2 * d
    G = np.ones(1)
    for i in range(d):
        k = fourier.wavenumbers(grid.n_x, grid.dx)
        last = d + i == nd - 1
        e = fourier.rwavenumbers(grid.n_xi, grid.dxi) if last else fourier.wavenumbers(grid.n_xi, grid.dxi)
        shk = [1] * nd
        shk[i] = k.size
        she = [1] * nd
        she[d + i] = e.size
        G = G * np.exp(-damping_exponent(k.reshape(shk), e.reshape(she), t))
    G.flags.writeable = False
    return G


def _pair_pullback_shear(f: np.ndarray, grid: GridSpec, i: int, t: float) -> np.ndarray:
    """f ↦ f(e^t P_t y) on the pair (x_i, ξ_i) through two shears and two dilations.

    e^t P_t = [[1, 0], [l, 1]] · diag(d₁, d₂) · [[1, u], [0, 1]] (LDU) with l = -u = t/(1-t).
    """
    d = grid.d
    ys = grid.coords()
    x, p = ys[i], ys[d + i]
    l = t / (1.0 - t)
    u = -l
    d1 = math.exp(t) * (1.0 - t)
    d2 = math.exp(t) / (1.0 - t)
    g = fourier.shift_along(f, d + i, grid.dxi, l * x)
    g = fourier.apply_along(fourier.resample_matrix(grid.n_x, grid.x_max, d1), g, i)
    g = fourier.apply_along(fourier.resample_matrix(grid.n_xi, grid.xi_max, d2), g, d + i)
    return fourier.shift_along(g, i, grid.dx, u * p)


def _oversample4(f: np.ndarray) -> np.ndarray:
    for ax in range(f.ndim):
        f = fourier.upsample2(fourier.upsample2(f, ax), ax)
    return f


def _pullback_interp(f: np.ndarray, grid: GridSpec, t: float, kind: str) -> np.ndarray:
    """Same pullback by direct evaluation at the feet on a 4× trigonometrically refined grid."""
    x, p = grid.coords()
    s = math.exp(t)
    fx = s * ((1.0 - t) * x - t * p)
    fp = s * (t * x + (1.0 + t) * p)
    fine = _oversample4(f)
    px = (fx + grid.x_max) / (grid.dx / 4.0)
    py = (fp + grid.xi_max) / (grid.dxi / 4.0)
    px, py = np.broadcast_arrays(px, py)
    vals = kernels.interp2_batch(
        np.ascontiguousarray(fine[:, :, None]), px.ravel().copy(), py.ravel().copy(), kernels.INTERP_KINDS[kind]
    )
    return np.asarray(vals)[:, 0].reshape(grid.shape)


def step_unperturbed(w: WignerField, dt: float, interpolation: str = "exact_shear",
                     window_frac: float = WINDOW_FRAC) -> WignerField:
    """Exact λ = 0 flow over dt, followed by the absorbing edge window."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    grid = w.grid
    check_cfl(grid, dt)
    f = w.values
    if interpolation == "exact_shear":
        for i in range(grid.d):
            f = _pair_pullback_shear(f, grid, i, dt)
    elif interpolation in ("trig_bicubic", "lagrange4"):
        if grid.d != 1:
            raise ConfigError(f"interpolation {interpolation!r} is implemented for d = 1 only")
        kind = "cubic" if interpolation == "trig_bicubic" else "lagrange4"
        f = _pullback_interp(f, grid, dt, kind)
    else:
        raise ConfigError(f"unknown interpolation {interpolation!r}")
    f = f * math.exp(2.0 * grid.d * dt)
    fh = sfft.rfftn(f, workers=fourier.workers())
    f = sfft.irfftn(fh * _damping(grid, dt), s=grid.shape, workers=fourier.workers())
    if window_frac > 0:
        f = f * absorbing_window(grid, window_frac)
    return WignerField(grid, f)


# --- perturbation substep and Strang splitting -------------------------------


def theta_half_step(w: WignerField, spec: PotentialSpec, tau: float, method: str = "rk2") -> WignerField:
    """Advance ∂_t w = -λΘ[V₀]w over tau."""
    if not spec.active or spec.lam == 0.0:
        return w
    if method == "exact_shift":
        return exp_theta(w, spec, tau)
    lam = spec.lam
    mid = w - apply_theta(w, spec) * (0.5 * tau * lam)
    return w - apply_theta(mid, spec) * (tau * lam)


def step_full(w: WignerField, dt: float, spec: PotentialSpec, interpolation: str = "exact_shear",
              theta_substep: str = "rk2", window_frac: float = WINDOW_FRAC) -> WignerField:
    """Strang step: half Θ, full unperturbed flow, half Θ."""
    if not spec.active or spec.lam == 0.0:
        return step_unperturbed(w, dt, interpolation, window_frac)
    w = theta_half_step(w, spec, 0.5 * dt, theta_substep)
    w = step_unperturbed(w, dt, interpolation, window_frac)
    return theta_half_step(w, spec, 0.5 * dt, theta_substep)


# --- evolution and diagnostics -----------------------------------------------


@dataclass
class RunReport:
    times: np.ndarray
    mass: np.ndarray
    l2_norm: np.ndarray
    hm_distance: np.ndarray
    h_distance_trunc: np.ndarray
    m: int = 4
    fit: Optional[dict] = None
    config: dict = field(default_factory=dict)
    final: Optional[WignerField] = field(default=None, repr=False)

    COLUMNS = ("t", "mass", "l2_norm", "hm_distance", "h_distance_trunc")

    def __post_init__(self):
        n = len(self.times)
        if any(len(getattr(self, c)) != n for c in ("mass", "l2_norm", "hm_distance", "h_distance_trunc")):
            raise InvariantError("RunReport series lengths differ")

    def rows(self) -> np.ndarray:
        return np.column_stack([self.times, self.mass, self.l2_norm, self.hm_distance, self.h_distance_trunc])

    def mass_drift(self) -> float:
        return float(np.max(np.abs(self.mass - self.mass[0]))) if len(self.mass) else 0.0


def evolve(w0: WignerField, config: PropagatorConfig, spec: Optional[PotentialSpec] = None,
           reference: Optional[WignerField] = None, check_mass: bool = True) -> RunReport:
    """Integrate to t_end, recording diagnostics every ``record_every`` steps."""
    grid = w0.grid
    spec = spec or PotentialSpec()
    config.validate_for(spec, grid)
    m0 = mass(w0)
    if check_mass and abs(m0 - 1.0) > 1e-6:
        raise ConfigError(f"initial mass must be 1 ± 1e-6 (got {m0:.10f})")
    ref = reference if reference is not None else mu_field(grid)
    nsteps = int(round(config.t_end / config.dt))
    check_cfl(grid, config.dt)

    rec = {c: [] for c in RunReport.COLUMNS}

    def record(t, w):
        diff = w - ref
        rec["t"].append(t)
        rec["mass"].append(mass(w))
        rec["l2_norm"].append(l2_norm(w))
        rec["hm_distance"].append(norm_Hm(diff, config.m))
        rec["h_distance_trunc"].append(h_distance_trunc(w, ref))

    w = w0
    record(0.0, w)
    for s in range(1, nsteps + 1):
        w = step_full(w, config.dt, spec, config.interpolation, config.theta_substep, config.window_frac)
        if s % config.record_every == 0 or s == nsteps:
            if not np.all(np.isfinite(w.values)):
                raise DivergenceError(f"non-finite field at step {s} (t = {s * config.dt:g})")
            peak = float(np.max(np.abs(w.values)))
            if peak > 1e6 * max(float(np.max(np.abs(w0.values))), 1e-300):
                raise DivergenceError(f"field blew up at t = {s * config.dt:g} (max |w| = {peak:.3e})")
            record(s * config.dt, w)
    report = RunReport(
        times=np.asarray(rec["t"]), mass=np.asarray(rec["mass"]), l2_norm=np.asarray(rec["l2_norm"]),
        hm_distance=np.asarray(rec["hm_distance"]), h_distance_trunc=np.asarray(rec["h_distance_trunc"]),
        m=config.m,
    )
    report.final = w
    return report


def fit_decay_rate(report: RunReport, window=(2.0, 8.0), column: str = "h_distance_trunc") -> dict:
    """Least-squares slope of log(distance) against t over the window; rate = -slope."""
    t = np.asarray(report.times)
    y = np.asarray(getattr(report, column))
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if sel.sum() < 2:
        raise ConfigError("fit window holds fewer than two records")
    if np.any(y[sel] <= 0):
        raise ConfigError("distances must be positive inside the fit window")
    ly = np.log(y[sel])
    slope, icpt = np.polyfit(t[sel], ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * t[sel] + icpt)) ** 2)))
    fit = {"rate": float(-slope), "window": [float(window[0]), float(window[1])], "residual": resid, "column": column}
    report.fit = fit
    return fit


def displaced_gaussian(grid: GridSpec, amount: float = 1.0, direction=(1.0, -1.0)) -> WignerField:
    """μ translated along ``direction`` (per (x_i, ξ_i) pair), normalized to unit length times ``amount``."""
    dvec = np.asarray(direction, dtype=float)
    dvec = amount * dvec / np.linalg.norm(dvec)
    shift = np.concatenate([np.full(grid.d, dvec[0]), np.full(grid.d, dvec[1])])
    w = shifted_mu(grid, shift)
    return w / mass(w)
