"""Acceptance checks, one function per criterion, sharing expensive solves through a context."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import constants as C
from . import density as dm
from .fourier import deriv
from .grid import GridSpec, WignerField, form_for, l2_norm, mass, mu_field, norm_Hm, hm_weight
from .operators import DiffusionCoefficients, apply_L, apply_Las, lindblad_check
from .potential import PotentialSpec, apply_theta, apply_theta_quadrature
from .propagator import PropagatorConfig, displaced_gaussian, evolve, fit_decay_rate
from .spectral import assemble_generator, coarse_grid, eigs_rightmost, verify_gap
from .steady import fixed_point_solve

SIGMA = 1.0 - 1.0 / math.sqrt(2.0)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        brief = ", ".join(f"{k}={_short(v)}" for k, v in self.details.items() if not isinstance(v, (list, dict)))
        return f"[{tag}] criterion {self.number:2d} {self.name} ({self.seconds:.1f}s): {brief}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


class Context:
    """Default grid plus memoized fixed points keyed by (λ, backend)."""

    def __init__(self, grid: Optional[GridSpec] = None, m: int = 4):
        self.grid = grid or GridSpec()
        self.m = m
        self._fp = {}

    def spec(self, lam: float) -> PotentialSpec:
        return PotentialSpec(lam=lam, kind="sinusoidal", k0=(1.0,)).snapped(self.grid)

    def fixed_point(self, lam: float, backend: str = "krylov"):
        key = (lam, backend)
        if key not in self._fp:
            self._fp[key] = fixed_point_solve(self.spec(lam), self.grid, m=self.m, tol=1e-10, backend=backend)
        return self._fp[key]


def _timed(number: int, name: str, fn: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    passed, details = fn()
    return CriterionResult(number, name, bool(passed), details, time.perf_counter() - t0)


# --- 1 ---------------------------------------------------------------------


def criterion_constants(ctx: Context) -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        sigma = form_for(1).sigma
        alpha = C.alpha_d(sigma, 1)
        beta = C.beta_m(4, 1)
        eps = C.eps_max(4)
        K = float(C.K_CONST)
        t_arith = time.perf_counter() - t0
        t1 = time.perf_counter()
        tc = C.compute_constants(m=4, d=1)
        t_total = time.perf_counter() - t1
        s_ref = 1.0 - 1.0 / math.sqrt(2.0)
        ok = (
            abs(tc.sigma - s_ref) < 1e-12 and abs(sigma - s_ref) < 1e-12
            and abs(tc.alpha - s_ref / (s_ref + 3.0)) < 1e-12 and abs(alpha - tc.alpha) < 1e-15
            and tc.beta_m == 442 and beta == 442 and tc.eps_m == 1.0 / 24.0 and eps == 1.0 / 24.0
            and tc.K == 144 and K == 144 and t_arith < 1.0 and t_total < 10.0
        )
        return ok, {"sigma": tc.sigma, "alpha": tc.alpha, "beta_4": tc.beta_m, "eps": tc.eps_m, "K": tc.K,
                    "arith_s": t_arith, "total_s": t_total}

    return _timed(1, "constant reproduction", run)


# --- 2 ---------------------------------------------------------------------

REFINED_GRID = GridSpec(n_x=256, n_xi=256, x_max=16.0, xi_max=10.0)


def l_mu_residual(grid: GridSpec) -> float:
    mu = mu_field(grid)
    return l2_norm(apply_L(mu)) / l2_norm(mu)


def criterion_kernel(ctx: Context) -> CriterionResult:
    def run():
        r128 = l_mu_residual(ctx.grid)
        r256 = l_mu_residual(REFINED_GRID)
        same_box = l_mu_residual(ctx.grid.with_(n_x=256, n_xi=256))
        return r128 <= 1e-6 and r256 <= 0.5 * r128, {
            "residual_128": r128, "residual_256_refined": r256, "residual_256_same_box": same_box}

    return _timed(2, "steady-state kernel L(mu) = 0", run)


# --- 3 ---------------------------------------------------------------------


def criterion_decay(ctx: Context, dt: float = 1e-3) -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        w0 = displaced_gaussian(ctx.grid, 1.0)
        rep = evolve(w0, PropagatorConfig(dt=dt, t_end=10.0, record_every=10, m=ctx.m))
        fit = fit_decay_rate(rep, (2.0, 8.0))
        secs = time.perf_counter() - t0
        rate = fit["rate"]
        return rate >= SIGMA and abs(rate - 1.0) <= 0.05 and secs < 120.0, {
            "rate": rate, "fit_residual": fit["residual"], "mass_drift": rep.mass_drift(), "run_s": secs}

    return _timed(3, "unperturbed decay rate", run)


# --- 4 ---------------------------------------------------------------------


def criterion_gap(ctx: Context, n: int = 48) -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        grid = coarse_grid(n)
        ev = eigs_rightmost(assemble_generator(grid), 10)
        rep = verify_gap(ev, SIGMA)
        secs = time.perf_counter() - t0
        return rep.passed and secs < 300.0, {
            "n_kernel": rep.n_kernel, "kernel_re": float(np.real(rep.kernel_eig)), "second_re": rep.second_re,
            "run_s": secs}

    return _timed(4, "spectral gap", run)


# --- 5 ---------------------------------------------------------------------


def random_smooth_field(grid: GridSpec, seed: int) -> WignerField:
    """Random band-limited coefficients times a Gaussian envelope."""
    rng = np.random.default_rng(seed)
    x, p = grid.coords()
    env = np.exp(-(x**2) / 8.0 - p**2 / 4.0)
    val = np.zeros(grid.shape)
    for _ in range(6):
        a, b, c, ph = rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.standard_normal(), rng.uniform(0, 2 * np.pi)
        val = val + c * np.cos(a * x + b * p + ph)
    return WignerField(grid, val * env)


def criterion_theta(ctx: Context) -> CriterionResult:
    def run():
        g = GridSpec(n_x=64, n_xi=64)
        specs = {
            "sinusoidal": PotentialSpec(lam=1.0, kind="sinusoidal", k0=(1.0,)).snapped(g),
            "gaussian_bump": PotentialSpec(lam=1.0, kind="gaussian_bump", center=(0.5,), width=1.3),
        }
        worst = 0.0
        for spec in specs.values():
            for seed in (0, 1, 2):
                w = random_smooth_field(g, seed)
                a = apply_theta(w, spec)
                b = apply_theta_quadrature(w, spec)
                worst = max(worst, l2_norm(a - b) / l2_norm(b))
        quad = PotentialSpec(lam=1.0, kind="custom", func=lambda xs: 0.5 * xs[0] ** 2)
        wq = random_smooth_field(g, 7)
        ref = WignerField(g, -g.x[:, None] * deriv(wq.values, 1, g.dxi))
        qerr = l2_norm(apply_theta(wq, quad) - ref) / l2_norm(ref)
        return worst <= 1e-8 and qerr <= 1e-8, {"fft_vs_quadrature": worst, "quadratic_vs_force": qerr}

    return _timed(5, "Theta oracle equivalence", run)


# --- 6 ---------------------------------------------------------------------


def criterion_fixed_point(ctx: Context) -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        rk = ctx.fixed_point(0.01, "krylov")
        rs = ctx.fixed_point(0.01, "semigroup")
        secs = time.perf_counter() - t0
        cross = norm_Hm(rk.w_inf - rs.w_inf, ctx.m) / norm_Hm(rk.w_inf, ctx.m)
        ok = True
        det = {}
        for name, r in (("krylov", rk), ("semigroup", rs)):
            res = np.asarray(r.residuals)
            mono = bool(np.all(np.diff(res) <= 1e-12 * res[0]))
            ok &= mono and res[-1] <= 1e-5 and abs(mass(r.w_inf) - 1.0) <= 1e-6 and max(r.ratios) < 1.0
            det[f"{name}_residual"] = float(res[-1])
            det[f"{name}_max_ratio"] = float(max(r.ratios))
            det[f"{name}_monotone"] = mono
        det["mass"] = mass(rk.w_inf)
        det["cross_backend"] = cross
        det["run_s"] = secs
        return ok and cross <= 1e-4 and secs < 600.0, det

    return _timed(6, "fixed point (lambda=0.01)", run)


# --- 7 ---------------------------------------------------------------------


def criterion_transient(ctx: Context, dt: float = 0.01, t_end: float = 15.0) -> CriterionResult:
    def run():
        fp = ctx.fixed_point(0.01, "krylov")
        cfg = PropagatorConfig(dt=dt, t_end=t_end, record_every=int(round(1.0 / dt)), m=ctx.m)
        rep = evolve(mu_field(ctx.grid), cfg, ctx.spec(0.01), reference=fp.w_inf)
        dist = float(rep.hm_distance[-1])
        return dist <= 1e-3, {"hm_distance_t15": dist, "hm_distance_t0": float(rep.hm_distance[0]),
                              "mass_drift": rep.mass_drift()}

    return _timed(7, "transient to stationary", run)


# --- 8 ---------------------------------------------------------------------


def criterion_lambda_continuity(ctx: Context) -> CriterionResult:
    def run():
        mu = mu_field(ctx.grid)
        q = {}
        for lam in (0.005, 0.01):
            q[lam] = norm_Hm(ctx.fixed_point(lam, "krylov").w_inf - mu, ctx.m) / lam
        rel = abs(q[0.005] - q[0.01]) / q[0.01]
        return rel <= 0.05, {"ratio_0.005": q[0.005], "ratio_0.01": q[0.01], "rel_diff": rel}

    return _timed(8, "lambda continuity", run)


# --- 9 ---------------------------------------------------------------------


def criterion_quantum(ctx: Context) -> CriterionResult:
    def run():
        w = ctx.fixed_point(0.01, "krylov").w_inf
        rho = dm.wigner_to_rho(w)
        tr = dm.trace_of(rho)
        herm = dm.hermiticity_error(rho)
        mn, neg = dm.positivity_spectrum(rho)
        t2 = dm.t2_relation_error(rho, w)
        ok = abs(tr - 1.0) <= 1e-3 and herm <= 1e-10 and mn >= -1e-4 and t2 <= 1e-4
        return ok, {"trace": tr, "hermiticity": herm, "min_eig": mn, "negative_mass": neg, "t2_rel_err": t2}

    return _timed(9, "quantum consistency", run)


# --- 10 --------------------------------------------------------------------


def poly_fields(grid: GridSpec, n: int = 10, seed: int = 42, zero_mass: bool = False) -> list:
    """Fields μ·p with random polynomials p of degree ≤ 3; returns (w, p) pairs."""
    rng = np.random.default_rng(seed)
    x, xi = grid.coords()
    out = []
    for _ in range(n):
        c = rng.standard_normal((4, 4))
        ii, jj = np.indices(c.shape)
        c[ii + jj > 3] = 0.0
        p = np.polynomial.polynomial.polyval2d(np.broadcast_to(x, grid.shape), np.broadcast_to(xi, grid.shape), c)
        if zero_mass:
            p = p - float(np.sum(p * mu_field(grid).values)) * grid.cell
        out.append((WignerField(grid, mu_field(grid).values * p), p))
    return out


def inequality_suite(ctx: Context) -> dict:
    """Technical lemma, Poincaré, H_m antisymmetry, H dissipativity/coercivity, Lindblad margins."""
    grid = ctx.grid
    res = {}
    tl = C.check_techlemma(d=1)
    for k, chk in tl.items():
        res[f"techlemma_{k}"] = (chk.passed, chk.worst_margin)
    pc = C.check_poincare()
    res["poincare"] = (pc["passed"], pc["min_ratio"])

    worst = 0.0
    for m in (0, 2, 4):
        for s in range(5):
            w = random_smooth_field(grid, 100 + s)
            la = apply_Las(w)
            val = float(np.sum(la.values * w.values * hm_weight(grid, m))) * grid.cell
            worst = max(worst, abs(val) / (norm_Hm(la, m) * norm_Hm(w, m)))
    res["antisymmetry_Hm"] = (worst <= 1e-8, worst)

    # ⟨Lw, w⟩_H = ∬ L(μp)·p for w = μp, with p exact, so no exponential weight is formed
    diss, coer = -np.inf, np.inf
    for w, p in poly_fields(grid, 10, seed=1):
        hw2 = float(np.sum(w.values * p)) * grid.cell
        diss = max(diss, float(np.sum(apply_L(w).values * p)) * grid.cell / hw2)
    for w, p in poly_fields(grid, 10, seed=2, zero_mass=True):
        hw2 = float(np.sum(w.values * p)) * grid.cell
        coer = min(coer, -float(np.sum(apply_L(w).values * p)) * grid.cell / hw2)
    res["dissipativity_H"] = (diss <= 1e-8, diss)
    res["coercivity_H"] = (coer >= SIGMA - 1e-8, coer)

    l1 = lindblad_check(DiffusionCoefficients(1, 0, 1, 1))
    l2 = lindblad_check(DiffusionCoefficients(1, 0, 1, 0))
    res["lindblad_quantum"] = (l1.passed and abs(l1.margin - 0.75) < 1e-15, l1.margin)
    res["lindblad_classical_rejected"] = ((not l2.passed) and abs(l2.margin + 0.25) < 1e-15, l2.margin)
    return res


def criterion_inequalities(ctx: Context) -> CriterionResult:
    def run():
        res = inequality_suite(ctx)
        return all(v[0] for v in res.values()), {k: v[1] for k, v in res.items()}

    return _timed(10, "inequality suite", run)


CRITERIA = (
    criterion_constants, criterion_kernel, criterion_decay, criterion_gap, criterion_theta,
    criterion_fixed_point, criterion_transient, criterion_lambda_continuity, criterion_quantum,
    criterion_inequalities,
)


def run_all(ctx: Optional[Context] = None, echo: Optional[Callable[[str], None]] = None) -> list:
    ctx = ctx or Context()
    out = []
    for fn in CRITERIA:
        r = fn(ctx)
        out.append(r)
        if echo:
            echo(r.line())
    return out
