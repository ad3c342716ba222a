"""Explicit constants of the convergence theory and sampled checks of the inequalities behind them.

Quantities that overflow double precision (δ_m ~ e^{β_m}) are carried as natural logs;
the float fields then hold inf/0 and the ``log_*`` fields hold the values.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import hermite_e
from numpy.polynomial import polynomial as P
from scipy import integrate
from scipy.special import gammaln

from .errors import ConfigError
from .grid import GridSpec, form_for
from .operators import CutoffSpec, eps_max
from .potential import PotentialSpec, gamma_m_bound, gamma_m_estimate

A1 = Fraction(1, 36)
A2 = Fraction(36)
K_CONST = 4 / A1
SMALL_BALL_R2 = 1.0 / 12.0  # radius² of the ball in the Λ_m bound


def _exp_or_inf(v: float) -> float:
    return math.exp(v) if v < 709.0 else math.inf


def beta_m(m: int, d: int, a2: float = float(A2)) -> float:
    """Growth bound exponent of the semigroup on H_m: 2d + m((m-1)a₂ + 2d)."""
    return 2 * d + m * ((m - 1) * a2 + 2 * d)


def alpha_d(sigma: float, d: int) -> float:
    return sigma / (sigma + 2 * d + 1)


def c_am_squared_closed(m: int, d: int) -> float:
    """∬(1 + A^m)⁻¹ from the ellipsoid volume: π^d/(Γ(d)√det Q) · (π/m)/sin(dπ/m)."""
    if m <= d:
        raise ConfigError(f"∬(1+A^m)⁻¹ diverges unless m > d (got m = {m}, d = {d})")
    detQ = float(np.linalg.det(form_for(d).matrix))
    return math.pi**d / (math.gamma(d) * math.sqrt(detQ)) * (math.pi / m) / math.sin(d * math.pi / m)


def c_am_squared_quadrature(m: int, d: int = 1) -> float:
    """∬(1 + A^m)⁻¹ by numerical quadrature.

    d = 1: polar coordinates in the (x, ξ) plane, angle and radius both by adaptive quadrature.
    d > 1: radial quadrature of the level-set volume derivative.
    """
    if m <= d:
        raise ConfigError(f"∬(1+A^m)⁻¹ diverges unless m > d (got m = {m}, d = {d})")
    pair = np.asarray(form_for(1).pair)
    if d == 1:
        def radial(th):
            q = pair[0, 0] * math.cos(th) ** 2 + 2 * pair[0, 1] * math.cos(th) * math.sin(th) + pair[1, 1] * math.sin(th) ** 2
            # ∫₀^∞ r dr / (1 + (q r²)^m), split at the knee r² = 1/q
            knee = 1.0 / math.sqrt(q)
            f = lambda r: r / (1.0 + (q * r * r) ** m)
            a = integrate.quad(f, 0.0, knee, epsabs=0, epsrel=1e-13, limit=200)[0]
            b = integrate.quad(f, knee, np.inf, epsabs=0, epsrel=1e-13, limit=200)[0]
            return a + b

        return integrate.quad(radial, 0.0, 2.0 * math.pi, epsabs=0, epsrel=1e-12, limit=200)[0]
    detQ = float(np.linalg.det(form_for(d).matrix))
    dvol = lambda s: math.pi**d * s ** (d - 1) / (math.gamma(d) * math.sqrt(detQ))
    f = lambda s: dvol(s) / (1.0 + s**m)
    return integrate.quad(f, 0, 1, epsrel=1e-13)[0] + integrate.quad(f, 1, np.inf, epsrel=1e-13)[0]


def max_A_on_ball(r2: float, d: int) -> float:
    return float(np.linalg.eigvalsh(form_for(d).matrix)[-1]) * r2


def sobolev_branch(d: int, m: int, c_am2: Optional[float]) -> tuple:
    """The applicable Sobolev term of Λ_m and a description of the constant used."""
    w_sup = 1.0 + max_A_on_ball(SMALL_BALL_R2, d) ** m
    if d == 1:
        # sharp L¹-gradient (isoperimetric) embedding in ℝ²: ‖u‖_{L²} ≤ ‖∇u‖_{L¹}/(2√π)
        ct1_sq = 4.0 * math.pi
        return ct1_sq / (2.0 * c_am2 * w_sup), "d=1: C~1 = 2*sqrt(pi) (isoperimetric, R^2)", w_sup
    n = 2 * d
    # sharp Aubin-Talenti constant in ℝⁿ, then Hölder on the small ball
    S = 1.0 / math.sqrt(math.pi * n * (n - 2)) * math.exp((gammaln(n) - gammaln(n / 2)) / n)
    r = math.sqrt(SMALL_BALL_R2)
    vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r**n
    q = 2 * n / (n - 2)
    c1_sq = 1.0 / (S**2 * vol ** (1.0 - 2.0 / q))
    return c1_sq / (2.0 * w_sup), f"d={d}: Aubin-Talenti S={S:.6g} with Hoelder on B_(1/sqrt12)", w_sup


def log_l1_bound(m: int, d: int, eps: float, n_r: int = 4001, n_th: int = 721) -> float:
    """log of sup_{|y| ≤ 2/ε} (d² + |ν_m∇ν_m⁻¹|²) χ_ε² e^A / (c(1 + A^m)).

    This bounds ‖L₁^ε‖²_{H¹_m → H}. Because Q = pair ⊗ I_d, A and |∇A|² on a sphere
    depend only on how |y|² splits between the two eigenspaces of ``pair``.
    """
    form = form_for(1)
    lam, _ = np.linalg.eigh(np.asarray(form.pair, dtype=float))
    r = np.linspace(0.0, 2.0 / eps, n_r)[1:-1, None]
    th = np.linspace(0.0, 0.5 * math.pi, n_th)[None, :]
    c2, s2 = np.cos(th) ** 2, np.sin(th) ** 2
    A = r * r * (lam[0] * c2 + lam[1] * s2)
    g2 = 4.0 * r * r * (lam[0] ** 2 * c2 + lam[1] ** 2 * s2)
    with np.errstate(divide="ignore"):
        logA = np.log(A)
        log1pAm = np.logaddexp(0.0, m * logA)
        # |ν∇ν⁻¹|² = m² A^{2m-2}|∇A|²/(1+A^m)²
        logb2 = 2 * math.log(m) + (2 * m - 2) * logA + np.log(g2) - 2 * log1pAm
        chi = CutoffSpec.chi(eps * r)
        logchi2 = 2.0 * np.log(np.broadcast_to(chi, A.shape))
    logc = math.log(form_for(d).c)
    val = np.logaddexp(2 * math.log(d), logb2) + logchi2 + A - logc - log1pAm
    return 0.5 * float(np.max(val))


def l1_discrete_estimate(m: int, n: int = 64, x_max: float = 12.0, xi_max: float = 8.0, a_cut: float = 20.0,
                         tol: float = 1e-6) -> float:
    """Generalized-Lanczos estimate of ‖L₁^ε‖_{H¹_m→H} on a coarse grid with the H-weight cut at A ≤ a_cut.

    χ_ε ≡ 1 on this box for admissible ε, so L₁^ε = d - ν_m∇ν_m⁻¹·∇ there. Lower bound only.
    """
    import scipy.sparse.linalg as spla

    from .fourier import deriv
    from .grid import A_values

    grid = GridSpec(n_x=n, n_xi=n, x_max=x_max, xi_max=xi_max, check_tail=False)
    A = A_values(grid)
    gx, gp = (np.broadcast_to(g, grid.shape) for g in form_for(1).gradient(grid.coords()))
    Wm = 1.0 + A**m
    Wh = np.where(A <= a_cut, np.exp(np.minimum(A, a_cut)) / form_for(1).c, 0.0)
    fac = m * A ** (m - 1) / Wm
    bx, bp = fac * gx, fac * gp
    dX = lambda f: deriv(f, 0, grid.dx)
    dP = lambda f: deriv(f, 1, grid.dxi)
    L1 = lambda w: w - (bx * dX(w) + bp * dP(w))
    L1T = lambda u: u + dX(bx * u) + dP(bp * u)
    sh, N = grid.shape, grid.size
    Aop = spla.LinearOperator((N, N), matvec=lambda v: L1T(Wh * L1(v.reshape(sh))).ravel(), dtype=float)
    Gmv = lambda v: (Wm * v.reshape(sh) - dX(Wm * dX(v.reshape(sh))) - dP(Wm * dP(v.reshape(sh)))).ravel()
    Gop = spla.LinearOperator((N, N), matvec=Gmv, dtype=float)
    prec = spla.LinearOperator((N, N), matvec=lambda r: r / (5.0 * Wm.ravel()), dtype=float)

    def ginv(v):
        y, info = spla.cg(Gop, v, rtol=1e-10, maxiter=2000, M=prec)
        return y

    Minv = spla.LinearOperator((N, N), matvec=ginv, dtype=float)
    v0 = np.random.default_rng(42).standard_normal(N)
    val = spla.eigsh(Aop, k=1, M=Gop, Minv=Minv, which="LA", tol=tol, v0=v0, return_eigenvectors=False)[0]
    return math.sqrt(max(float(val), 0.0))


@dataclass
class TheoryConstants:
    d: int
    m: int
    sigma: float
    alpha: float
    a1: float
    a2: float
    K: float
    beta_m: float
    eps_m: float
    C_Am: Optional[float]
    C_Am_closed: Optional[float]
    Lambda_m: float
    sobolev_branch: str
    gamma_m: float
    gamma_tilde_m: float
    log_L1_norm: float
    log_theta_m: float
    log_delta_m: float
    delta_m: float
    log_sigma_m: float
    sigma_m: float
    Gamma_m_bound: Optional[float]
    Gamma_m_estimate: Optional[float]
    log_lambda_max: Optional[float]
    lambda_max: Optional[float]
    lam: float
    kappa_m: Optional[float]
    m_ge_Kd: bool
    L1_discrete_estimate: Optional[float] = None
    exact: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def compute_constants(m: int = 4, d: int = 1, gamma_tilde: Optional[float] = None,
                      spec: Optional[PotentialSpec] = None, estimate_gamma: bool = False,
                      estimate_l1: bool = False, gamma_grid: Optional[GridSpec] = None) -> TheoryConstants:
    if m < 1:
        raise ConfigError("m must be >= 1")
    if d not in (1, 2):
        raise ConfigError("d must be 1 or 2")
    form = form_for(d)
    sigma = form.sigma
    alpha = alpha_d(sigma, d)
    eps = eps_max(m)
    beta = beta_m(m, d)

    if d == 1:
        c_am2 = c_am_squared_quadrature(m, d)
        c_am2_closed = c_am_squared_closed(m, d)
    else:
        c_am2 = c_am2_closed = None
    sob, branch, _ = sobolev_branch(d, m, c_am2)
    Lambda = min(sob, 0.5, d / 6.0)
    gamma = min(Lambda, sigma)
    gt = gamma / 2.0 if gamma_tilde is None else float(gamma_tilde)
    if not 0.0 < gt < gamma:
        raise ConfigError(f"gamma_tilde must lie in (0, γ_m = {gamma:.6g})")

    log_l1 = log_l1_bound(m, d, eps)
    # ϑ_m(-γ̃) = (1/(Λ - γ̃)) (1 + max{1/(σ - γ̃), 1/γ̃} ‖L₁^ε‖)
    inv = max(1.0 / (sigma - gt), 1.0 / gt)
    log_theta = -math.log(Lambda - gt) + np.logaddexp(0.0, math.log(inv) + log_l1)
    log_delta = max(math.log(math.pi / 2.0) + 2.0 * log_theta, beta + gt)
    log_sigma_m = math.log(gt) - log_delta

    spec = spec if spec is not None else PotentialSpec(lam=0.01, kind="sinusoidal", d=d, k0=(1.0,) * d)
    G_bound = G_est = log_lmax = lmax = kappa = None
    if spec.active:
        G_bound = gamma_m_bound(spec, m)
        if estimate_gamma:
            g = gamma_grid or GridSpec(d=d, n_x=64 if d == 1 else 16, n_xi=64 if d == 1 else 16,
                                       x_max=12.0, xi_max=8.0)
            G_est = gamma_m_estimate(spec.snapped(g), m, g)
        log_lmax = math.log(gt) - math.log(G_bound) - log_delta
        lmax = _exp_or_inf(log_lmax)
        if spec.lam == 0.0:
            kappa = gt
        else:
            log_pen = math.log(abs(spec.lam)) + log_delta + math.log(G_bound)
            kappa = gt - _exp_or_inf(log_pen) if log_pen < 709.0 else -math.inf

    l1_est = l1_discrete_estimate(m) if (estimate_l1 and d == 1) else None
    exact = {
        "a1": str(A1), "a2": str(A2), "K": str(K_CONST), "beta_m": str(Fraction(beta).limit_denominator()),
        "eps_m": str(Fraction(eps).limit_denominator(10**6)) if eps == 1.0 / 24.0 else f"1/(12*sqrt({m}))",
        "sigma": "1 - 1/sqrt(2)", "alpha": f"sigma/(sigma + {2 * d + 1})",
    }
    return TheoryConstants(
        d=d, m=m, sigma=sigma, alpha=alpha, a1=float(A1), a2=float(A2), K=float(K_CONST), beta_m=beta,
        eps_m=eps, C_Am=math.sqrt(c_am2) if c_am2 else None,
        C_Am_closed=math.sqrt(c_am2_closed) if c_am2_closed else None,
        Lambda_m=Lambda, sobolev_branch=branch, gamma_m=gamma, gamma_tilde_m=gt,
        log_L1_norm=log_l1, log_theta_m=float(log_theta), log_delta_m=float(log_delta),
        delta_m=_exp_or_inf(log_delta), log_sigma_m=float(log_sigma_m), sigma_m=math.exp(log_sigma_m),
        Gamma_m_bound=G_bound, Gamma_m_estimate=G_est, log_lambda_max=log_lmax, lambda_max=lmax,
        lam=spec.lam, kappa_m=kappa, m_ge_Kd=bool(m >= K_CONST * d), L1_discrete_estimate=l1_est, exact=exact,
    )


# --- sampled inequality checks ------------------------------------------------


@dataclass
class InequalityCheck:
    name: str
    passed: bool
    worst_margin: float
    n_points: int
    detail: str = ""


def techlemma_points(d: int = 1, n: int = 8000, seed: int = 42, r_max: float = 60.0) -> np.ndarray:
    """Sample points: the default grid, log-uniform radii in random directions, and the ring |y|² = 12."""
    rng = np.random.default_rng(seed)
    g = GridSpec(d=d, n_x=32 if d == 1 else 8, n_xi=32 if d == 1 else 8, check_tail=False)
    grid_pts = np.stack([np.broadcast_to(y, g.shape).ravel() for y in g.coords()], axis=1)
    dirs = rng.standard_normal((n, 2 * d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(math.log(1e-3), math.log(r_max), n))[:, None]
    ring = rng.standard_normal((n // 4, 2 * d))
    ring *= math.sqrt(12.0) / np.linalg.norm(ring, axis=1, keepdims=True)
    return np.concatenate([grid_pts, dirs * radii, ring])


def check_techlemma(points: Optional[np.ndarray] = None, d: int = 1, ms: Sequence[int] = tuple(range(1, 9)),
                    a1: float = float(A1), a2: float = float(A2), K: Optional[float] = None,
                    eps: Optional[float] = None) -> dict:
    """Sampled checks of the four inequalities on A, compared in log domain.

    (a) a₁(1 + A^m) ≤ A^{m-1}|∇A|² on |y|² ≥ 12;
    (b) 4d(1 + A^m) ≤ m A^{m-1}|∇A|² on |y|² ≥ 12, for m ≥ Kd (K = 4/a₁);
    (c) |∇A|² ≤ a₂ A everywhere;
    (d) Δ(1 + A^m) ≤ m A^{m-1}|∇A|² ε² 6(m - 1 + 3d) where every |x_i|, |ξ_i| ≥ 1/ε.
    Margins are log(rhs) - log(lhs); a check passes when the worst margin is ≥ -1e-12.
    """
    form = form_for(d)
    pts = techlemma_points(d) if points is None else np.asarray(points, dtype=float)
    ys = [pts[:, j] for j in range(2 * d)]
    A = form.value(ys)
    g2 = sum(g**2 for g in form.gradient(ys))
    r2 = np.sum(pts**2, axis=1)
    far = r2 >= 12.0 * (1.0 - 1e-12)
    K = 4.0 / a1 if K is None else K
    tol = -1e-12
    out = {}

    with np.errstate(divide="ignore", invalid="ignore"):
        logA = np.log(A)
        logg2 = np.log(g2)
        margins = []
        for m in ms:
            lhs = math.log(a1) + np.logaddexp(0.0, m * logA[far])
            rhs = (m - 1) * logA[far] + logg2[far]
            margins.append(np.min(rhs - lhs) if far.any() else np.inf)
        wa = float(min(margins))
        out["a"] = InequalityCheck("a", wa >= tol, wa, int(far.sum()), f"a1={a1:g}, m={list(ms)}")

        mb = sorted({m for m in ms if m >= K * d} | {int(math.ceil(K * d)), int(math.ceil(K * d)) + 16})
        margins = []
        for m in mb:
            lhs = math.log(4 * d) + np.logaddexp(0.0, m * logA[far])
            rhs = math.log(m) + (m - 1) * logA[far] + logg2[far]
            margins.append(np.min(rhs - lhs))
        wb = float(min(margins))
        out["b"] = InequalityCheck("b", wb >= tol, wb, int(far.sum()), f"K={K:g}, m={mb}")

        pos = A > 0
        wc = float(np.min(math.log(a2) + logA[pos] - logg2[pos]))
        out["c"] = InequalityCheck("c", wc >= tol, wc, int(pos.sum()), f"a2={a2:g}")

        margins = []
        n_d = 0
        for m in ms:
            e = eps_max(m) if eps is None else eps
            sel = np.all(np.abs(pts) >= 1.0 / e, axis=1)
            extra = _corner_points(d, 1.0 / e)
            Ae = np.concatenate([A[sel], form.value([extra[:, j] for j in range(2 * d)])])
            ge = np.concatenate([g2[sel], sum(g**2 for g in form.gradient([extra[:, j] for j in range(2 * d)]))])
            n_d += Ae.size
            # Δ(A^m) = m(m-1)A^{m-2}|∇A|² + m A^{m-1} ΔA
            lap = form.laplacian
            lhs = math.log(m) + (m - 2) * np.log(Ae) + np.log((m - 1) * ge + Ae * lap)
            rhs = math.log(m) + (m - 1) * np.log(Ae) + np.log(ge) + 2 * math.log(e) + math.log(6 * (m - 1 + 3 * d))
            margins.append(np.min(rhs - lhs))
        wd = float(min(margins))
        out["d"] = InequalityCheck("d", wd >= tol, wd, n_d, f"eps=min(1/(12 sqrt m), 1/24), m={list(ms)}")
    return out


def _corner_points(d: int, lo: float, n: int = 400, seed: int = 7) -> np.ndarray:
    """Points with every component of magnitude ≥ lo (log-uniform up to 50·lo, random signs)."""
    rng = np.random.default_rng(seed)
    mag = lo * np.exp(rng.uniform(0.0, math.log(50.0), (n, 2 * d)))
    mag[0] = lo  # the corner itself
    return mag * rng.choice([-1.0, 1.0], (n, 2 * d))


# --- weighted Poincaré --------------------------------------------------------


def _gauss_nodes(n: int = 24) -> tuple:
    """Quadrature nodes/weights for E_μ[·] in d = 1 (probabilists' Hermite, Cholesky-mapped)."""
    z, wz = hermite_e.hermegauss(n)
    wz = wz / wz.sum()
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    W = np.outer(wz, wz)
    L = np.linalg.cholesky(form_for(1).covariance)
    X = L[0, 0] * Z1
    XI = L[1, 0] * Z1 + L[1, 1] * Z2
    return X, XI, W


def poincare_family(n_random: int = 50, seed: int = 42, degree: int = 4) -> list:
    """Coefficient arrays c[i, j] (x^i ξ^j): all monomials of degree 1..degree plus random polynomials."""
    polys = []
    for tot in range(1, degree + 1):
        for i in range(tot + 1):
            c = np.zeros((degree + 1, degree + 1))
            c[i, tot - i] = 1.0
            polys.append(c)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        c = rng.standard_normal((degree + 1, degree + 1))
        ii, jj = np.indices(c.shape)
        c[ii + jj > degree] = 0.0
        c[0, 0] = 0.0
        polys.append(c)
    # the equality case: linear function along the softest eigenvector of Hess A
    v = np.linalg.eigh(form_for(1).hessian)[1][:, 0]
    c = np.zeros((degree + 1, degree + 1))
    c[1, 0], c[0, 1] = v
    polys.append(c)
    return polys


def check_poincare(test_polys: Optional[list] = None, rtol: float = 1e-8) -> dict:
    """∬|f - E_μ f|²μ ≤ (1/σ)∬μ|∇f|² by Gauss-Hermite quadrature (exact for these degrees)."""
    sigma = form_for(1).sigma
    X, XI, W = _gauss_nodes()
    polys = poincare_family() if test_polys is None else test_polys
    ratios = []
    for c in polys:
        f = P.polyval2d(X, XI, c)
        f = f - np.sum(W * f)
        var = float(np.sum(W * f * f))
        if var <= 1e-300:
            continue
        gx = P.polyval2d(X, XI, P.polyder(c, axis=0))
        gp = P.polyval2d(X, XI, P.polyder(c, axis=1))
        ratios.append(float(np.sum(W * (gx * gx + gp * gp))) / var)
    rmin = min(ratios)
    return {
        "passed": bool(rmin >= sigma * (1.0 - rtol)),
        "min_ratio": rmin,
        "sigma": sigma,
        "n_tests": len(ratios),
    }
