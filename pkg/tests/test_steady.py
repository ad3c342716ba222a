import numpy as np
import pytest

from wfplab.errors import ConfigError, DivergenceError
from wfplab.grid import GridSpec, WignerField, l2_norm, mass, mu_field, mu_values, norm_Hm, sample
from wfplab.operators import apply_L
from wfplab.potential import PotentialSpec
from wfplab.steady import fixed_point_solve, solve_Linv, stationarity_residual

G64 = GridSpec(n_x=64, n_xi=64)


def _dmu(grid):
    # ∇μ = -μ∇A with ∇A = (x/2 + ξ/2, x/2 + 3ξ/2)
    x, p = grid.coords()
    mu = mu_values(grid)
    return WignerField(grid, -mu * (x / 2 + p / 2)), WignerField(grid, -mu * (x / 2 + 1.5 * p))


def test_derivatives_of_mu_span_an_invariant_block():
    # L is Δ + div(Jy ·) with J = [[0, -1], [1, 2]]; commuting ∂ through gives L∇μ = -Jᵀ∇μ
    dx, dp = _dmu(G64)
    assert l2_norm(apply_L(dx) + dp) < 1e-8 * l2_norm(dp)
    assert l2_norm(apply_L(dp) - dx + 2 * dp) < 1e-8 * l2_norm(dp)


@pytest.mark.parametrize("backend,tol", [("krylov", 1e-8), ("semigroup", 1e-5)])
def test_Linv_closed_form(backend, tol):
    # from the block above: L⁻¹(∂_ξμ) = -∂_xμ
    dx, dp = _dmu(G64)
    u = solve_Linv(dp, backend)
    assert l2_norm(u + dx) < tol * l2_norm(dx)


@pytest.mark.parametrize("backend", ["krylov", "semigroup"])
def test_Linv_inverts_L_on_zero_mass_fields(backend):
    f = sample(G64, lambda x, p: (x * p - 0.5 * p) * np.exp(-(x * x) / 6 - p * p / 2))
    f = f - mass(f) * mu_field(G64) / mass(mu_field(G64))
    u = solve_Linv(apply_L(f), backend)
    assert abs(mass(u)) < 1e-12
    assert l2_norm(u - f) < (1e-8 if backend == "krylov" else 1e-5) * l2_norm(f)


def test_Linv_rejects_mass_and_unknown_backend():
    with pytest.raises(ConfigError, match="zero-mass"):
        solve_Linv(mu_field(G64))
    with pytest.raises(ConfigError):
        solve_Linv(mu_field(G64) * 0.0, "direct")


def test_zero_rhs_gives_zero():
    z = mu_field(G64) * 0.0
    assert l2_norm(solve_Linv(z, "krylov")) == 0.0
    assert l2_norm(solve_Linv(z, "semigroup")) == 0.0


def test_unperturbed_fixed_point_is_mu():
    rep = fixed_point_solve(PotentialSpec(), G64)
    assert rep.iterations == 0
    assert np.array_equal(rep.w_inf.values, mu_field(G64).values)
    assert rep.final_residual < 1e-6


def test_small_lambda_fixed_point_on_coarse_grid():
    spec = PotentialSpec(lam=0.01, kind="sinusoidal", k0=(1.0,)).snapped(G64)
    a = fixed_point_solve(spec, G64, backend="krylov")
    b = fixed_point_solve(spec, G64, backend="semigroup")
    for rep in (a, b):
        assert abs(mass(rep.w_inf) - 1.0) < 1e-9
        assert max(rep.ratios) < 0.1
        assert rep.increments[-1] <= 1e-10
        assert np.all(np.diff(rep.residuals) <= 0)
    assert norm_Hm(a.w_inf - b.w_inf, 4) / norm_Hm(a.w_inf, 4) < 1e-4
    assert stationarity_residual(a.w_inf, spec) < 1e-5
    s = a.summary()
    assert s["iterations"] == a.iterations and s["backend"] == "krylov"


def test_first_order_response_is_linear_in_lambda():
    # w∞(λ) - μ = λ L⁻¹Θμ + O(λ²)
    spec1 = PotentialSpec(lam=1e-3, kind="gaussian_bump", width=1.0)
    spec2 = PotentialSpec(lam=2e-3, kind="gaussian_bump", width=1.0)
    mu = mu_field(G64)
    d1 = fixed_point_solve(spec1, G64).w_inf - mu
    d2 = fixed_point_solve(spec2, G64).w_inf - mu
    assert l2_norm(d2 - 2 * d1) < 1e-2 * l2_norm(d2)


def test_large_lambda_diverges():
    spec = PotentialSpec(lam=50.0, kind="sinusoidal", k0=(1.0,)).snapped(G64)
    with pytest.raises(DivergenceError, match="contraction"):
        fixed_point_solve(spec, G64, max_iter=20)
