import math

import numpy as np
import pytest
from scipy import integrate

from wfplab.errors import ConfigError, GridMismatchError, InvariantError
from wfplab.grid import (GridSpec, WignerField, check_edge_decay, eval_A, eval_F, eval_mu, form_for, h_distance_trunc,
                         inner_Hm, l2_norm, mass, mu_field, norm_H, norm_H_trunc, norm_Hm, shifted_mu, zeros)


def test_normalization_constant_closed_form():
    # det Q = 3/16 - 1/16 = 1/8, so c = sqrt(1/8)/π
    assert form_for(1).c == pytest.approx(1.0 / (2.0 * math.sqrt(2.0) * math.pi), rel=1e-15)
    assert form_for(2).c == pytest.approx(form_for(1).c ** 2, rel=1e-13)


def test_sigma_is_smallest_hessian_eigenvalue():
    # Hess A = [[1/2, 1/2], [1/2, 3/2]]: trace 2, det 1/2 → 1 ± 1/√2
    assert form_for(1).sigma == pytest.approx(1.0 - 1.0 / math.sqrt(2.0), abs=1e-15)
    assert form_for(2).sigma == pytest.approx(1.0 - 1.0 / math.sqrt(2.0), abs=1e-15)


def test_mu_has_unit_mass_by_adaptive_quadrature():
    val, _ = integrate.dblquad(lambda xi, x: float(eval_mu(x, xi)), -30, 30, -30, 30, epsabs=1e-13)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_mu_grid_mass_and_tail():
    g = GridSpec()
    assert mass(mu_field(g)) == pytest.approx(1.0, abs=1e-10)
    assert g.mu_tail() < 1e-10


def test_small_box_rejected():
    with pytest.raises(ConfigError, match="box too small"):
        GridSpec(x_max=6.0, xi_max=6.0)


@pytest.mark.parametrize("kw", [dict(n_x=7), dict(n_xi=6), dict(d=3), dict(x_max=-1.0)])
def test_bad_grid_parameters(kw):
    with pytest.raises(ConfigError):
        GridSpec(**kw)


@pytest.mark.parametrize("d", [1, 2])
def test_rotation_is_orthogonal_to_gradient_and_divergence_free(d, rng):
    form = form_for(d)
    pts = [rng.standard_normal(200) * 3 for _ in range(2 * d)]
    F = form.rotation(pts)
    g = form.gradient(pts)
    assert np.max(np.abs(sum(f * gi for f, gi in zip(F, g)))) < 1e-12
    # F is linear, F = J y, so div F = trace J
    J = np.array([[float(form.rotation([np.eye(2 * d)[j][i] for i in range(2 * d)])[k]) for j in range(2 * d)]
                  for k in range(2 * d)])
    assert abs(np.trace(J)) < 1e-15


def test_pointwise_helpers_match_form(rng):
    x, xi = rng.standard_normal(50), rng.standard_normal(50)
    assert np.allclose(eval_A(x, xi), 0.25 * x**2 + 0.5 * x * xi + 0.75 * xi**2, rtol=1e-14)
    assert np.allclose(eval_mu(x, xi), form_for(1).c * np.exp(-eval_A(x, xi)), rtol=1e-14)
    F = eval_F(x, xi)
    # b = (-ξ, x + 2ξ), ∇A = (x/2 + ξ/2, x/2 + 3ξ/2)
    assert np.allclose(F[:, 0], -xi - 0.5 * x - 0.5 * xi)
    assert np.allclose(F[:, 1], x + 2 * xi - 0.5 * x - 1.5 * xi)


def test_hm_norm_of_mu_against_quadrature():
    g = GridSpec()
    for m in (0, 2, 4):
        ref, _ = integrate.dblquad(lambda xi, x: float(eval_mu(x, xi)) ** 2 * (1 + float(eval_A(x, xi)) ** m),
                                   -40, 40, -40, 40, epsabs=1e-14)
        assert norm_Hm(mu_field(g), m) ** 2 == pytest.approx(ref, rel=1e-9)


def test_h_norm_of_mu_is_one():
    # ‖μ‖²_H = ∬ μ²/μ = 1
    g = GridSpec()
    assert norm_H(mu_field(g)) == pytest.approx(1.0, abs=1e-9)
    assert norm_H_trunc(mu_field(g)) == pytest.approx(1.0, abs=1e-8)


def test_h_distance_of_shifted_gaussian():
    # ‖μ(·-s) - μ‖²_H = e^{2A(s)} - 1 for the Gaussian μ = c e^{-A}
    g = GridSpec()
    s = np.array([0.3, -0.3])
    ref = math.sqrt(math.exp(2 * float(eval_A(*s))) - 1.0)
    assert h_distance_trunc(shifted_mu(g, s), mu_field(g), a_cut=60) == pytest.approx(ref, rel=1e-8)


def test_field_arithmetic_and_mismatch():
    g = GridSpec(n_x=64, n_xi=64)
    a = mu_field(g)
    b = 2.0 * a - a
    assert np.array_equal(b.values, a.values)
    with pytest.raises(GridMismatchError):
        a + mu_field(GridSpec())
    with pytest.raises(InvariantError):
        WignerField(g, np.full(g.shape, np.nan))
    with pytest.raises(InvariantError):
        WignerField(g, np.zeros(g.shape, dtype=complex))
    assert inner_Hm(a, zeros(g), 4) == 0.0
    assert l2_norm(zeros(g)) == 0.0


def test_edge_decay_check():
    g = GridSpec(n_x=64, n_xi=64)
    assert check_edge_decay(mu_field(g)) < 1e-8
    with pytest.raises(InvariantError):
        check_edge_decay(WignerField(g, np.ones(g.shape)))


def test_d2_grid_shape_and_mass():
    g = GridSpec(d=2, n_x=32, n_xi=24)
    assert g.shape == (32, 32, 24, 24)
    assert mass(mu_field(g)) == pytest.approx(1.0, abs=1e-9)
