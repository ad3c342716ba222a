import math

import numpy as np
import pytest

from wfplab import density as dm
from wfplab.errors import ConfigError, InvariantError
from wfplab.grid import GridSpec, WignerField, l2_norm, mu_field

G = GridSpec()
# Covariance of μ is [[3, -1], [-1, 1]]; symplectic eigenvalue ν = √det = √2 (ħ = 1)
NU = math.sqrt(2.0)


def test_pure_state_kernel_oracle():
    rho = dm.wigner_to_rho(dm.pure_state_wigner(G))
    ref = dm.pure_state_kernel(G)
    assert np.max(np.abs(rho.entries - ref.entries)) < 1e-12
    assert dm.trace_of(rho) == pytest.approx(1.0, abs=1e-12)
    assert dm.t2_norm(rho) == pytest.approx(1.0, abs=1e-10)
    ev = dm.operator_eigenvalues(rho)
    assert ev[-1] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(ev[:-1])) < 1e-10


def test_mu_is_a_gaussian_thermal_state():
    # a Gaussian state with symplectic eigenvalue ν has eigenvalues (1 - q) q^n, q = (ν - 1/2)/(ν + 1/2)
    rho = dm.wigner_to_rho(mu_field(G))
    q = (NU - 0.5) / (NU + 0.5)
    ev = np.sort(dm.operator_eigenvalues(rho))[::-1]
    assert np.allclose(ev[:8], (1 - q) * q ** np.arange(8), atol=1e-9)
    assert dm.trace_of(rho) == pytest.approx(1.0, abs=1e-10)
    assert dm.hermiticity_error(rho) < 1e-12
    # purity tr ρ² = 1/(2ν)
    assert dm.t2_norm(rho) ** 2 == pytest.approx(1.0 / (2.0 * NU), rel=1e-9)
    assert dm.t2_relation_error(rho, mu_field(G)) < 1e-9
    mn, neg = dm.positivity_spectrum(rho)
    assert mn > -1e-12 and neg < 1e-11
    assert dm.trace_norm(rho) == pytest.approx(1.0, abs=1e-9)


def test_coarse_velocity_grid_does_not_alias():
    # on 64² the raw ξ-sum has period 2π/dξ ≈ 25 < 2·(2 x_max); the transform must still be exact
    g = GridSpec(n_x=64, n_xi=64)
    rho = dm.wigner_to_rho(mu_field(g))
    q = (NU - 0.5) / (NU + 0.5)
    ev = np.sort(dm.operator_eigenvalues(rho))[::-1]
    assert np.allclose(ev[:4], (1 - q) * q ** np.arange(4), atol=1e-6)
    assert ev[-1] > -1e-8
    assert l2_norm(dm.rho_to_wigner(rho, g) - mu_field(g)) < 1e-6 * l2_norm(mu_field(g))


def test_round_trip():
    w = mu_field(G)
    back = dm.rho_to_wigner(dm.wigner_to_rho(w), G)
    assert l2_norm(back - w) < 1e-8 * l2_norm(w)
    p = dm.pure_state_wigner(G)
    assert l2_norm(dm.rho_to_wigner(dm.pure_state_kernel(G), G) - p) < 1e-8 * l2_norm(p)


def test_momentum_sign_convention():
    # a state moving with mean velocity +p0 has phase e^{i p0 x}: ρ(x, y) ∝ e^{i p0 (x - y)}
    p0 = 1.5
    w = WignerField(G, np.exp(-G.x[:, None] ** 2 - (G.xi[None, :] - p0) ** 2) / math.pi)
    rho = dm.wigner_to_rho(w)
    phi = math.pi**-0.25 * np.exp(-0.5 * G.x**2 + 1j * p0 * G.x)
    assert np.max(np.abs(rho.entries - np.outer(phi, phi.conj()))) < 1e-12


def test_validation():
    rho = dm.wigner_to_rho(mu_field(G))
    bad = dm.DensityMatrixKernel(rho.entries + 1e-3j * np.eye(rho.n), rho.dx, rho.x0)
    with pytest.raises(InvariantError, match="Hermitian"):
        dm.rho_to_wigner(bad, G)
    with pytest.raises(ConfigError):
        dm.rho_to_wigner(rho, GridSpec(n_x=64, n_xi=64))
    with pytest.raises(ConfigError):
        dm.wigner_to_rho(mu_field(GridSpec(d=2, n_x=32, n_xi=24)))
    with pytest.raises(ConfigError):
        dm.DensityMatrixKernel(np.zeros((3, 4)), 0.1, 0.0)
