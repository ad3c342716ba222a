import numpy as np
import pytest

from wfplab.errors import ConfigError
from wfplab.grid import GridSpec, WignerField, form_for, l2_norm, mu_values
from wfplab.operators import apply_H
from wfplab.spectral import (assemble_generator, coarse_grid, diff_matrices, eigs_rightmost, kernel_direction,
                             kernel_residual, verify_gap)

SIGMA = form_for(1).sigma


@pytest.fixture(scope="module")
def H32():
    g = coarse_grid(32)
    return g, assemble_generator(g)


def test_diff_matrices_exact_on_trig():
    n, half = 24, np.pi
    h = 2 * half / n
    y = -half + h * np.arange(n)
    D1, D2 = diff_matrices(n, h)
    assert np.allclose(D1 @ np.sin(3 * y), 3 * np.cos(3 * y), atol=1e-12)
    assert np.allclose(D2 @ np.cos(2 * y), -4 * np.cos(2 * y), atol=1e-12)


def test_dense_matches_matrix_free(H32, rng):
    g, H = H32
    v = WignerField(g, rng.standard_normal(g.shape) * np.exp(-np.add.outer(g.x**2, g.xi**2) / 20))
    assert np.linalg.norm(H @ v.values.ravel() - apply_H(v).values.ravel()) < 1e-10 * np.linalg.norm(H @ v.values.ravel())


def test_spectrum_is_nonpositive_integers(H32):
    # the drift matrix has the double eigenvalue -1, so the spectrum is {0, -1, -2, ...}
    g, H = H32
    ev = eigs_rightmost(H, 6)
    assert abs(ev[0]) < 1e-4
    assert np.allclose(ev[1:3].real, -1.0, atol=2e-2)
    rep = verify_gap(ev, SIGMA)
    assert rep.passed and rep.n_kernel == 1
    assert rep.inv_gap == pytest.approx(1.0, abs=2e-2)


def test_kernel_vector_is_mu(H32):
    g, H = H32
    assert kernel_residual(H, g) < 1e-4
    kd = kernel_direction(H, g)
    mu = WignerField(g, mu_values(g))
    assert l2_norm(kd - mu / (float(np.sum(mu.values)) * g.cell)) < 1e-4 * l2_norm(mu)


def test_verify_gap_logic():
    assert verify_gap([0.0, -1.0, -1.0], SIGMA).passed
    assert not verify_gap([0.0, 1e-5, -1.0], SIGMA).passed            # two kernel candidates
    assert not verify_gap([0.0, -0.2, -1.0], SIGMA).passed            # eigenvalue inside the gap
    assert not verify_gap([-0.5, -1.0], SIGMA).passed                 # no kernel
    d = verify_gap([0.0, -1.0], SIGMA).as_dict()
    assert d["second_re"] == -1.0 and d["passed"]


def test_assembly_limits():
    with pytest.raises(ConfigError):
        assemble_generator(GridSpec(n_x=128, n_xi=128))
    with pytest.raises(ConfigError):
        assemble_generator(GridSpec(d=2, n_x=32, n_xi=24))
