"""Compiled kernels against the numpy fallback, and both against direct oracles."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wfplab import _kernels_py, kernels

ck = pytest.importorskip("wfplab._ckernels")

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_backend_selected_at_import():
    assert kernels.BACKEND in ("cython", "python")


def test_pure_python_env_forces_fallback():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-c", "import wfplab.kernels as k; print(k.BACKEND)"],
                         env={**__import__("os").environ, "WFPLAB_PURE_PYTHON": "1"}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(0, 300), elements=finite))
def test_neumaier_matches_fsum(a):
    ref = math.fsum(a)
    assert ck.neumaier_sum(a) == pytest.approx(ref, abs=1e-9 * (1 + np.sum(np.abs(a))))
    assert _kernels_py.neumaier_sum(a) == ref


def test_neumaier_cancellation():
    a = np.array([1e16, 1.0, -1e16] * 10)
    assert ck.neumaier_sum(a) == 10.0
    assert _kernels_py.neumaier_sum(a) == 10.0


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 200), elements=st.floats(-800, 800)))
def test_log_sum_exp_matches_reference(logs):
    top = np.max(logs)
    ref = top + math.log(math.fsum(np.exp(logs - top)))
    assert ck.log_sum_exp(logs) == pytest.approx(ref, abs=1e-12 * (1 + abs(ref)))
    assert _kernels_py.log_sum_exp(logs) == pytest.approx(ref, abs=1e-12 * (1 + abs(ref)))


def test_log_sum_exp_empty_and_minus_inf():
    for impl in (ck, _kernels_py):
        assert impl.log_sum_exp(np.array([])) == -math.inf
        assert impl.log_sum_exp(np.array([-math.inf, -math.inf])) == -math.inf


@pytest.mark.parametrize("kind", [0, 1])
def test_interp2_backends_agree(kind, rng):
    f = rng.standard_normal((20, 24, 3))
    px = rng.uniform(-2, 22, 500)
    py = rng.uniform(-2, 26, 500)
    a = ck.interp2_batch(f, px, py, kind)
    b = _kernels_py.interp2_batch(f, px, py, kind)
    assert np.max(np.abs(a - b)) < 1e-13


@pytest.mark.parametrize("kind", [0, 1])
def test_interp2_reproduces_nodes_and_linear_data(kind, rng):
    ix, iy = np.meshgrid(np.arange(16.0), np.arange(16.0), indexing="ij")
    f = (2 * ix - 3 * iy + 1)[:, :, None]
    # interior points: both stencils reproduce linear functions exactly
    px, py = rng.uniform(1, 13.9, 200), rng.uniform(1, 13.9, 200)
    for impl in (ck, _kernels_py):
        out = impl.interp2_batch(f, px, py, kind)[:, 0]
        assert np.allclose(out, 2 * px - 3 * py + 1, atol=1e-12)
        nodes = impl.interp2_batch(f, ix.ravel(), iy.ravel(), kind)[:, 0]
        assert np.allclose(nodes, f.ravel(), atol=1e-13)


def test_lagrange4_exact_for_cubics(rng):
    ix, iy = np.meshgrid(np.arange(12.0), np.arange(12.0), indexing="ij")
    f = (ix**3 - 2 * ix * iy**2 + iy**3)[:, :, None]
    px, py = rng.uniform(1, 9.9, 100), rng.uniform(1, 9.9, 100)
    out = kernels.interp2_batch(f, px, py, 1)[:, 0]
    assert np.allclose(out, px**3 - 2 * px * py**2 + py**3, atol=1e-9)


def test_theta_direct_backends_agree_and_match_loop(rng):
    nx, n, ne = 5, 12, 7
    w = rng.standard_normal((nx, n))
    dv = rng.standard_normal((nx, ne))
    sintab = rng.standard_normal((ne, 2 * n - 1))
    a = ck.theta_direct(w, dv, sintab)
    b = _kernels_py.theta_direct(w, dv, sintab)
    ref = np.zeros((nx, n))
    for i in range(nx):
        for j in range(n):
            ref[i, j] = sum(dv[i, e] * sum(w[i, l] * sintab[e, j - l + n - 1] for l in range(n)) for e in range(ne))
    assert np.max(np.abs(a - ref)) < 1e-12
    assert np.max(np.abs(b - ref)) < 1e-12


def test_benchmark_quick_run(tmp_path):
    import importlib.util
    import json
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    out = tmp_path / "bench.json"
    assert bench.main(["--quick", "--repeat", "1", "--json", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert {r["kernel"].split()[0] for r in rows} >= {"neumaier_sum", "log_sum_exp", "interp2", "theta_direct"}
    assert all(r["rel_diff"] < 1e-12 for r in rows)
