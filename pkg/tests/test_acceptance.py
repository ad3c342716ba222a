"""The ten primary acceptance criteria at their stated tolerances.

Each test prints one [PASS]/[FAIL] line; the lines are also collected into the
terminal summary. Criterion 10 additionally runs the ``selftest`` scenario end to end.
"""
import subprocess
import sys
import time

import pytest

from wfplab import selftest as st


def _run(fn, ctx, record_line):
    r = fn(ctx)
    line = r.line()
    print(line)
    record_line(line)
    return r


def test_criterion_01_constants(ctx, record_line):
    r = _run(st.criterion_constants, ctx, record_line)
    assert r.passed, r.details


def test_criterion_02_steady_kernel(ctx, record_line):
    r = _run(st.criterion_kernel, ctx, record_line)
    assert r.passed, r.details


def test_criterion_03_unperturbed_decay(ctx, record_line):
    r = _run(st.criterion_decay, ctx, record_line)
    assert r.passed, r.details
    assert r.seconds < 120.0


def test_criterion_04_spectral_gap(ctx, record_line):
    r = _run(st.criterion_gap, ctx, record_line)
    assert r.passed, r.details
    assert r.seconds < 300.0


def test_criterion_05_theta_oracle(ctx, record_line):
    r = _run(st.criterion_theta, ctx, record_line)
    assert r.passed, r.details


def test_criterion_06_fixed_point(ctx, record_line):
    r = _run(st.criterion_fixed_point, ctx, record_line)
    assert r.passed, r.details


def test_criterion_07_transient(ctx, record_line):
    r = _run(st.criterion_transient, ctx, record_line)
    assert r.passed, r.details


def test_criterion_08_lambda_continuity(ctx, record_line):
    r = _run(st.criterion_lambda_continuity, ctx, record_line)
    assert r.passed, r.details


def test_criterion_09_quantum_consistency(ctx, record_line):
    r = _run(st.criterion_quantum, ctx, record_line)
    assert r.passed, r.details


def test_criterion_10_inequalities(ctx, record_line):
    r = _run(st.criterion_inequalities, ctx, record_line)
    assert r.passed, {k: v for k, v in r.details.items()}


@pytest.mark.slow
def test_criterion_10_selftest_scenario(tmp_path, record_line):
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "wfplab", "--scenario", "selftest", "--output-dir", str(tmp_path)],
        capture_output=True, text=True, timeout=900,
    )
    secs = time.perf_counter() - t0
    line = f"[{'PASS' if proc.returncode == 0 and secs < 900 else 'FAIL'}] criterion 10 selftest scenario: " \
           f"exit={proc.returncode}, {secs:.1f}s"
    print(line)
    record_line(line)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert secs < 900.0
    assert (tmp_path / "selftest.json").is_file()
    assert proc.stdout.count("[PASS]") == 10
