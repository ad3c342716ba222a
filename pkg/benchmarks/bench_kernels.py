"""Compiled Cython kernels vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--quick] [--repeat N] [--json out.json]

Each kernel runs on identical inputs in both backends; the table reports the best-of-N
wall time, the speedup and the max abs difference between the two results.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from wfplab import _kernels_py as py

try:
    from wfplab import _ckernels as cy
except ImportError:  # pragma: no cover - depends on the build
    cy = None


def cases(quick: bool):
    rng = np.random.default_rng(0)
    n_sum = 20_000 if quick else 1_000_000
    n_pts = 2_000 if quick else 200_000
    n_theta = 16 if quick else 64
    a = rng.standard_normal(n_sum) * 10.0 ** rng.integers(-8, 8, n_sum)
    logs = rng.uniform(-700, 700, n_sum)
    f = rng.standard_normal((128, 128, 1))
    px, py_ = rng.uniform(0, 127, n_pts), rng.uniform(0, 127, n_pts)
    w = rng.standard_normal((n_theta, n_theta))
    dv = rng.standard_normal((n_theta, n_theta - 1))
    sintab = rng.standard_normal((n_theta - 1, 2 * n_theta - 1))
    return [
        ("neumaier_sum", "neumaier_sum", (a,)),
        ("log_sum_exp", "log_sum_exp", (logs,)),
        ("interp2 keys cubic", "interp2_batch", (f, px, py_, 0)),
        ("interp2 lagrange4", "interp2_batch", (f, px, py_, 1)),
        (f"theta_direct {n_theta}x{n_theta}", "theta_direct", (w, dv, sintab)),
    ]


def run(quick: bool = False, repeat: int = 5) -> list:
    if cy is None:
        raise SystemExit("compiled extension wfplab._ckernels is not built; run `pip install -e .` first")
    out = []
    for label, name, args in cases(quick):
        fpy, fcy = getattr(py, name), getattr(cy, name)
        rp, rc = fpy(*args), fcy(*args)
        diff = float(np.max(np.abs(np.asarray(rp) - np.asarray(rc))))
        scale = float(np.max(np.abs(np.asarray(rp)))) or 1.0
        tp = min(timeit.repeat(lambda: fpy(*args), number=1, repeat=repeat))
        tc = min(timeit.repeat(lambda: fcy(*args), number=1, repeat=repeat))
        out.append({"kernel": label, "python_s": tp, "cython_s": tc, "speedup": tp / tc, "rel_diff": diff / scale})
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="small inputs (smoke test)")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the results to this file")
    args = ap.parse_args(argv)
    rows = run(args.quick, args.repeat)
    print(f"{'kernel':<22} {'python [s]':>12} {'cython [s]':>12} {'speedup':>9} {'rel diff':>10}")
    for r in rows:
        print(f"{r['kernel']:<22} {r['python_s']:12.5f} {r['cython_s']:12.5f} {r['speedup']:9.2f} {r['rel_diff']:10.2e}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
