"""``wfp-lab`` command line: scenario dispatch and artifact writing."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, fourier
from . import config as cfgmod
from . import density as dm
from . import io
from .errors import ConfigError, DivergenceError, InvariantError, WfpError
from .grid import form_for, mass
from .propagator import displaced_gaussian, evolve, fit_decay_rate

log = logging.getLogger("wfplab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_INVARIANT = 0, 1, 2, 3, 4


def _thread_count(arg: int | None, cfg_threads: int) -> int:
    if arg:
        return arg
    if cfg_threads:
        return cfg_threads
    env = os.environ.get("WFP_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"WFP_LAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_relax(cfg, out: Path) -> int:
    grid = cfg.grid()
    spec = cfg.potential()
    pcfg = cfg.propagator()
    echo = cfg.echo()
    w0 = displaced_gaussian(grid, cfg["relax.shift"], cfg["relax.direction"])
    ref = None
    if spec.active and spec.lam != 0.0:
        from .steady import fixed_point_solve

        ref = fixed_point_solve(spec, grid, m=cfg["m"], tol=cfg["steady.tol"], backend=cfg["steady.backend"]).w_inf
    rep = evolve(w0, pcfg, spec, reference=ref)
    fit = fit_decay_rate(rep, (cfg["relax.fit_start"], cfg["relax.fit_end"]))
    io.write_csv(out / "relax.csv", rep.COLUMNS, rep.rows(), echo)
    io.write_json(out / "relax.json", {"fit": fit, "mass_drift": rep.mass_drift(),
                                       "final_h_distance_trunc": rep.h_distance_trunc[-1]}, echo)
    if cfg["relax.snapshots"]:
        io.write_field(out / "w_initial.wfpf", w0, echo)
        io.write_field(out / "w_final.wfpf", rep.final, echo)
    log.info("relax: fitted rate %.6f on [%g, %g]", fit["rate"], *fit["window"])
    return EXIT_OK


def run_steady(cfg, out: Path) -> int:
    from .steady import fixed_point_solve

    grid = cfg.grid()
    spec = cfg.potential()
    echo = cfg.echo()
    rep = fixed_point_solve(spec, grid, m=cfg["m"], tol=cfg["steady.tol"], max_iter=cfg["steady.max_iter"],
                            backend=cfg["steady.backend"])
    summary = rep.summary()
    if cfg["steady.compare_backends"]:
        other = "semigroup" if rep.backend == "krylov" else "krylov"
        rep2 = fixed_point_solve(spec, grid, m=cfg["m"], tol=cfg["steady.tol"], max_iter=cfg["steady.max_iter"],
                                 backend=other)
        from .grid import norm_Hm

        summary["cross_backend_rel"] = norm_Hm(rep.w_inf - rep2.w_inf, cfg["m"]) / norm_Hm(rep.w_inf, cfg["m"])
    io.write_field(out / "w_inf.wfpf", rep.w_inf, echo)
    if grid.d == 1:
        rho = dm.wigner_to_rho(rep.w_inf)
        mn, neg = dm.positivity_spectrum(rho)
        summary["density_matrix"] = {
            "trace": dm.trace_of(rho), "hermiticity": dm.hermiticity_error(rho), "min_eigenvalue": mn,
            "negative_mass": neg, "trace_norm": dm.trace_norm(rho), "t2_norm": dm.t2_norm(rho),
            "t2_relation_rel_err": dm.t2_relation_error(rho, rep.w_inf),
        }
        io.write_kernel(out / "rho_inf.wfpr", rho, grid, echo)
    io.write_json(out / "steady.json", summary, echo)
    log.info("steady: %d iterations, residual %.3e, mass %.12f", rep.iterations, rep.final_residual, mass(rep.w_inf))
    return EXIT_OK


def run_spectrum(cfg, out: Path) -> int:
    from .spectral import assemble_generator, coarse_grid, eigs_rightmost, kernel_residual, verify_gap

    echo = cfg.echo()
    grid = coarse_grid(cfg["spectrum.n"], cfg["spectrum.x_max"], cfg["spectrum.xi_max"])
    H = assemble_generator(grid)
    ev = eigs_rightmost(H, cfg["spectrum.k"])
    gap = verify_gap(ev, form_for(1).sigma)
    io.write_csv(out / "spectrum.csv", ("re", "im"), [(e.real, e.imag) for e in ev], echo)
    io.write_json(out / "spectrum.json", {"gap": gap.as_dict(), "kernel_residual": kernel_residual(H, grid),
                                          "eigenvalues": ev}, echo)
    log.info("spectrum: second eigenvalue real part %.6f, gap check %s", gap.second_re, gap.passed)
    return EXIT_OK if gap.passed else EXIT_INVARIANT


def run_constants(cfg, out: Path) -> int:
    from .constants import compute_constants

    tc = compute_constants(m=cfg["m"], d=cfg["grid.d"], gamma_tilde=cfg["gamma_tilde"], spec=cfg.potential()
                           if cfg["potential.kind"] != "none" else None,
                           estimate_gamma=cfg["constants.estimate_gamma"], estimate_l1=cfg["constants.estimate_l1"])
    io.write_json(out / "constants.json", tc.as_dict(), cfg.echo())
    log.info("constants: sigma=%.12f beta_m=%g", tc.sigma, tc.beta_m)
    return EXIT_OK


def run_selftest(cfg, out: Path) -> int:
    from .selftest import Context, run_all

    results = run_all(Context(cfg.grid(), cfg["m"]), echo=print)
    io.write_json(out / "selftest.json", {
        "passed": all(r.passed for r in results),
        "criteria": [{"number": r.number, "name": r.name, "passed": r.passed, "seconds": r.seconds,
                      "details": r.details} for r in results],
    }, cfg.echo())
    n_ok = sum(r.passed for r in results)
    print(f"selftest: {n_ok}/{len(results)} passed")
    return EXIT_OK if n_ok == len(results) else EXIT_INVARIANT


SCENARIO_RUNNERS = {
    "relax": run_relax, "steady": run_steady, "spectrum": run_spectrum, "constants": run_constants,
    "selftest": run_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wfp-lab", description="Wigner-Fokker-Planck numerical lab")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--scenario", choices=cfgmod.SCENARIOS)
    p.add_argument("--output-dir")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")
    p.add_argument("--verbose", "-v", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = cfgmod.load(args.config, args.override, args.scenario, args.output_dir)
        nthreads = _thread_count(args.threads, cfg["threads"])
        out = Path(cfg["output_dir"])
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output_dir {str(out)!r} is not writable: {exc}") from None
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output_dir {str(out)!r} is not writable")
        np.random.seed(cfg["seed"])
        fourier.set_workers(nthreads)
        with threadpool_limits(limits=nthreads):
            return SCENARIO_RUNNERS[cfg.scenario](cfg, out)
    except ConfigError as exc:
        print(f"wfp-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"wfp-lab: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except InvariantError as exc:
        print(f"wfp-lab: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except WfpError as exc:
        print(f"wfp-lab: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
