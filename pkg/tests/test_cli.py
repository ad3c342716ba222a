import json
import os
import subprocess
import sys

import pytest

from wfplab import cli, io

FAST_RELAX = ["grid.n_x=64", "grid.n_xi=64", "propagator.dt=0.01", "propagator.t_end=2", "relax.fit_start=0.5",
              "relax.fit_end=2"]


def _main(args):
    return cli.main(args)


def _ov(items):
    return [a for kv in items for a in ("--override", kv)]


def test_constants_scenario(tmp_path):
    assert _main(["--scenario", "constants", "--output-dir", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "constants.json").read_text())
    assert d["beta_m"] == 442 and d["delta_m"] is None
    assert d["config"]["scenario"] == "constants"


def test_relax_scenario_artifacts(tmp_path):
    assert _main(["--scenario", "relax", "--output-dir", str(tmp_path), *_ov(FAST_RELAX)]) == 0
    cols, rows = io.read_csv(tmp_path / "relax.csv")
    assert cols == ["t", "mass", "l2_norm", "hm_distance", "h_distance_trunc"]
    assert rows[-1, 0] == pytest.approx(2.0)
    assert io.read_field(tmp_path / "w_final.wfpf").grid.n_x == 64
    fit = json.loads((tmp_path / "relax.json").read_text())["fit"]
    assert fit["rate"] == pytest.approx(1.0, abs=0.05)


def test_steady_scenario(tmp_path):
    ov = ["grid.n_x=64", "grid.n_xi=64", "potential.kind=sinusoidal", "potential.lam=0.01"]
    assert _main(["--scenario", "steady", "--output-dir", str(tmp_path), *_ov(ov)]) == 0
    s = json.loads((tmp_path / "steady.json").read_text())
    assert abs(s["mass"] - 1) < 1e-6 and s["density_matrix"]["min_eigenvalue"] > -1e-4
    assert (tmp_path / "rho_inf.wfpr").is_file()


def test_spectrum_scenario(tmp_path):
    assert _main(["--scenario", "spectrum", "--output-dir", str(tmp_path), "--override", "spectrum.n=32"]) == 0
    d = json.loads((tmp_path / "spectrum.json").read_text())
    assert d["gap"]["passed"]


def test_exit_codes(tmp_path, capsys):
    assert _main(["--scenario", "relax", "--output-dir", str(tmp_path), "--override", "grid.n_x=7"]) == 2
    assert "configuration error" in capsys.readouterr().err
    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.n_x = 64\nnope = 1\n")
    assert _main(["--config", str(bad), "--output-dir", str(tmp_path)]) == 2
    assert "bad.cfg:2" in capsys.readouterr().err
    ov = ["grid.n_x=64", "grid.n_xi=64", "potential.kind=sinusoidal", "potential.lam=50", "steady.max_iter=20"]
    assert _main(["--scenario", "steady", "--output-dir", str(tmp_path), *_ov(ov)]) == 3
    assert "divergence" in capsys.readouterr().err


def test_unwritable_output_dir(tmp_path):
    f = tmp_path / "file"
    f.write_text("")
    assert _main(["--scenario", "constants", "--output-dir", str(f / "sub")]) == 2


def test_thread_resolution(monkeypatch):
    monkeypatch.setenv("WFP_LAB_THREADS", "3")
    assert cli._thread_count(None, 0) == 3
    assert cli._thread_count(2, 0) == 2
    assert cli._thread_count(None, 5) == 5
    monkeypatch.setenv("WFP_LAB_THREADS", "x")
    with pytest.raises(Exception):
        cli._thread_count(None, 0)


def _run_cli(out, args):
    env = {**os.environ, "PYTHONHASHSEED": "0"}
    proc = subprocess.run([sys.executable, "-m", "wfplab", "--output-dir", str(out), *args],
                          capture_output=True, text=True, env=env, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


@pytest.mark.parametrize("scenario,extra", [
    ("relax", FAST_RELAX),
    ("steady", ["grid.n_x=64", "grid.n_xi=64", "potential.kind=sinusoidal", "potential.lam=0.01"]),
])
def test_reruns_are_bitwise_identical(tmp_path, scenario, extra):
    args = ["--scenario", scenario, "--threads", "1", *_ov(extra)]
    a = _run_cli(tmp_path / "a", args)
    b = _run_cli(tmp_path / "b", args)
    assert a.keys() == b.keys() and len(a) >= 2
    for name in a:
        # sidecars and CSV preambles embed the output_dir; compare everything else byte for byte
        if name.endswith(".json") or name.endswith(".csv"):
            ta = a[name].decode().replace(str(tmp_path / "a"), "OUT")
            tb = b[name].decode().replace(str(tmp_path / "b"), "OUT")
            assert ta == tb, name
        else:
            assert a[name] == b[name], name


def test_entry_point_version():
    proc = subprocess.run(["wfp-lab", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("wfp-lab ")
