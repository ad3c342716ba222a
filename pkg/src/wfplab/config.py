"""Run configuration: flat ``key = value`` text with dotted keys.

``[section]`` headers are accepted as a prefix for the keys that follow, '#' starts a
comment, lists are comma separated. Unknown keys and bad values raise ConfigError
with the offending line number.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .grid import GridSpec
from .potential import PotentialSpec
from .propagator import PropagatorConfig

SCENARIOS = ("relax", "steady", "spectrum", "constants", "selftest")


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none", "auto") else float(s)


# key → (parser, default)
SCHEMA = {
    "scenario": (str, "relax"),
    "seed": (int, 42),
    "m": (int, 4),
    "gamma_tilde": (_opt_float, None),
    "output_dir": (str, "wfp-out"),
    "threads": (int, 0),
    "grid.d": (int, 1),
    "grid.n_x": (int, 128),
    "grid.n_xi": (int, 128),
    "grid.x_max": (float, 12.0),
    "grid.xi_max": (float, 8.0),
    "potential.lam": (float, 0.0),
    "potential.kind": (str, "none"),
    "potential.k0": (_floats, (1.0,)),
    "potential.amp": (float, 1.0),
    "potential.center": (_floats, (0.0,)),
    "potential.width": (float, 1.0),
    "potential.snap": (_bool, True),
    "propagator.dt": (float, 1e-3),
    "propagator.t_end": (float, 10.0),
    "propagator.record_every": (int, 10),
    "propagator.theta_substep": (str, "rk2"),
    "propagator.interpolation": (str, "exact_shear"),
    "propagator.window_frac": (float, 0.05),
    "relax.shift": (float, 1.0),
    "relax.direction": (_floats, (1.0, -1.0)),
    "relax.fit_start": (float, 2.0),
    "relax.fit_end": (float, 8.0),
    "relax.snapshots": (_bool, True),
    "steady.backend": (str, "krylov"),
    "steady.tol": (float, 1e-10),
    "steady.max_iter": (int, 50),
    "steady.compare_backends": (_bool, False),
    "spectrum.n": (int, 48),
    "spectrum.k": (int, 10),
    "spectrum.x_max": (float, 13.0),
    "spectrum.xi_max": (float, 8.0),
    "constants.estimate_gamma": (_bool, False),
    "constants.estimate_l1": (_bool, False),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: v[1] for k, v in SCHEMA.items()})

    def __getitem__(self, key):
        return self.values[key]

    @property
    def scenario(self) -> str:
        return self.values["scenario"]

    def set(self, key: str, raw: str, where: str = "") -> None:
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{where}unknown key {key!r}")
        parser = SCHEMA[key][0]
        try:
            self.values[key] = parser(raw.strip())
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}bad value for {key!r}: {raw.strip()!r} ({exc})") from None

    def validate(self) -> "RunConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self["m"] < 0:
            raise ConfigError("m must be >= 0")
        if self["threads"] < 0:
            raise ConfigError("threads must be >= 0")
        self.grid()
        self.potential()
        self.propagator()
        return self

    def grid(self) -> GridSpec:
        v = self.values
        return GridSpec(d=v["grid.d"], n_x=v["grid.n_x"], n_xi=v["grid.n_xi"], x_max=v["grid.x_max"],
                        xi_max=v["grid.xi_max"])

    def potential(self) -> PotentialSpec:
        v = self.values
        spec = PotentialSpec(lam=v["potential.lam"], kind=v["potential.kind"], d=v["grid.d"], k0=v["potential.k0"],
                             amp=v["potential.amp"], center=v["potential.center"], width=v["potential.width"])
        return spec.snapped(self.grid()) if v["potential.snap"] else spec

    def propagator(self) -> PropagatorConfig:
        v = self.values
        return PropagatorConfig(dt=v["propagator.dt"], t_end=v["propagator.t_end"],
                                record_every=v["propagator.record_every"],
                                theta_substep=v["propagator.theta_substep"],
                                interpolation=v["propagator.interpolation"],
                                window_frac=v["propagator.window_frac"], m=v["m"])

    def echo(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(self.values.items())}

    def copy(self) -> "RunConfig":
        return RunConfig(copy.deepcopy(self.values))


def parse_text(text: str, source: str = "<config>", base: Optional[RunConfig] = None) -> RunConfig:
    cfg = base.copy() if base is not None else RunConfig()
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: "
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"{where}malformed section header {line!r}")
            section = line[1:-1].strip() + "."
            continue
        if "=" not in line:
            raise ConfigError(f"{where}expected 'key = value', got {line!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{where}empty key")
        cfg.set(key if "." in key or not section else section + key, val, where)
    return cfg


def load(path: Optional[str] = None, overrides=(), scenario: Optional[str] = None,
         output_dir: Optional[str] = None) -> RunConfig:
    cfg = RunConfig()
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path!r} not found")
        cfg = parse_text(p.read_text(encoding="utf-8"), str(p))
    for i, ov in enumerate(overrides, start=1):
        if "=" not in ov:
            raise ConfigError(f"--override #{i}: expected key=value, got {ov!r}")
        k, v = ov.split("=", 1)
        cfg.set(k, v, f"--override #{i}: ")
    if scenario:
        cfg.set("scenario", scenario, "--scenario: ")
    if output_dir:
        cfg.set("output_dir", output_dir, "--output-dir: ")
    return cfg.validate()
