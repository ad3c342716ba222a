"""Binary field/kernel dumps, CSV and JSON writers.

Binary layout (little-endian): 4-byte magic, u32 format version, u32 d, n_x, n_xi,
f64 x_max, xi_max, then row-major f64 samples (complex interleaved for kernels).
The config echo and code version go into a ``<file>.json`` sidecar.
"""
from __future__ import annotations

import json
import math
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .density import DensityMatrixKernel
from .errors import ConfigError
from .grid import GridSpec, WignerField

FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIdd")
MAGIC_FIELD = b"WFPF"
MAGIC_KERNEL = b"WFPR"


def _write_sidecar(path: Path, config: Optional[dict], extra: Optional[dict] = None) -> None:
    meta = {"version": __version__, "format_version": FORMAT_VERSION, "config": config or {}}
    if extra:
        meta.update(extra)
    write_json(Path(str(path) + ".json"), meta)


def write_field(path, w: WignerField, config: Optional[dict] = None) -> Path:
    path = Path(path)
    g = w.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC_FIELD, FORMAT_VERSION, g.d, g.n_x, g.n_xi, g.x_max, g.xi_max))
        fh.write(np.ascontiguousarray(w.values, dtype="<f8").tobytes())
    _write_sidecar(path, config)
    return path


def _read_header(fh, magic: bytes) -> tuple:
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ConfigError("truncated header")
    mg, ver, d, nx, nxi, xm, pm = _HEADER.unpack(raw)
    if mg != magic:
        raise ConfigError(f"bad magic {mg!r}, expected {magic!r}")
    if ver != FORMAT_VERSION:
        raise ConfigError(f"unsupported format version {ver}")
    return d, nx, nxi, xm, pm


def read_field(path) -> WignerField:
    with open(path, "rb") as fh:
        d, nx, nxi, xm, pm = _read_header(fh, MAGIC_FIELD)
        grid = GridSpec(d=d, n_x=nx, n_xi=nxi, x_max=xm, xi_max=pm, check_tail=False)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != grid.size:
        raise ConfigError(f"payload holds {data.size} samples, header implies {grid.size}")
    return WignerField(grid, data.reshape(grid.shape).astype(np.float64))


def write_kernel(path, rho: DensityMatrixKernel, grid: GridSpec, config: Optional[dict] = None) -> Path:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC_KERNEL, FORMAT_VERSION, 1, rho.n, rho.n, grid.x_max, grid.xi_max))
        fh.write(np.ascontiguousarray(rho.entries, dtype="<c16").tobytes())
    _write_sidecar(path, config, {"dx": rho.dx, "x0": rho.x0})
    return path


def read_kernel(path) -> DensityMatrixKernel:
    with open(path, "rb") as fh:
        d, n, _, xm, _ = _read_header(fh, MAGIC_KERNEL)
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != n * n:
        raise ConfigError("kernel payload size does not match header")
    dx = 2.0 * xm / n
    return DensityMatrixKernel(data.reshape(n, n).astype(complex), dx, -xm)


def fmt(v) -> str:
    """Locale-independent float formatting with 17 significant digits."""
    return repr(float(v)) if not math.isfinite(v) else format(float(v), ".17g")


def write_csv(path, columns, rows, config: Optional[dict] = None) -> Path:
    """CSV with a '#'-comment preamble holding the version and the flattened config."""
    path = Path(path)
    lines = [f"# wfplab {__version__}"]
    for k, v in sorted(flatten(config or {}).items()):
        lines.append(f"# {k} = {v}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple:
    cols, rows = None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        if cols is None:
            cols = line.split(",")
        else:
            rows.append([float(v) for v in line.split(",")])
    return cols, np.asarray(rows)


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def jsonable(obj):
    """Recursively convert numpy/complex/non-finite values; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, payload: dict, config: Optional[dict] = None) -> Path:
    path = Path(path)
    body = dict(payload)
    body.setdefault("version", __version__)
    if config is not None:
        body["config"] = config
    path.write_text(json.dumps(jsonable(body), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path
