"""Truncated phase-space grid, Wigner fields, the quadratic form A and weighted norms.

Arrays are laid out with the d position axes first and the d velocity axes last,
so a d = 1 field has shape (n_x, n_xi) and a d = 2 field (n_x, n_x, n_xi, n_xi).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc

from . import kernels
from .errors import ConfigError, GridMismatchError, InvariantError

TAIL_TOL = 1e-10
H_TRUNC_CUT = 20.0


@dataclass(frozen=True)
class QuadraticFormA:
    """A(y) = yᵀ Q y with Q = kron(pair, I_d) in (x, ξ) block ordering."""

    d: int = 1
    pair: tuple = ((0.25, 0.25), (0.25, 0.75))

    @functools.cached_property
    def matrix(self) -> np.ndarray:
        return np.kron(np.asarray(self.pair, dtype=float), np.eye(self.d))

    @functools.cached_property
    def hessian(self) -> np.ndarray:
        return 2.0 * self.matrix

    @functools.cached_property
    def c(self) -> float:
        # ∫ exp(-yᵀQy) dy over R^{2d} = π^d / sqrt(det Q)
        return math.sqrt(np.linalg.det(self.matrix)) / math.pi**self.d

    @functools.cached_property
    def sigma(self) -> float:
        return float(np.linalg.eigvalsh(self.hessian)[0])

    @functools.cached_property
    def covariance(self) -> np.ndarray:
        """Covariance of the Gaussian μ = c e^{-A}."""
        return np.linalg.inv(self.hessian)

    @property
    def laplacian(self) -> float:
        return float(np.trace(self.hessian))

    def value(self, ys: Sequence[np.ndarray]) -> np.ndarray:
        Q = self.matrix
        n = len(ys)
        out = 0.0
        for i in range(n):
            out = out + Q[i, i] * ys[i] * ys[i]
            for j in range(i + 1, n):
                if Q[i, j] != 0.0:
                    out = out + 2.0 * Q[i, j] * ys[i] * ys[j]
        return out

    def gradient(self, ys: Sequence[np.ndarray]) -> list:
        Q = self.matrix
        return [sum(2.0 * Q[i, j] * ys[j] for j in range(len(ys)) if Q[i, j] != 0.0) for i in range(len(ys))]

    def drift(self, ys: Sequence[np.ndarray]) -> list:
        """Transport field b = (-ξ, x + 2ξ) of the divergence form L w = Δw + div(b w)."""
        d = self.d
        xs, ps = ys[:d], ys[d:]
        return [-p for p in ps] + [x + 2.0 * p for x, p in zip(xs, ps)]

    def rotation(self, ys: Sequence[np.ndarray]) -> list:
        """F = b - ∇A; satisfies F·∇A = 0 and div F = 0."""
        return [b - g for b, g in zip(self.drift(ys), self.gradient(ys))]


DEFAULT_A = QuadraticFormA(1)
DEFAULT_A2 = QuadraticFormA(2)


def form_for(d: int) -> QuadraticFormA:
    return DEFAULT_A if d == 1 else DEFAULT_A2 if d == 2 else QuadraticFormA(d)


def _split_point(x, xi, d):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if d == 1:
        return [x, xi]
    return [x[..., i] for i in range(d)] + [xi[..., i] for i in range(d)]


def eval_A(x, xi, d: int = 1):
    """A(x, ξ) = (|x|² + 2x·ξ + 3|ξ|²)/4; for d > 1 the last axis holds components."""
    return form_for(d).value(_split_point(x, xi, d))


def eval_mu(x, xi, d: int = 1):
    form = form_for(d)
    return form.c * np.exp(-form.value(_split_point(x, xi, d)))


def eval_F(x, xi, d: int = 1):
    """Rotation field ½(-x - 3ξ, x + ξ), stacked along a new last axis."""
    return np.stack(np.broadcast_arrays(*form_for(d).rotation(_split_point(x, xi, d))), axis=-1)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-x_max, x_max)^d × [-xi_max, xi_max)^d."""

    d: int = 1
    n_x: int = 128
    n_xi: int = 128
    x_max: float = 12.0
    xi_max: float = 8.0
    check_tail: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigError(f"d must be 1 or 2, got {self.d}")
        for name in ("n_x", "n_xi"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ConfigError(f"{name} must be an even integer >= 8, got {n}")
        if not (self.x_max > 0 and self.xi_max > 0):
            raise ConfigError("x_max and xi_max must be positive")
        if self.check_tail and self.mu_tail() >= TAIL_TOL:
            raise ConfigError(
                f"box too small: mass of mu outside the box is {self.mu_tail():.3e} (limit {TAIL_TOL:g})"
            )

    @property
    def dx(self) -> float:
        return 2.0 * self.x_max / self.n_x

    @property
    def dxi(self) -> float:
        return 2.0 * self.xi_max / self.n_xi

    @property
    def cell(self) -> float:
        return (self.dx * self.dxi) ** self.d

    @property
    def shape(self) -> tuple:
        return (self.n_x,) * self.d + (self.n_xi,) * self.d

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def x(self) -> np.ndarray:
        return -self.x_max + self.dx * np.arange(self.n_x)

    @property
    def xi(self) -> np.ndarray:
        return -self.xi_max + self.dxi * np.arange(self.n_xi)

    def axis_values(self, axis: int) -> np.ndarray:
        return self.x if axis < self.d else self.xi

    def spacing(self, axis: int) -> float:
        return self.dx if axis < self.d else self.dxi

    def half_width(self, axis: int) -> float:
        return self.x_max if axis < self.d else self.xi_max

    def coords(self) -> list:
        """Open-mesh coordinate arrays, one per axis, broadcastable to ``shape``."""
        nd = 2 * self.d
        out = []
        for ax in range(nd):
            sh = [1] * nd
            sh[ax] = self.shape[ax]
            out.append(self.axis_values(ax).reshape(sh))
        return out

    def mu_tail(self) -> float:
        """Mass of μ outside the box, from its exact Gaussian marginals (union bound)."""
        cov = form_for(self.d).covariance
        tail = 0.0
        for ax in range(2 * self.d):
            tail += float(erfc(self.half_width(ax) / math.sqrt(2.0 * cov[ax, ax])))
        return tail

    def with_(self, **kw) -> "GridSpec":
        vals = dict(d=self.d, n_x=self.n_x, n_xi=self.n_xi, x_max=self.x_max, xi_max=self.xi_max)
        vals.update(kw)
        return GridSpec(**vals)


@functools.lru_cache(maxsize=16)
def _A_cached(grid: GridSpec) -> np.ndarray:
    a = np.broadcast_to(form_for(grid.d).value(grid.coords()), grid.shape).copy()
    a.flags.writeable = False
    return a


def A_values(grid: GridSpec) -> np.ndarray:
    return _A_cached(grid)


@functools.lru_cache(maxsize=16)
def _mu_cached(grid: GridSpec) -> np.ndarray:
    m = form_for(grid.d).c * np.exp(-A_values(grid))
    m.flags.writeable = False
    return m


def mu_values(grid: GridSpec) -> np.ndarray:
    return _mu_cached(grid)


@functools.lru_cache(maxsize=32)
def _weight_cached(grid: GridSpec, m: int) -> np.ndarray:
    w = 1.0 + A_values(grid) ** m
    w.flags.writeable = False
    return w


def hm_weight(grid: GridSpec, m: int) -> np.ndarray:
    """ν_m⁻¹ = 1 + A^m sampled on the grid."""
    if m < 0:
        raise ConfigError("m must be >= 0")
    return _weight_cached(grid, int(m))


class WignerField:
    """Real samples of w(x, ξ) on a GridSpec."""

    __slots__ = ("grid", "values")
    __array_priority__ = 100

    def __init__(self, grid: GridSpec, values):
        arr = np.asarray(values)
        if np.iscomplexobj(arr):
            raise InvariantError("WignerField values must be real")
        arr = np.asarray(arr, dtype=np.float64)
        if arr.size != grid.size:
            raise GridMismatchError(f"expected {grid.size} samples, got {arr.size}")
        arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise InvariantError("WignerField contains non-finite samples")
        self.grid = grid
        self.values = arr

    def __repr__(self):
        return f"WignerField({self.grid!r}, mass={mass(self):.6g})"

    def _other(self, other):
        if isinstance(other, WignerField):
            if other.grid != self.grid:
                raise GridMismatchError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return WignerField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return WignerField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return WignerField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return WignerField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, s):
        return WignerField(self.grid, self.values / s)

    def __neg__(self):
        return WignerField(self.grid, -self.values)

    def copy(self) -> "WignerField":
        return WignerField(self.grid, self.values.copy())


def sample(grid: GridSpec, func: Callable) -> WignerField:
    """Sample ``func(*coords)`` on the grid (coords are open-mesh arrays)."""
    return WignerField(grid, np.broadcast_to(func(*grid.coords()), grid.shape))


def mu_field(grid: GridSpec) -> WignerField:
    return WignerField(grid, mu_values(grid).copy())


def zeros(grid: GridSpec) -> WignerField:
    return WignerField(grid, np.zeros(grid.shape))


def shifted_mu(grid: GridSpec, shift) -> WignerField:
    """μ translated by ``shift`` (length 2d vector in (x, ξ) ordering)."""
    form = form_for(grid.d)
    ys = [y - s for y, s in zip(grid.coords(), np.atleast_1d(shift))]
    return WignerField(grid, np.broadcast_to(form.c * np.exp(-form.value(ys)), grid.shape))


def _same(f: WignerField, g: WignerField):
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")


def mass(w: WignerField) -> float:
    """Midpoint-rule integral of w over the box."""
    return float(np.sum(w.values)) * w.grid.cell


def l2_norm(w: WignerField) -> float:
    return math.sqrt(float(np.sum(w.values * w.values)) * w.grid.cell)


def inner_Hm(f: WignerField, g: WignerField, m: int) -> float:
    """∬ f g (1 + A^m) dx dξ."""
    _same(f, g)
    return float(np.sum(f.values * g.values * hm_weight(f.grid, m))) * f.grid.cell


def norm_Hm(w: WignerField, m: int) -> float:
    return math.sqrt(max(inner_Hm(w, w, m), 0.0))


def _log_terms(w: WignerField, mask=None) -> np.ndarray:
    grid = w.grid
    vals = w.values
    A = A_values(grid)
    nz = vals != 0.0
    if mask is not None:
        nz &= mask
    logc = math.log(form_for(grid.d).c)
    return 2.0 * np.log(np.abs(vals[nz])) + A[nz] - logc + math.log(grid.cell)


def _norm_from_logs(logs: np.ndarray) -> float:
    if logs.size == 0:
        return 0.0
    if not np.all(np.isfinite(logs)):
        raise OverflowError("H-norm contribution not representable even in log domain")
    total = kernels.log_sum_exp(logs)
    if total / 2.0 > 709.0:
        raise OverflowError(f"H-norm overflows double precision (log ‖w‖² = {total:.1f})")
    return math.exp(0.5 * total)


def norm_H(w: WignerField) -> float:
    """sqrt(∬ |w|² μ⁻¹), accumulated in log domain with compensated summation."""
    return _norm_from_logs(_log_terms(w))


def norm_H_trunc(w: WignerField, a_cut: float = H_TRUNC_CUT) -> float:
    """H-norm restricted to the region A ≤ a_cut, where the weight e^A stays moderate."""
    return _norm_from_logs(_log_terms(w, A_values(w.grid) <= a_cut))


def inner_H_trunc(f: WignerField, g: WignerField, a_cut: float = H_TRUNC_CUT) -> float:
    """∬ f g μ⁻¹ over A ≤ a_cut (direct sum; used for small, well-scaled fields)."""
    _same(f, g)
    grid = f.grid
    A = A_values(grid)
    mask = A <= a_cut
    wgt = np.exp(A[mask]) / form_for(grid.d).c
    return kernels.neumaier_sum(f.values[mask] * g.values[mask] * wgt) * grid.cell


def h_distance_trunc(f: WignerField, g: WignerField, a_cut: float = H_TRUNC_CUT) -> float:
    _same(f, g)
    return norm_H_trunc(f - g, a_cut)


def edge_shell_max(w: WignerField, frac: float = 0.1) -> float:
    """Largest |w| in the outer ``frac`` shell of the box."""
    grid = w.grid
    shell = np.zeros(grid.shape, dtype=bool)
    for ax, y in enumerate(grid.coords()):
        shell |= np.broadcast_to(np.abs(y) >= (1.0 - frac) * grid.half_width(ax), grid.shape)
    return float(np.max(np.abs(w.values[shell]))) if shell.any() else 0.0


def check_edge_decay(w: WignerField, tol: float = 1e-8, frac: float = 0.1) -> float:
    """Raise InvariantError if the field is not below ``tol`` in the outer shell."""
    val = edge_shell_max(w, frac)
    if val > tol:
        raise InvariantError(f"field not decayed at box edge: max |w| in outer shell = {val:.3e} > {tol:g}")
    return val
