"""Periodic grids, sampled functions, weights and weighted Lebesgue norms.

Every computation in the package runs on the periodic box ``[-R, R)^dim``
sampled at the ``N`` cell midpoints per axis.  Cell ``k`` on an axis is
``[-R + k*h, -R + (k+1)*h)`` with ``h = 2R/N`` and sample point at its centre,
so the origin is always a cell boundary (``N`` is even) and never a sample.

The frequency lattice is ``pi*k/R`` for ``-N/2 <= k < N/2`` and the discrete
transform is normalised so that the constant 1 maps to a single coefficient
equal to 1 at ``k = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

INF = math.inf


def parse_extended(value) -> float:
    """Read an extended-real exponent (``p`` or ``q``); ``"inf"`` maps to ``INF``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "oo", "+inf"):
            return INF
        value = float(value)
    value = float(value)
    if math.isnan(value):
        raise ValueError("exponent must not be NaN")
    return value


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-R, R)^dim`` with ``N`` points per axis."""

    dim: int
    R: float
    N: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not (isinstance(self.N, (int, np.integer)) and _is_power_of_two(int(self.N))):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if self.N < 16:
            raise ValueError(f"N must be at least 16, got {self.N}")
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ValueError(f"R must be positive and finite, got {self.R}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.R / self.N

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.dim

    @property
    def size(self) -> int:
        return self.N ** self.dim

    @property
    def nyquist(self) -> float:
        """Largest representable frequency magnitude per axis, ``pi*N/(2R)``."""
        return math.pi * self.N / (2.0 * self.R)

    def axis_points(self) -> np.ndarray:
        return -self.R + (np.arange(self.N) + 0.5) * self.spacing

    def axis_edges(self) -> np.ndarray:
        return -self.R + np.arange(self.N + 1) * self.spacing

    def coords(self) -> list:
        """Sample coordinates, one array of shape ``self.shape`` per axis."""
        x = self.axis_points()
        if self.dim == 1:
            return [x]
        return list(np.meshgrid(x, x, indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean norm of the sample coordinates."""
        c = self.coords()
        return np.sqrt(sum(ci * ci for ci in c))

    def axis_frequencies(self) -> np.ndarray:
        """Frequencies ``pi*k/R`` in FFT order."""
        return 2.0 * math.pi * np.fft.fftfreq(self.N, d=self.spacing)

    def frequencies(self) -> list:
        xi = self.axis_frequencies()
        if self.dim == 1:
            return [xi]
        return list(np.meshgrid(xi, xi, indexing="ij"))

    def frequency_norm(self) -> np.ndarray:
        """``|xi|`` on the frequency lattice, FFT ordering."""
        f = self.frequencies()
        return np.sqrt(sum(fi * fi for fi in f))

    def to_cells(self, shift, tol: float = 1e-9) -> tuple:
        """Convert a physical shift vector into integer cell offsets.

        Raises ``ValueError`` when a component is not a multiple of the spacing.
        """
        vec = np.atleast_1d(np.asarray(shift, dtype=float))
        if vec.size == 1 and self.dim == 2:
            raise ValueError("shift must have one component per axis")
        if vec.size != self.dim:
            raise ValueError(f"shift has {vec.size} components, grid has dim {self.dim}")
        cells = vec / self.spacing
        rounded = np.rint(cells)
        if np.any(np.abs(cells - rounded) > tol * np.maximum(1.0, np.abs(cells))):
            raise ValueError(f"shift {vec.tolist()} is not on the grid lattice (spacing {self.spacing})")
        return tuple(int(c) for c in rounded)


def make_grid(dim: int, R: float, N: int) -> Grid:
    return Grid(int(dim), float(R), int(N) if float(N).is_integer() else N)


class SampledFunction:
    """Complex samples of a function on a :class:`Grid`.

    Values are stored with shape ``grid.shape`` and are read-only.
    """

    __slots__ = ("grid", "values", "__weakref__")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=complex)
        if arr.size != grid.size:
            raise ValueError(f"expected {grid.size} values, got {arr.size}")
        arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("sampled values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SampledFunction is immutable")

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "SampledFunction":
        return cls(grid, fn(*grid.coords()))

    @classmethod
    def zeros(cls, grid: Grid) -> "SampledFunction":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def _check(self, other: "SampledFunction"):
        if other.grid != self.grid:
            raise ValueError("functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return SampledFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def __repr__(self):
        return f"SampledFunction(grid={self.grid!r})"


def forward_transform(f: SampledFunction) -> np.ndarray:
    """Discrete Fourier coefficients in FFT order; ``1`` maps to ``c_0 = 1``."""
    return np.fft.fftn(f.values, norm="forward")


def inverse_transform(grid: Grid, coeffs: np.ndarray) -> SampledFunction:
    return SampledFunction(grid, np.fft.ifftn(coeffs, norm="forward"))


def apply_multiplier(f: SampledFunction, multiplier: np.ndarray,
                     coeffs: Optional[np.ndarray] = None) -> np.ndarray:
    """Return the samples of the Fourier multiplier applied to ``f``.

    ``multiplier`` is evaluated on the frequency lattice (FFT ordering).  The
    transform of ``f`` may be passed in to avoid recomputing it.
    """
    if coeffs is None:
        coeffs = forward_transform(f)
    return np.fft.ifftn(coeffs * multiplier, norm="forward")


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def _power_mass_1d(edges: np.ndarray, gamma: float) -> np.ndarray:
    """Exact integral of ``|x|**gamma`` over consecutive intervals of ``edges``.

    The origin must be one of the edges (or outside the range).
    """
    a, b = edges[:-1], edges[1:]
    lo = np.minimum(np.abs(a), np.abs(b))
    hi = np.maximum(np.abs(a), np.abs(b))
    e = gamma + 1.0
    out = np.empty_like(lo)
    at_zero = lo == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        if e == 0.0:
            out[~at_zero] = np.log(hi[~at_zero] / lo[~at_zero])
        else:
            lz, hz = lo[~at_zero], hi[~at_zero]
            # lo^e * expm1(e*log(hi/lo)) / e keeps precision when e is tiny
            out[~at_zero] = np.exp(e * np.log(lz)) * np.expm1(e * np.log(hz / lz)) / e
        if e > 0:
            out[at_zero] = hi[at_zero] ** e / e
        else:
            out[at_zero] = np.inf
    return out


def _quadrant_primitive(X: np.ndarray, Y: np.ndarray, gamma: float) -> np.ndarray:
    """``int_0^X int_0^Y (x^2 + y^2)^(gamma/2) dy dx`` for ``gamma > -2``."""
    k = gamma + 2.0
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    out = np.zeros(np.broadcast(X, Y).shape)
    X, Y = np.broadcast_arrays(X, Y)
    pos = (X > 0) & (Y > 0)
    Xp, Yp = X[pos], Y[pos]
    rho = np.hypot(Xp, Yp)
    s1 = Yp / rho  # sin of the diagonal angle
    s2 = Xp / rho

    def sec_int(s):
        # int_0^theta cos(t)^(-k) dt with sin(theta) = s
        return s * special.hyp2f1(0.5, (k + 1.0) / 2.0, 1.5, s * s)

    out[pos] = (Xp ** k * sec_int(s1) + Yp ** k * sec_int(s2)) / k
    return out


def _power_mass_2d(edges: np.ndarray, gamma: float) -> np.ndarray:
    a, b = edges[:-1], edges[1:]
    lo = np.minimum(np.abs(a), np.abs(b))
    hi = np.maximum(np.abs(a), np.abs(b))
    LX, LY = np.meshgrid(lo, lo, indexing="ij")
    HX, HY = np.meshgrid(hi, hi, indexing="ij")
    if gamma > -2.0:
        G = lambda X, Y: _quadrant_primitive(X, Y, gamma)
        return G(HX, HY) - G(LX, HY) - G(HX, LY) + G(LX, LY)
    # non-integrable at the origin: tensor Gauss-Legendre away from it
    nodes, wts = np.polynomial.legendre.leggauss(12)
    out = np.zeros(LX.shape)
    for xi, wx in zip(nodes, wts):
        xs = LX + (HX - LX) * (xi + 1) / 2
        for yi, wy in zip(nodes, wts):
            ys = LY + (HY - LY) * (yi + 1) / 2
            out += wx * wy * np.hypot(xs, ys) ** gamma
    out *= (HX - LX) * (HY - LY) / 4
    out[(LX == 0) & (LY == 0)] = np.inf
    return out


def power_cell_masses(grid: Grid, gamma: float) -> np.ndarray:
    """Exact cell integrals of ``|x|**gamma`` (``inf`` where not integrable)."""
    edges = grid.axis_edges()
    if grid.dim == 1:
        return _power_mass_1d(edges, gamma)
    return _power_mass_2d(edges, gamma)


class Weight:
    """Positive weight stored as exact per-cell masses.

    ``kind`` is one of ``"constant"``, ``"power"``, ``"custom"``.  Power weights
    ``|x|**alpha`` keep their exponent so that masses of ``w**beta`` can be
    computed in closed form; custom weights keep their midpoint values.
    """

    __slots__ = ("grid", "cell_mass", "kind", "alpha", "level", "_midpoint", "__weakref__")

    def __init__(self, grid: Grid, cell_mass, kind: str = "custom",
                 alpha: Optional[float] = None, level: Optional[float] = None,
                 midpoint_values=None):
        mass = np.array(cell_mass, dtype=float).reshape(grid.shape)
        if not np.all(np.isfinite(mass)) or np.any(mass <= 0):
            raise ValueError("cell masses must be strictly positive and finite")
        if kind not in ("constant", "power", "custom"):
            raise ValueError(f"unknown weight kind {kind!r}")
        if (kind == "power") != (alpha is not None):
            raise ValueError("power exponent is present iff kind == 'power'")
        mass.setflags(write=False)
        mid = None
        if midpoint_values is not None:
            mid = np.array(midpoint_values, dtype=float).reshape(grid.shape)
            mid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "cell_mass", mass)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "alpha", None if alpha is None else float(alpha))
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "_midpoint", mid)

    def __setattr__(self, name, value):
        raise AttributeError("Weight is immutable")

    @classmethod
    def constant(cls, grid: Grid, c: float = 1.0) -> "Weight":
        if not c > 0:
            raise ValueError("constant weight must be positive")
        return cls(grid, np.full(grid.shape, c * grid.cell_volume), "constant", level=float(c))

    @classmethod
    def power(cls, grid: Grid, alpha: float) -> "Weight":
        """The weight ``|x|**alpha`` with exact cell masses."""
        mass = power_cell_masses(grid, alpha)
        if not np.all(np.isfinite(mass)):
            raise ValueError(f"|x|^{alpha} is not locally integrable in dim {grid.dim}")
        return cls(grid, mass, "power", alpha=alpha)

    @classmethod
    def from_values(cls, grid: Grid, values) -> "Weight":
        """Custom weight from midpoint values (mass = value * cell volume)."""
        v = np.array(values, dtype=float).reshape(grid.shape)
        return cls(grid, v * grid.cell_volume, "custom", midpoint_values=v)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "Weight":
        return cls.from_values(grid, fn(*grid.coords()))

    @property
    def total_mass(self) -> float:
        return float(self.cell_mass.sum())

    def power_masses(self, beta: float) -> np.ndarray:
        """Cell masses of ``w**beta``.

        Closed form for constant and power weights, midpoint rule otherwise.
        May contain ``inf`` when ``w**beta`` is not integrable on a cell.
        """
        if beta == 1.0:
            return np.asarray(self.cell_mass)
        if self.kind == "constant":
            return np.full(self.grid.shape, self.level ** beta * self.grid.cell_volume)
        if self.kind == "power":
            return power_cell_masses(self.grid, self.alpha * beta)
        with np.errstate(over="ignore", divide="ignore"):
            return self.midpoint_values() ** beta * self.grid.cell_volume

    def midpoint_values(self) -> np.ndarray:
        if self._midpoint is not None:
            return self._midpoint
        return self.cell_mass / self.grid.cell_volume

    def rebuild(self, grid: Grid) -> "Weight":
        """Same analytic weight on another grid (constant and power kinds only)."""
        if self.kind == "constant":
            return Weight.constant(grid, self.level)
        if self.kind == "power":
            return Weight.power(grid, self.alpha)
        raise ValueError("custom weights cannot be rebuilt on another grid")

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "power":
            d["alpha"] = self.alpha
        if self.kind == "constant":
            d["level"] = self.level
        return d

    def __repr__(self):
        return f"Weight({self.describe()}, grid={self.grid!r})"


def lp_norm_values(values: np.ndarray, grid: Grid, p: float,
                   weight: Optional[Weight] = None) -> float:
    """Weighted ``L_p`` norm of pointwise values on ``grid``.

    ``weight=None`` means Lebesgue measure.  For ``p = inf`` the weight is
    ignored and the maximum modulus is returned.
    """
    a = np.abs(values)
    if p == INF:
        return float(a.max()) if a.size else 0.0
    mass = grid.cell_volume if weight is None else weight.cell_mass
    if p == 2.0:
        s = np.sum(a * a * mass)
    else:
        s = np.sum(a ** p * mass)
    return float(s ** (1.0 / p))


def weighted_lp_norm(f: SampledFunction, w: Optional[Weight], p: float) -> float:
    """``(sum_cells |f|^p * cell_mass)^(1/p)``, or ``max|f|`` for ``p = inf``."""
    p = parse_extended(p)
    if not p > 1 and p != 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if w is not None and w.grid != f.grid:
        raise ValueError("function and weight live on different grids")
    return lp_norm_values(f.values, f.grid, p, w)


# ---------------------------------------------------------------------------
# translation and dilation
# ---------------------------------------------------------------------------

def shift_values(values: np.ndarray, cells: Sequence[int]) -> np.ndarray:
    """``out[i] = values[i + cells]`` with periodic wrap, i.e. ``g(x) = f(x + h)``."""
    return np.roll(values, tuple(-int(c) for c in cells), axis=tuple(range(values.ndim)))


def translate(f: SampledFunction, shift) -> SampledFunction:
    """Circular shift ``x -> f(x - shift)``; ``shift`` must lie on the lattice."""
    cells = f.grid.to_cells(shift)
    return SampledFunction(f.grid, shift_values(f.values, [-c for c in cells]))


def _support_extent_cells(values: np.ndarray, rel: float = 1e-12) -> int:
    a = np.abs(values)
    m = a.max()
    if m == 0:
        return 0
    extent = 0
    for axis in range(a.ndim):
        other = tuple(i for i in range(a.ndim) if i != axis)
        prof = a.max(axis=other) if other else a
        idx = np.nonzero(prof > rel * m)[0]
        extent = max(extent, int(idx[-1] - idx[0] + 1))
    return extent


def _trig_eval_axis(coeffs: np.ndarray, grid: Grid, pts: np.ndarray, axis: int) -> np.ndarray:
    """Evaluate the trigonometric interpolant along ``axis`` at points ``pts``."""
    N = grid.N
    xi = grid.axis_frequencies()
    c = np.moveaxis(coeffs, axis, 0)
    nyq = N // 2
    x0 = grid.axis_points()[0]
    out = np.empty((pts.size,) + c.shape[1:], dtype=complex)
    # chunked so the phase matrix stays small on large grids
    for start in range(0, pts.size, 256):
        sl = slice(start, start + 256)
        phase = np.exp(1j * np.outer(pts[sl] - x0, xi))
        # symmetric treatment of the Nyquist mode keeps real data real
        phase[:, nyq] = np.cos(xi[nyq] * (pts[sl] - x0))
        out[sl] = np.tensordot(phase, c, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def dilate(f: SampledFunction, n: int, p: float, min_cells: int = 8) -> SampledFunction:
    """``x -> 2^(n*dim/p) f(2^n x)`` resampled on the same grid.

    Off-lattice values come from trigonometric interpolation.  Raises
    ``ValueError`` if the dilated support would span fewer than ``min_cells``
    cells or leave the box.
    """
    p = parse_extended(p)
    n = int(n)
    grid = f.grid
    if n == 0:
        return f
    extent = _support_extent_cells(f.values)
    if extent and extent * 2.0 ** (-n) < min_cells:
        raise ValueError(f"dilation 2^{n} leaves support resolved by fewer than {min_cells} cells")
    if n < 0 and extent * 2.0 ** (-n) > grid.N:
        raise ValueError(f"dilation 2^{n} pushes the support out of the box")
    scale = 2.0 ** n
    coeffs = forward_transform(f)
    pts = scale * grid.axis_points()
    # points outside the box: the function is assumed supported inside it
    inside = np.abs(pts) < grid.R
    vals = coeffs
    for axis in range(grid.dim):
        vals = _trig_eval_axis(vals, grid, pts, axis)
        mask_shape = [1] * grid.dim
        mask_shape[axis] = grid.N
        vals = vals * inside.reshape(mask_shape)
    norm = 1.0 if p == INF else 2.0 ** (n * grid.dim / p)
    return SampledFunction(grid, norm * vals)


def dilate_callable(fn: Callable, n: float, p: float, dim: int) -> Callable:
    """Analytic counterpart of :func:`dilate` acting on a callable."""
    p = parse_extended(p)
    s = 2.0 ** n
    norm = 1.0 if p == INF else 2.0 ** (n * dim / p)
    return lambda *x: norm * fn(*(s * xi for xi in x))
