"""Hardy-Littlewood, shifted and Peetre maximal functions on the periodic grid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .grid import Grid, SampledFunction, Weight, lp_norm_values
from .lp_decomp import LPDecomposition
from .weights import CubeLattice, block_sums, window_sums

PEETRE_CUTOFF = 1e-6
DENSE_OFFSETS = 64
RADII_PER_OCTAVE = 64


@dataclass(frozen=True)
class ShiftSpec:
    """Displacement of the averaging cube, in units of its side length."""

    z: tuple

    def __post_init__(self):
        z = tuple(float(c) for c in np.atleast_1d(self.z))
        if not all(math.isfinite(c) for c in z):
            raise ValueError("shift components must be finite")
        object.__setattr__(self, "z", z)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.z))


@dataclass(frozen=True)
class PeetreSpec:
    j: int
    lam: float
    cutoff: float = PEETRE_CUTOFF

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("Peetre exponent must be positive")
        if not 0 < self.cutoff < 1:
            raise ValueError("cutoff must lie in (0, 1)")


def maximal_lattice(grid: Grid) -> CubeLattice:
    """Default cube family for maximal functions: dyadic down to single cells, wrapping."""
    return CubeLattice(grid, min_side=1, wrap=True)


def _expand_blocks(avg: np.ndarray, side: int) -> np.ndarray:
    out = avg
    for axis in range(avg.ndim):
        out = np.repeat(out, side, axis=axis)
    return out


def _sliding_max(A: np.ndarray, side: int) -> np.ndarray:
    """``out[x] = max A[start]`` over starts of cubes of ``side`` cells containing ``x``."""
    m = ndimage.maximum_filter(A, size=side, mode="wrap")
    c = (side - 1) // 2
    return np.roll(m, (c,) * A.ndim, axis=tuple(range(A.ndim)))


def _shift_cells(z: Sequence[float], side: int, dim: int) -> tuple:
    z = tuple(z)
    if len(z) == 1 and dim == 2:
        z = (z[0], z[0])
    if len(z) != dim:
        raise ValueError(f"shift has {len(z)} components, grid has dim {dim}")
    return tuple(int(round(c * side)) for c in z)


def _maximal(a: np.ndarray, grid: Grid, lattice: CubeLattice, z: Sequence[float]) -> np.ndarray:
    lattice = lattice.with_wrap(True)
    axes = tuple(range(grid.dim))
    best = np.zeros(a.shape)
    for side in lattice.levels:
        off = _shift_cells(z, side, grid.dim)
        cells = side ** grid.dim
        if lattice.exhaustive:
            A = window_sums(a, side, True) / cells
            A = np.roll(A, tuple(-o for o in off), axis=axes)
            best = np.maximum(best, _sliding_max(A, side))
            continue
        for shift in lattice.shifts(side):
            rolled = np.roll(a, tuple(-o for o in off), axis=axes)
            avg = block_sums(rolled, side, shift, True) / cells
            full = _expand_blocks(avg, side)
            best = np.maximum(best, np.roll(full, (shift,) * grid.dim, axis=axes))
    return best


def hl_maximal(f: SampledFunction, lattice: Optional[CubeLattice] = None) -> SampledFunction:
    """Max over lattice cubes containing ``x`` of the average of ``|f|``."""
    lattice = lattice or maximal_lattice(f.grid)
    return SampledFunction(f.grid, _maximal(np.abs(f.values), f.grid, lattice, (0.0,) * f.grid.dim))


def shifted_maximal(f: SampledFunction, z, lattice: Optional[CubeLattice] = None) -> SampledFunction:
    """Max over cubes ``Q`` containing ``x`` of the average of ``|f|`` over ``Q + z l(Q)``.

    ``z`` is rounded to whole cells per cube size; cubes wrap periodically.
    """
    lattice = lattice or maximal_lattice(f.grid)
    spec = z if isinstance(z, ShiftSpec) else ShiftSpec(z)
    return SampledFunction(f.grid, _maximal(np.abs(f.values), f.grid, lattice, spec.z))


def maximal_power_mean(values: np.ndarray, grid: Grid, r: float,
                       lattice: Optional[CubeLattice] = None) -> np.ndarray:
    """``(M(|g|^r))^(1/r)`` pointwise."""
    lattice = lattice or maximal_lattice(grid)
    return _maximal(np.abs(values) ** r, grid, lattice, (0.0,) * grid.dim) ** (1.0 / r)


def shifted_operator_norm_probe(z, w: Optional[Weight], p: float,
                                probes: Iterable[SampledFunction],
                                lattice: Optional[CubeLattice] = None) -> float:
    """Largest ``||M^z g||_{L_p(w)} / ||g||_{L_p(w)}`` over the probes (a lower bound)."""
    best = 0.0
    count = 0
    for g in probes:
        count += 1
        den = lp_norm_values(g.values, g.grid, p, w)
        if den == 0:
            continue
        num = lp_norm_values(shifted_maximal(g, z, lattice).values, g.grid, p, w)
        best = max(best, num / den)
    if count == 0:
        raise ValueError("probe family is empty")
    return best


# ---------------------------------------------------------------------------
# Peetre maximal functions
# ---------------------------------------------------------------------------

def peetre_sup(values: np.ndarray, grid: Grid, scale: float, lam: float,
               cutoff: float = PEETRE_CUTOFF, dense: int = DENSE_OFFSETS,
               per_octave: int = RADII_PER_OCTAVE) -> np.ndarray:
    """``max_y |g(x - y)| (1 + scale |y|)^(-lam)`` over grid offsets.

    Offsets whose decay factor falls below ``cutoff`` are skipped; ``|y|`` is the
    torus distance.  In 1D offsets up to ``dense`` cells are scanned exactly;
    farther ones are grouped into geometric shells of ``per_octave`` radii per
    octave, each shell charged with the decay at its outer radius.  The result
    is a lower bound within a factor ``2^(lam/per_octave)`` of the exact
    discrete sup.  In 2D every offset is scanned.
    """
    a = np.abs(values)
    h = grid.spacing
    reach = (cutoff ** (-1.0 / lam) - 1.0) / scale
    kmax = int(min(grid.N // 2, math.floor(reach / h)))

    def kern(dist):
        return (1.0 + scale * dist) ** (-lam)

    if grid.dim == 2:
        best = a.copy()
        for k1 in range(-kmax, kmax + 1):
            for k2 in range(-kmax, kmax + 1):
                if k1 == 0 and k2 == 0:
                    continue
                dist = h * math.hypot(k1, k2)
                if dist > reach:
                    continue
                best = np.maximum(best, kern(dist) * np.roll(a, (k1, k2), axis=(0, 1)))
        return best

    best = a.copy()
    kd = min(dense, kmax)
    for k in range(1, kd + 1):
        c = kern(k * h)
        best = np.maximum(best, c * np.maximum(np.roll(a, k), np.roll(a, -k)))
    if kmax > kd:
        radii = sorted({int(math.ceil(kd * 2.0 ** (i / per_octave)))
                        for i in range(1, int(per_octave * math.log2(kmax / kd)) + 2)})
        for rad in radii:
            rad = min(rad, kmax)
            win = ndimage.maximum_filter1d(a, size=2 * rad + 1, mode="wrap")
            best = np.maximum(best, kern(rad * h) * win)
            if rad == kmax:
                break
    return best


def peetre_maximal(decomp: LPDecomposition, spec: PeetreSpec) -> SampledFunction:
    """``M*_{j,lam} f(x) = sup_y |Delta_j f(x - y)| / (1 + 2^j |y|)^lam``."""
    band = decomp.band(spec.j)
    vals = peetre_sup(band.values, band.grid, 2.0 ** spec.j, spec.lam, spec.cutoff)
    return SampledFunction(band.grid, vals)


def peetre_maximal_low(decomp: LPDecomposition, lam: float,
                       cutoff: float = PEETRE_CUTOFF) -> SampledFunction:
    """``M^{0,*}_lam f(x) = sup_y |S_0 f(x - y)| / (1 + |y|)^lam``."""
    if not lam > 0:
        raise ValueError("Peetre exponent must be positive")
    s0 = decomp.s0
    return SampledFunction(s0.grid, peetre_sup(s0.values, s0.grid, 1.0, lam, cutoff))
