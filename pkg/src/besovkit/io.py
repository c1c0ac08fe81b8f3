"""Binary and CSV serialization of sampled functions and weights.

Binary layout (little endian)::

    b"BKT1" | dim: uint32 | N: uint32 | R: float64 | payload

The payload is row-major, either ``(re, im)`` float64 pairs for a function or
one float64 cell mass per cell for a weight.  Readers tell the two apart from
the payload length.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .grid import Grid, SampledFunction, Weight

MAGIC = b"BKT1"
_HEADER = struct.Struct("<4sIId")

PathLike = Union[str, Path]


def _header(grid: Grid) -> bytes:
    return _HEADER.pack(MAGIC, grid.dim, grid.N, float(grid.R))


def function_to_bytes(f: SampledFunction) -> bytes:
    pairs = np.empty((f.grid.size, 2), dtype="<f8")
    flat = f.values.reshape(-1)
    pairs[:, 0] = flat.real
    pairs[:, 1] = flat.imag
    return _header(f.grid) + pairs.tobytes()


def weight_to_bytes(w: Weight) -> bytes:
    return _header(w.grid) + np.asarray(w.cell_mass, dtype="<f8").reshape(-1).tobytes()


def _parse(data: bytes):
    if len(data) < _HEADER.size:
        raise ValueError("file too short for a BKT1 header")
    magic, dim, n, R = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    grid = Grid(int(dim), float(R), int(n))
    payload = data[_HEADER.size:]
    count = grid.size
    if len(payload) == 16 * count:
        arr = np.frombuffer(payload, dtype="<f8").reshape(count, 2)
        return "function", grid, arr[:, 0] + 1j * arr[:, 1]
    if len(payload) == 8 * count:
        return "weight", grid, np.frombuffer(payload, dtype="<f8").copy()
    raise ValueError(f"payload of {len(payload)} bytes matches neither layout for {count} cells")


def function_from_bytes(data: bytes) -> SampledFunction:
    kind, grid, arr = _parse(data)
    if kind != "function":
        raise ValueError("file holds a weight, not a function")
    return SampledFunction(grid, arr)


def weight_from_bytes(data: bytes) -> Weight:
    kind, grid, arr = _parse(data)
    if kind != "weight":
        raise ValueError("file holds a function, not a weight")
    return Weight(grid, arr, "custom")


def write_function(path: PathLike, f: SampledFunction) -> None:
    Path(path).write_bytes(function_to_bytes(f))


def read_function(path: PathLike) -> SampledFunction:
    return function_from_bytes(Path(path).read_bytes())


def write_weight(path: PathLike, w: Weight) -> None:
    Path(path).write_bytes(weight_to_bytes(w))


def read_weight(path: PathLike) -> Weight:
    return weight_from_bytes(Path(path).read_bytes())


def export_csv(path: PathLike, obj: Union[SampledFunction, Weight]) -> None:
    """Write index coordinates, sample coordinates and value(s), one row per cell."""
    grid = obj.grid
    idx = np.indices(grid.shape).reshape(grid.dim, -1)
    coords = [c.reshape(-1) for c in grid.coords()]
    names = ["i", "j"][: grid.dim] + ["x", "y"][: grid.dim]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if isinstance(obj, SampledFunction):
            writer.writerow(names + ["re", "im"])
            flat = obj.values.reshape(-1)
            for k in range(grid.size):
                writer.writerow([*idx[:, k].tolist(), *(repr(float(c[k])) for c in coords),
                                 repr(float(flat[k].real)), repr(float(flat[k].imag))])
        else:
            writer.writerow(names + ["mass"])
            flat = np.asarray(obj.cell_mass).reshape(-1)
            for k in range(grid.size):
                writer.writerow([*idx[:, k].tolist(), *(repr(float(c[k])) for c in coords),
                                 repr(float(flat[k]))])


def read_weight_table(path: PathLike, grid: Grid) -> Weight:
    """Custom weight from a CSV of midpoint values.

    Accepts either one value per row in row-major order or the ``export_csv``
    layout with a ``mass`` or ``value`` column.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty weight table")
    header = [h.strip().lower() for h in rows[0]]
    if "value" in header or "mass" in header:
        col = header.index("value") if "value" in header else header.index("mass")
        vals = np.array([float(r[col]) for r in rows[1:]])
        if header[col] == "mass":
            return Weight(grid, vals, "custom")
    else:
        vals = np.array([float(r[-1]) for r in rows])
    return Weight.from_values(grid, vals)
