import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovkit.grid import SampledFunction, Weight, make_grid
from besovkit.io import (export_csv, function_from_bytes, function_to_bytes, read_function, read_weight,
                         read_weight_table, weight_from_bytes, write_function, write_weight)


def test_header_layout():
    g = make_grid(1, 2.5, 16)
    data = function_to_bytes(SampledFunction.zeros(g))
    assert data[:4] == b"BKT1"
    assert struct.unpack_from("<IId", data, 4) == (1, 16, 2.5)
    assert len(data) == 20 + 16 * 16


def test_file_roundtrip(tmp_path):
    g = make_grid(2, 1.0, 16)
    f = SampledFunction.from_callable(g, lambda x, y: np.exp(-x * x) + 1j * y)
    write_function(tmp_path / "f.bkt", f)
    back = read_function(tmp_path / "f.bkt")
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)
    w = Weight.power(g, 0.5)
    write_weight(tmp_path / "w.bkt", w)
    np.testing.assert_array_equal(read_weight(tmp_path / "w.bkt").cell_mass, w.cell_mass)


def test_kind_mismatch_and_corruption():
    g = make_grid(1, 1.0, 16)
    fb = function_to_bytes(SampledFunction.zeros(g))
    with pytest.raises(ValueError):
        weight_from_bytes(fb)
    with pytest.raises(ValueError):
        function_from_bytes(b"XXXX" + fb[4:])
    with pytest.raises(ValueError):
        function_from_bytes(fb[:-3])


def test_csv_export_and_weight_table(tmp_path):
    g = make_grid(1, 1.0, 16)
    w = Weight.power(g, 0.5)
    export_csv(tmp_path / "w.csv", w)
    back = read_weight_table(tmp_path / "w.csv", g)
    np.testing.assert_allclose(back.cell_mass, w.cell_mass, rtol=1e-15)
    vals = np.linspace(1, 2, 16)
    (tmp_path / "v.csv").write_text("\n".join(repr(float(v)) for v in vals) + "\n")
    np.testing.assert_allclose(read_weight_table(tmp_path / "v.csv", g).midpoint_values(), vals)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([1, 2]), st.floats(0.5, 100.0))
def test_bytes_roundtrip_bit_exact(seed, dim, R):
    g = make_grid(dim, R, 16)
    rng = np.random.default_rng(seed)
    f = SampledFunction(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    back = function_from_bytes(function_to_bytes(f))
    assert back.grid == g
    assert back.values.tobytes() == f.values.tobytes()
