import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oamlab import io
from oamlab.fields import (ComplexField2D, Grid2D, ScalarField2D, ScalarField3D,
                           make_cubic_grid)
from oamlab.tomography import ProjectionSet

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(values=arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
@settings(max_examples=25)
def test_oamf_real_round_trip_is_bit_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("o") / "a.oamf"
    io.write_oamf(path, values, (1.5, 2.5), "micrometers")
    back, ext, unit = io.read_oamf(path)
    assert back.tobytes() == values.astype("<f8").tobytes()
    assert ext == (1.5, 2.5) and unit == "micrometers"


def test_oamf_complex_and_3d(tmp_path):
    rng = np.random.default_rng(0)
    c = rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))
    io.write_oamf(tmp_path / "c.oamf", c, (1.0, 2.0), "inverse-micrometers")
    back, _, unit = io.read_oamf(tmp_path / "c.oamf")
    assert back.tobytes() == c.tobytes() and unit == "inverse-micrometers"
    v = rng.random((3, 4, 5))
    io.write_oamf(tmp_path / "v.oamf", v, (1.0, 2.0, 3.0), "atomic-units")
    assert np.array_equal(io.read_oamf(tmp_path / "v.oamf")[0], v)


def test_field_round_trip(tmp_path):
    g = Grid2D(16, 32, 1.0, 2.0)
    f = ComplexField2D(g, np.arange(512).reshape(32, 16) * (1 + 1j))
    io.write_field(tmp_path / "f.oamf", f)
    back = io.read_field(tmp_path / "f.oamf")
    assert back.grid == g and np.array_equal(back.values, f.values)
    g3 = make_cubic_grid(16, 0.5)
    s = ScalarField3D(g3, np.random.default_rng(1).random(g3.shape))
    io.write_field(tmp_path / "s.oamf", s)
    back3 = io.read_field(tmp_path / "s.oamf")
    assert back3.grid == g3 and np.array_equal(back3.values, s.values)


def test_oamf_rejects_corruption(tmp_path):
    p = io.write_oamf(tmp_path / "x.oamf", np.ones((2, 2)), (1, 1), "micrometers")
    data = p.read_bytes()
    (tmp_path / "bad.oamf").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        io.read_oamf(tmp_path / "bad.oamf")
    (tmp_path / "short.oamf").write_bytes(data[:-8])
    with pytest.raises(ValueError):
        io.read_oamf(tmp_path / "short.oamf")
    with pytest.raises(ValueError):
        io.write_oamf(tmp_path / "y.oamf", np.ones((2, 2)), (1,), "micrometers")
    with pytest.raises(ValueError):
        io.write_oamf(tmp_path / "y.oamf", np.ones((2, 2)), (1, 1), "parsecs")


def test_pgm_writers(tmp_path):
    v = np.array([[0.0, 1.0], [2.0, 4.0]])
    io.write_pgm8(tmp_path / "a.pgm", v)
    img = io.read_pgm(tmp_path / "a.pgm")
    # rows flipped so +y is up
    assert img.tolist() == [[128, 255], [0, 64]]
    io.write_pgm16(tmp_path / "b.pgm", v)
    img16 = io.read_pgm(tmp_path / "b.pgm")
    assert img16.dtype.itemsize == 2 and img16.max() == 65535
    io.write_pgm16(tmp_path / "c.pgm", v, log=True)
    logimg = io.read_pgm(tmp_path / "c.pgm")
    assert logimg[1, 0] == 0 and logimg[0, 1] == 65535


def test_binary_mask_pgm_is_black_and_white(tmp_path):
    v = (np.random.default_rng(2).random((8, 8)) > 0.5).astype(float)
    io.write_pgm8(tmp_path / "m.pgm", v)
    assert set(np.unique(io.read_pgm(tmp_path / "m.pgm"))) <= {0, 255}


def test_csv_tables(tmp_path):
    io.write_table_csv(tmp_path / "t.csv", ["a", "b"], [(1, 0.5), (2, 1.25)])
    header, rows = io.read_table_csv(tmp_path / "t.csv")
    assert header == ["a", "b"] and rows == [[1.0, 0.5], [2.0, 1.25]]


def test_mask_contours_enclose_disk(tmp_path):
    g = Grid2D(64, 64, 2.0, 2.0)
    r, _ = g.polar()
    polys = io.mask_contours(ScalarField2D(g, (r <= 1.0).astype(float)))
    assert len(polys) == 1
    radii = np.hypot(polys[0][:, 0], polys[0][:, 1])
    assert np.all(np.abs(radii - 1.0) < 2 * g.dx)
    path = io.write_contours_csv(tmp_path / "c.csv", polys)
    lines = path.read_text().splitlines()
    assert lines[0] == "polygon,x_um,y_um" and len(lines) == len(polys[0]) + 1


def test_projection_stack(tmp_path):
    g = make_cubic_grid(16, 1.0).slice_grid()
    proj = ProjectionSet(np.array([0.0, 0.5]), np.ones((2, 16, 16)), g)
    stack, side = io.write_projection_stack(tmp_path / "p.oamf", proj)
    values, _, _ = io.read_oamf(stack)
    assert values.shape == (2, 16, 16)
    header, rows = io.read_table_csv(side)
    assert header == ["index", "angle_rad"] and rows[1] == [1.0, 0.5]
