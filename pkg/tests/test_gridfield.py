import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from scalefilter import gridfield
from scalefilter.gridfield import FormatError, center_crop, load_field, load_pgm, save_field, save_pgm


def write(path, data: bytes):
    path.write_bytes(data)
    return path


# --- PGM ------------------------------------------------------------------


def test_load_pgm_binary_8bit(tmp_path):
    p = write(tmp_path / "a.pgm", b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    np.testing.assert_array_equal(load_pgm(p), [[0.0, 1.0], [128 / 255, 64 / 255]])


def test_load_pgm_16bit_maximum(tmp_path):
    p = write(tmp_path / "a.pgm", b"P5 1 1 65535\n" + (65535).to_bytes(2, "big"))
    np.testing.assert_array_equal(load_pgm(p), [[1.0]])


def test_load_pgm_16bit_is_big_endian(tmp_path):
    p = write(tmp_path / "a.pgm", b"P5 2 1 1000\n" + (1).to_bytes(2, "big") + (1000).to_bytes(2, "big"))
    np.testing.assert_array_equal(load_pgm(p), [[1 / 1000, 1.0]])


def test_load_pgm_truncated(tmp_path):
    p = write(tmp_path / "a.pgm", b"P5\n2 2\n255\n" + bytes([1, 2, 3]))
    with pytest.raises(FormatError) as exc:
        load_pgm(p)
    assert exc.value.offset is not None


def test_load_pgm_ascii_with_comments(tmp_path):
    text = b"P2\n# a comment\n3 1\n# another\n10\n0 5\n10\n"
    p = write(tmp_path / "a.pgm", text)
    np.testing.assert_array_equal(load_pgm(p), [[0.0, 0.5, 1.0]])


def test_load_pgm_ascii_truncated(tmp_path):
    p = write(tmp_path / "a.pgm", b"P2 2 2 255 1 2 3")
    with pytest.raises(FormatError):
        load_pgm(p)


@pytest.mark.parametrize(
    "data",
    [b"P6 1 1 255\n\x00\x00\x00", b"P5 1 1 0\n\x00", b"P5 1 1 70000\n\x00\x00", b"P5 x 1 255\n\x00", b"P5 1"],
)
def test_load_pgm_malformed(tmp_path, data):
    with pytest.raises(FormatError):
        load_pgm(write(tmp_path / "a.pgm", data))


def test_load_pgm_sample_above_maxval(tmp_path):
    with pytest.raises(FormatError):
        load_pgm(write(tmp_path / "a.pgm", b"P5 1 1 100\n" + bytes([200])))


def test_save_pgm_clamps(tmp_path):
    p = tmp_path / "k.pgm"
    frac = save_pgm(np.array([[-2.0, 0.0, 2.0]]), p, -1.0, 1.0)
    assert p.read_bytes() == b"P5\n3 1\n255\n" + bytes([0, 127, 255])
    assert frac == pytest.approx(2 / 3)


def test_save_pgm_boundary_not_clipped(tmp_path):
    frac = save_pgm(np.full((2, 3), -0.5), tmp_path / "k.pgm", -0.5, 4.0)
    assert frac == 0.0
    assert load_pgm(tmp_path / "k.pgm").max() == 0.0


def test_save_pgm_inside_window(tmp_path):
    grid = np.random.default_rng(0).uniform(-1, 1, (5, 5))
    assert save_pgm(grid, tmp_path / "k.pgm", -1.0, 1.0) == 0.0


def test_save_pgm_rejects_empty_window(tmp_path):
    with pytest.raises(ValueError):
        save_pgm(np.zeros((2, 2)), tmp_path / "k.pgm", 1.0, 1.0)


@settings(max_examples=25, deadline=None)
@given(hnp.arrays(np.uint8, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6)))
def test_load_pgm_in_unit_interval(tmp_path_factory, raster):
    path = tmp_path_factory.mktemp("pgm") / "x.pgm"
    h, w = raster.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + raster.tobytes())
    img = load_pgm(path)
    assert img.shape == raster.shape
    assert img.min() >= 0.0 and img.max() <= 1.0


# --- field files ------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=5), elements=finite))
def test_real_field_round_trip_bit_exact(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("f") / "x.field"
    save_field(arr, path)
    back = load_field(path, kind="real")
    assert back.tobytes() == arr.tobytes()
    # and save(load(file)) reproduces the file
    save_field(back, path.with_suffix(".again"))
    assert path.with_suffix(".again").read_bytes() == path.read_bytes()


def test_complex_field_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    arr = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    save_field(arr, tmp_path / "c.field")
    back = load_field(tmp_path / "c.field", kind="complex")
    assert back.dtype == np.complex128
    assert back.tobytes() == arr.tobytes()


def test_field_header_layout(tmp_path):
    save_field(np.array([[1.5, -2.0]]), tmp_path / "x.field")
    raw = (tmp_path / "x.field").read_bytes()
    assert raw[:8] == b"SCLREGF1"
    assert raw[8] == 0
    assert int.from_bytes(raw[9:17], "little") == 1
    assert int.from_bytes(raw[17:25], "little") == 2
    assert np.frombuffer(raw[25:], "<f8").tolist() == [1.5, -2.0]


def test_field_bad_magic(tmp_path):
    save_field(np.zeros((2, 2)), tmp_path / "x.field")
    raw = bytearray((tmp_path / "x.field").read_bytes())
    raw[:8] = b"WRONGMAG"
    (tmp_path / "x.field").write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="magic"):
        load_field(tmp_path / "x.field")


def test_field_kind_mismatch(tmp_path):
    save_field(np.ones((2, 2), dtype=complex), tmp_path / "x.field")
    with pytest.raises(FormatError, match="kind mismatch"):
        load_field(tmp_path / "x.field", kind="real")


@pytest.mark.parametrize("cut", [1, 8, 30])
def test_field_truncated(tmp_path, cut):
    save_field(np.zeros((2, 2)), tmp_path / "x.field")
    raw = (tmp_path / "x.field").read_bytes()
    (tmp_path / "x.field").write_bytes(raw[:-cut])
    with pytest.raises(FormatError):
        load_field(tmp_path / "x.field")


def test_field_trailing_bytes(tmp_path):
    save_field(np.zeros((2, 2)), tmp_path / "x.field")
    with open(tmp_path / "x.field", "ab") as fh:
        fh.write(b"\x00")
    with pytest.raises(FormatError):
        load_field(tmp_path / "x.field")


# --- crops and symmetry -----------------------------------------------------


def test_center_crop_full_size_is_half_shift():
    g = np.arange(20.0).reshape(4, 5)
    np.testing.assert_array_equal(center_crop(g, 4, 5), np.fft.fftshift(g))


def test_center_crop_delta_lands_in_center():
    g = np.zeros((7, 6))
    g[0, 0] = 1.0
    c = center_crop(g, 3, 3)
    expected = np.zeros((3, 3))
    expected[1, 1] = 1.0
    np.testing.assert_array_equal(c, expected)


def test_center_crop_wrapped_indices():
    g = np.arange(16.0).reshape(4, 4)
    # rows/cols -1 and 0 around the origin, enumerated by hand
    expected = np.array([[g[3, 3], g[3, 0]], [g[0, 3], g[0, 0]]])
    np.testing.assert_array_equal(center_crop(g, 2, 2), expected)


@pytest.mark.parametrize("h,w", [(0, 1), (1, 0), (5, 1), (1, 5)])
def test_center_crop_out_of_range(h, w):
    with pytest.raises(ValueError):
        center_crop(np.zeros((4, 4)), h, w)


def test_as_image_rejects_nonfinite():
    with pytest.raises(ValueError):
        gridfield.as_image([[0.0, np.nan]])
    with pytest.raises(ValueError):
        gridfield.as_image(np.zeros(4))


@pytest.mark.parametrize("shape", [(1, 1), (4, 4), (5, 7), (6, 3)])
def test_dft_of_real_grid_is_hermitian(shape):
    g = np.random.default_rng(3).standard_normal(shape)
    assert gridfield.hermitian_deviation(np.fft.fft2(g)) <= 1e-12


def test_hermitian_deviation_detects_breakage():
    f = np.fft.fft2(np.random.default_rng(0).standard_normal((4, 4)))
    f[1, 2] += 1.0
    assert gridfield.hermitian_deviation(f) > 1e-3
