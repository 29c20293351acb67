import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalefilter.spectral import circ_convolve
from scalefilter.synthlab import (
    RATIO_KERNEL_RADII,
    DegenerateSignalError,
    GeometryError,
    NoiseSpec,
    ZeroSumKernelSpec,
    add_noise,
    make_dataset,
    make_texture,
    make_zero_sum_kernel,
    snr_to_sigma,
)


def test_ratio_kernel_weights():
    kernel = make_zero_sum_kernel(ZeroSumKernelSpec(160, 160, *RATIO_KERNEL_RADII))
    assert np.sum(kernel > 0) == 861
    assert np.sum(kernel == -1.0) == 9748
    assert kernel.max() == 9748 / 861
    assert abs(kernel.sum()) <= 1e-12 * kernel.size


def test_small_kernel_enumerated():
    # disk r <= 1: origin and 4 axis neighbors; annulus sqrt2 < r <= 2: the 4 points at distance 2
    kernel = make_zero_sum_kernel(ZeroSumKernelSpec(16, 16, 1.0, np.sqrt(2.0), 2.0))
    assert np.sum(kernel > 0) == 5 and np.sum(kernel < 0) == 4
    assert kernel.max() == 4 / 5
    for y, x in [(2, 0), (-2, 0), (0, 2), (0, -2)]:
        assert kernel[y, x] == -1.0
    assert kernel[1, 1] == 0.0


@pytest.mark.parametrize("radii", [(1.0, 1.0, 3.0), (2.0, 2.5, 4.0), (0.0, 0.0, 1.0), (3.0, 3.0, 3.2)])
def test_positive_weight_is_count_ratio(radii):
    kernel = make_zero_sum_kernel(ZeroSumKernelSpec(20, 20, *radii))
    n_pos, n_neg = np.sum(kernel > 0), np.sum(kernel < 0)
    assert kernel.max() == n_neg / n_pos


@pytest.mark.parametrize(
    "radii",
    [(3.0, 2.0, 5.0), (1.0, 1.0, 1.0), (1.0, 2.0, 9.0), (0.5, 0.6, 0.9)],
)
def test_invalid_geometry(radii):
    with pytest.raises(GeometryError):
        make_zero_sum_kernel(ZeroSumKernelSpec(16, 16, *radii))


@settings(max_examples=40, deadline=None)
@given(
    r_pos=st.floats(0, 4),
    gap=st.floats(0, 2),
    width=st.floats(1, 4),
    size=st.integers(24, 40),
)
def test_kernel_sums_to_zero_and_kills_constants(r_pos, gap, width, size):
    spec = ZeroSumKernelSpec(size, size + 3, r_pos, r_pos + gap, r_pos + gap + width)
    try:
        kernel = make_zero_sum_kernel(spec)
    except GeometryError:
        return
    assert abs(kernel.sum()) <= 1e-12 * kernel.size
    assert set(np.unique(kernel[kernel < 0])) == {-1.0}
    assert len(np.unique(kernel[kernel > 0])) == 1
    out = circ_convolve(np.full(kernel.shape, 0.7), kernel)
    assert np.max(np.abs(out)) <= 1e-10


def test_kernel_is_symmetric_about_origin():
    k = make_zero_sum_kernel(ZeroSumKernelSpec(32, 32, 2.0, 3.0, 6.0))
    np.testing.assert_array_equal(k, np.roll(k[::-1, ::-1], 1, axis=(0, 1)))


# --- SNR --------------------------------------------------------------------


@pytest.fixture
def unit_variance_image():
    g = np.random.default_rng(5).standard_normal((64, 64))
    return (g - g.mean()) / g.std()


def test_snr_zero_db(unit_variance_image):
    assert snr_to_sigma(unit_variance_image, 0.0) ** 2 == pytest.approx(1.0, rel=1e-12)


def test_snr_ten_db(unit_variance_image):
    assert snr_to_sigma(unit_variance_image, 10.0) ** 2 == pytest.approx(0.1, rel=1e-12)


def test_snr_lowest_level(unit_variance_image):
    # 10 ** 1.42, evaluated independently
    assert snr_to_sigma(unit_variance_image, -14.2) ** 2 == pytest.approx(26.302679918953814, rel=1e-12)


def test_snr_uses_variance_not_power(unit_variance_image):
    assert snr_to_sigma(unit_variance_image + 100.0, 0.0) == pytest.approx(1.0, rel=1e-9)


def test_snr_constant_image():
    with pytest.raises(DegenerateSignalError):
        snr_to_sigma(np.ones((4, 4)), 10.0)


def test_add_noise_deterministic(unit_variance_image):
    a = add_noise(unit_variance_image, NoiseSpec(5.0, seed=9))
    b = add_noise(unit_variance_image, NoiseSpec(5.0, seed=9))
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, add_noise(unit_variance_image, NoiseSpec(5.0, seed=10)))


def test_add_noise_vanishes_at_high_snr(unit_variance_image):
    out = add_noise(unit_variance_image, NoiseSpec(300.0, seed=1))
    assert np.max(np.abs(out - unit_variance_image)) <= 1e-10


def test_add_noise_variance():
    clean = make_texture(256, 256, 3, 2.0)
    noisy = add_noise(clean, NoiseSpec(0.0, seed=4))
    assert np.var(noisy - clean) == pytest.approx(np.var(clean), rel=0.05)


def test_realized_snr_calibration():
    clean = make_texture(128, 128, 11, 2.0)
    for snr in (65.8, 25.8, -14.2):
        for seed in range(30):
            noise = add_noise(clean, NoiseSpec(snr, seed)) - clean
            realized = 10 * np.log10(np.var(clean) / np.var(noise))
            assert abs(realized - snr) <= 0.5


# --- datasets ---------------------------------------------------------------


def test_dataset_with_delta_kernel_is_identity():
    inputs = [make_texture(16, 16, s, 1.0) for s in range(3)]
    delta = np.zeros((16, 16))
    delta[0, 0] = 1.0
    for a, b in make_dataset(inputs, delta, NoiseSpec(np.inf)):
        np.testing.assert_allclose(b, a, atol=1e-14)


def test_dataset_zero_sum_kernel_on_constant_image():
    kernel = make_zero_sum_kernel(ZeroSumKernelSpec(32, 32, 2.0, 2.0, 5.0))
    ((_, b),) = make_dataset([np.full((32, 32), 0.5)], kernel, NoiseSpec(np.inf))
    assert np.max(np.abs(b)) <= 1e-12
    # with the DC removed there is no signal variance to set a noise level against
    with pytest.raises(DegenerateSignalError):
        make_dataset([np.full((32, 32), 0.5)], kernel, NoiseSpec(30.0, 1))


def test_dataset_deterministic_and_per_image_seeds():
    kernel = make_zero_sum_kernel(ZeroSumKernelSpec(32, 32, 2.0, 2.0, 5.0))
    inputs = [make_texture(32, 32, s, 1.0) for s in range(2)]
    d1 = make_dataset(inputs, kernel, NoiseSpec(10.0, 7))
    d2 = make_dataset(inputs, kernel, NoiseSpec(10.0, 7))
    for (a1, b1), (a2, b2) in zip(d1, d2):
        assert b1.tobytes() == b2.tobytes()
    # image 1 uses seed 8
    clean1 = circ_convolve(inputs[1], kernel)
    np.testing.assert_array_equal(d1[1][1], add_noise(clean1, NoiseSpec(10.0, 8)))


def test_dataset_shape_mismatch():
    with pytest.raises(ValueError):
        make_dataset([np.zeros((4, 4))], np.zeros((4, 5)), NoiseSpec(np.inf))


# --- textures ---------------------------------------------------------------


def test_texture_deterministic():
    assert make_texture(32, 32, 1, 2.0).tobytes() == make_texture(32, 32, 1, 2.0).tobytes()


def test_texture_standardized():
    t = make_texture(128, 128, 2, 3.0)
    assert abs(t.mean()) <= 1e-12
    assert t.var() == pytest.approx(1.0, rel=0.02)


def test_texture_short_correlation_is_nearly_white():
    t = make_texture(128, 128, 3, 1e-3)
    corr = np.mean(t * np.roll(t, 1, axis=1)) / np.mean(t * t)
    assert abs(corr) < 0.1


def test_texture_long_correlation_is_smooth():
    t = make_texture(128, 128, 3, 4.0)
    corr = np.mean(t * np.roll(t, 1, axis=1)) / np.mean(t * t)
    assert corr > 0.5


def test_texture_spectrum_nonvanishing_off_dc():
    t = make_texture(64, 64, 4, 2.0)
    power = np.abs(np.fft.fft2(t)) ** 2
    power[0, 0] = np.inf
    assert power.min() > 1e-12 * power[np.isfinite(power)].max()


def test_texture_rejects_bad_length():
    with pytest.raises(ValueError):
        make_texture(8, 8, 0, 0.0)
