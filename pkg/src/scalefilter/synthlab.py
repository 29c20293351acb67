"""Synthetic ground truth: zero-sum kernels, textures and calibrated noise.

Randomness comes from numpy's PCG64 bit generator seeded with plain
integers, so every dataset is a pure function of its seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridfield import as_image
from .spectral import circ_convolve

__all__ = [
    "GeometryError",
    "DegenerateSignalError",
    "ZeroSumKernelSpec",
    "NoiseSpec",
    "rng_for",
    "make_zero_sum_kernel",
    "snr_to_sigma",
    "add_noise",
    "make_dataset",
    "make_texture",
]


class GeometryError(ValueError):
    """Kernel regions are empty, overlapping or do not fit the grid."""


class DegenerateSignalError(ValueError):
    """A constant image has no signal power to calibrate noise against."""


def rng_for(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ZeroSumKernelSpec:
    """Disk of positive weight inside an annulus of ``-1`` weights.

    A pixel at periodic offset ``x`` from the origin is positive when
    ``|x| <= r_pos`` and negative when ``r_in < |x| <= r_out``.
    """

    height: int
    width: int
    r_pos: float
    r_in: float
    r_out: float


# The disk r^2 <= 272 holds 861 lattice points and the annulus
# 325 < r^2 <= 3433 holds 9748, giving a positive weight of 9748/861.
RATIO_KERNEL_RADII = (np.sqrt(272.0), np.sqrt(325.0), np.sqrt(3433.0))


def _wrapped_offsets(n: int) -> np.ndarray:
    return (np.arange(n) + n // 2) % n - n // 2


def make_zero_sum_kernel(spec: ZeroSumKernelSpec) -> np.ndarray:
    if spec.height < 1 or spec.width < 1:
        raise GeometryError("kernel dimensions must be positive")
    if not 0 <= spec.r_pos <= spec.r_in < spec.r_out:
        raise GeometryError("radii must satisfy 0 <= r_pos <= r_in < r_out")
    if 2 * spec.r_out >= min(spec.height, spec.width):
        raise GeometryError(
            f"annulus of radius {spec.r_out} wraps around a {spec.height}x{spec.width} grid"
        )
    dy = _wrapped_offsets(spec.height)
    dx = _wrapped_offsets(spec.width)
    d2 = (dy[:, None] ** 2 + dx[None, :] ** 2).astype(np.float64)
    slack = 1e-9  # radii given as square roots of integers
    pos = d2 <= spec.r_pos**2 + slack
    neg = (d2 > spec.r_in**2 + slack) & (d2 <= spec.r_out**2 + slack)
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise GeometryError(f"empty kernel region ({n_pos} positive, {n_neg} negative pixels)")
    kernel = np.zeros((spec.height, spec.width))
    kernel[neg] = -1.0
    kernel[pos] = n_neg / n_pos
    return kernel


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: int = 0


def snr_to_sigma(clean, snr_db: float) -> float:
    """Noise standard deviation giving ``snr_db`` against the variance of ``clean``."""
    clean = np.asarray(clean, dtype=np.float64)
    power = float(np.var(clean))
    if not power > 0:
        raise DegenerateSignalError("clean image is constant; SNR is undefined")
    if snr_db == np.inf:
        return 0.0
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


def add_noise(clean, spec: NoiseSpec) -> np.ndarray:
    clean = as_image(clean)
    sigma = snr_to_sigma(clean, spec.snr_db)
    return clean + sigma * rng_for(spec.seed).standard_normal(clean.shape)


def make_dataset(inputs, kernel, spec: NoiseSpec):
    """Convolve every input with ``kernel`` and add noise.

    Image ``i`` uses noise seed ``spec.seed + i``. Returns ``(input, output)``
    pairs.
    """
    kernel = as_image(kernel)
    pairs = []
    for i, alpha in enumerate(inputs):
        alpha = as_image(alpha)
        if alpha.shape != kernel.shape:
            raise ValueError(f"input {i} has shape {alpha.shape}, kernel {kernel.shape}")
        clean = circ_convolve(alpha, kernel)
        if spec.snr_db == np.inf:
            pairs.append((alpha, clean))
        else:
            pairs.append((alpha, add_noise(clean, NoiseSpec(spec.snr_db, spec.seed + i))))
    return pairs


def make_texture(height: int, width: int, seed: int, correlation_length: float) -> np.ndarray:
    """Stationary Gaussian random field with an exponential covariance.

    White noise is shaped in the frequency domain by the square root of the
    2D exponential-covariance spectrum ``(1 + (2 pi l f)^2)^(-3/2)``, then
    standardized to zero mean and unit variance. The spectrum decays only
    polynomially, so the texture stays well conditioned as a regression input.
    """
    if not correlation_length > 0:
        raise ValueError("correlation_length must be positive")
    white = rng_for(seed).standard_normal((height, width))
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    f2 = fy**2 + fx**2
    amp = (1.0 + (2.0 * np.pi * correlation_length) ** 2 * f2) ** -0.75
    field = np.fft.ifft2(np.fft.fft2(white) * amp).real
    field -= field.mean()
    return field / field.std()
