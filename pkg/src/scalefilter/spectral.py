"""DFTs, circular convolution and the discrete gradient energy of spectra.

Transform convention (numpy's): the forward transform is unnormalized,

    F[k] = sum_x f[x] exp(-2 pi i k.x / M),

so Parseval reads ``<u, v> = c_N <F u, F v>`` with ``c_N = 1 / (H * W)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridfield import as_image, as_spectrum, hermitian_deviation

__all__ = [
    "SymmetryError",
    "DftPlan",
    "dft2",
    "idft2",
    "circ_convolve",
    "spectral_gradient_energy",
    "laplacian_periodic",
    "distance_weight",
]

# tolerance used by idft2 before discarding the imaginary part
SYMMETRY_TOL = 1e-9


class SymmetryError(ValueError):
    """A spectrum that should describe a real signal is not Hermitian."""


@dataclass(frozen=True)
class DftPlan:
    """Shape and normalization of a 2D transform."""

    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("plan dimensions must be positive")

    @classmethod
    def for_grid(cls, grid) -> "DftPlan":
        h, w = np.shape(grid)
        return cls(h, w)

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def parseval_constant(self) -> float:
        """``c_N`` in ``<u, v>_spatial = c_N <u_hat, v_hat>_spectral``."""
        return 1.0 / (self.height * self.width)

    def check(self, field) -> None:
        if np.shape(field) != self.shape:
            raise ValueError(f"field shape {np.shape(field)} does not match plan {self.shape}")


def dft2(grid, plan: DftPlan | None = None) -> np.ndarray:
    """Forward 2D DFT of a real grid."""
    grid = as_image(grid)
    if plan is not None:
        plan.check(grid)
    return np.fft.fft2(grid)


def idft2(field, plan: DftPlan | None = None, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Inverse 2D DFT of a Hermitian spectrum, returned as a real grid.

    Raises
    ------
    SymmetryError
        If ``field`` departs from Hermitian symmetry by more than ``tol``
        (relative to its largest magnitude). A solver that produced such a
        spectrum has gone wrong somewhere.
    """
    field = as_spectrum(field)
    if plan is not None:
        plan.check(field)
    dev = hermitian_deviation(field)
    if dev > tol:
        raise SymmetryError(f"spectrum is not Hermitian (relative deviation {dev:.3g})")
    return np.fft.ifft2(field).real


def circ_convolve(image, kernel) -> np.ndarray:
    """Periodic convolution ``(image * kernel)[x] = sum_y image[x - y] kernel[y]``."""
    image = as_image(image)
    kernel = as_image(kernel)
    if image.shape != kernel.shape:
        raise ValueError(f"shape mismatch: {image.shape} vs {kernel.shape}")
    return np.fft.ifft2(np.fft.fft2(image) * np.fft.fft2(kernel)).real


def spectral_gradient_energy(field) -> float:
    """Forward-difference Dirichlet energy of a field with periodic wrap.

    ``sum_k |F[k + e1] - F[k]|^2 + |F[k + e2] - F[k]|^2``
    """
    field = np.asarray(field)
    d0 = np.roll(field, -1, axis=0) - field
    d1 = np.roll(field, -1, axis=1) - field
    return float(np.sum(d0.real**2 + d0.imag**2) + np.sum(d1.real**2 + d1.imag**2))


def laplacian_periodic(field) -> np.ndarray:
    """5-point Laplacian with periodic boundaries (neighbors minus 4 x center)."""
    field = np.asarray(field)
    return (
        np.roll(field, 1, axis=0)
        + np.roll(field, -1, axis=0)
        + np.roll(field, 1, axis=1)
        + np.roll(field, -1, axis=1)
        - 4.0 * field
    )


def distance_weight(height: int, width: int) -> np.ndarray:
    """Spatial weight ``w(x) = sum_j 4 sin^2(pi x_j / M_j)``.

    This is what the spectral gradient energy penalizes in the spatial
    domain: ``spectral_gradient_energy(fft2(u)) == H*W * sum(w * u**2)``.
    Near the origin ``w(x) ~ (2 pi / M)^2 |x|^2``; it peaks at the half period.
    """
    wy = 4.0 * np.sin(np.pi * np.arange(height) / height) ** 2
    wx = 4.0 * np.sin(np.pi * np.arange(width) / width) ** 2
    return wy[:, None] + wx[None, :]
