"""Learning a convolution kernel from image pairs.

Everything the solvers need is held by :class:`SufficientStatistics`:
the per-frequency sums ``aa = sum_i |A_i|^2`` and ``ab = sum_i conj(A_i) B_i``
of the input spectra ``A_i`` and output spectra ``B_i``. Their size is that
of one image, whatever the number of pairs.

Without regularization the least-squares kernel is ``ifft2(ab / aa)``.
With the scale penalty the spectrum ``U`` of the kernel solves

    aa * U - ab - (lam / 4 pi^2) * Lap(U) = 0,

``Lap`` being the 5-point periodic Laplacian on the frequency grid. It is
relaxed with plain (double buffered) Jacobi sweeps

    U+ = (ab + (lam / 4 pi^2) * nbr_sum(U)) / (aa + lam / pi^2),

which map Hermitian spectra to Hermitian spectra, so every iterate is the
transform of a real kernel.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import gridfield
from .gridfield import as_image
from .spectral import (
    DftPlan,
    distance_weight,
    idft2,
    laplacian_periodic,
    spectral_gradient_energy,
)

__all__ = [
    "EmptyStatisticsError",
    "DivergenceError",
    "SufficientStatistics",
    "SolverOptions",
    "KernelEstimate",
    "accumulate",
    "merge",
    "statistics_from_pairs",
    "solve_closed_form",
    "jacobi_step",
    "jacobi_denominator",
    "solve_regularized",
    "fit",
    "regularized_residual",
    "objective_spatial",
    "objective_spectral",
    "save_statistics",
    "load_statistics",
]

log = logging.getLogger(__name__)

FOUR_PI_SQ = 4.0 * np.pi**2


class EmptyStatisticsError(ValueError):
    """Solving was requested from statistics with no pairs in them."""


class DivergenceError(ArithmeticError):
    """A solver produced non-finite values."""


@dataclass(frozen=True)
class SufficientStatistics:
    aa: np.ndarray
    ab: np.ndarray
    n_pairs: int = 0

    @classmethod
    def empty(cls, height: int, width: int) -> "SufficientStatistics":
        return cls(
            np.zeros((height, width), dtype=np.float64),
            np.zeros((height, width), dtype=np.complex128),
            0,
        )

    @property
    def shape(self):
        return self.aa.shape

    @property
    def height(self) -> int:
        return self.aa.shape[0]

    @property
    def width(self) -> int:
        return self.aa.shape[1]


def accumulate(stats: SufficientStatistics, input, output) -> SufficientStatistics:
    """Add one (input, output) image pair; returns new statistics."""
    alpha = as_image(input)
    beta = as_image(output)
    if alpha.shape != stats.shape or beta.shape != stats.shape:
        raise ValueError(
            f"pair shapes {alpha.shape}/{beta.shape} do not match statistics {stats.shape}"
        )
    a_hat = np.fft.fft2(alpha)
    b_hat = np.fft.fft2(beta)
    return SufficientStatistics(
        stats.aa + (a_hat.real**2 + a_hat.imag**2),
        stats.ab + np.conj(a_hat) * b_hat,
        stats.n_pairs + 1,
    )


def merge(s1: SufficientStatistics, s2: SufficientStatistics) -> SufficientStatistics:
    if s1.shape != s2.shape:
        raise ValueError(f"cannot merge statistics of shape {s1.shape} and {s2.shape}")
    return SufficientStatistics(s1.aa + s2.aa, s1.ab + s2.ab, s1.n_pairs + s2.n_pairs)


def statistics_from_pairs(pairs) -> SufficientStatistics:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no image pairs given")
    stats = SufficientStatistics.empty(*np.shape(pairs[0][0]))
    for alpha, beta in pairs:
        stats = accumulate(stats, alpha, beta)
    return stats


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rule and guards for the solvers.

    ``epsilon_ridge`` is added to the denominator for ``lam == 0`` only;
    ``None`` means ``1e-12 * max(aa)``.
    """

    tolerance: float = 1e-10
    max_iterations: int = 100_000
    epsilon_ridge: float | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.epsilon_ridge is not None and self.epsilon_ridge < 0:
            raise ValueError("epsilon_ridge must be nonnegative")

    def ridge(self, stats: SufficientStatistics) -> float:
        if self.epsilon_ridge is not None:
            return float(self.epsilon_ridge)
        return 1e-12 * float(np.max(stats.aa))


@dataclass
class KernelEstimate:
    kernel: np.ndarray
    spectrum: np.ndarray
    lam: float
    iterations: int = 0
    final_residual: float = 0.0
    converged: bool = True
    history: list = field(default_factory=list, repr=False)


def _require_pairs(stats: SufficientStatistics) -> None:
    if stats.n_pairs < 1:
        raise EmptyStatisticsError("statistics hold no image pairs")


def _check_finite(u_hat: np.ndarray) -> None:
    bad = ~np.isfinite(u_hat)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise DivergenceError(f"non-finite value at frequency bin ({i}, {j})")


def solve_closed_form(stats: SufficientStatistics, opts: SolverOptions | None = None) -> KernelEstimate:
    """Unregularized least-squares kernel ``ifft2(ab / (aa + eps))``."""
    opts = opts or SolverOptions()
    _require_pairs(stats)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_hat = stats.ab / (stats.aa + opts.ridge(stats))
    _check_finite(u_hat)
    return KernelEstimate(idft2(u_hat), u_hat, 0.0)


def jacobi_denominator(stats: SufficientStatistics, lam: float, eps: float = 0.0) -> np.ndarray:
    """``aa + lam / pi^2``, with ``eps`` standing in for the penalty when ``lam == 0``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0:
        return stats.aa + eps
    return stats.aa + 4.0 * lam / FOUR_PI_SQ


def _neighbor_sum(u: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Sum of the four periodic neighbors of every bin, written into ``out``."""
    out[1:] = u[:-1]
    out[0] = u[-1]
    out[:-1] += u[1:]
    out[-1] += u[0]
    out[:, 1:] += u[:, :-1]
    out[:, 0] += u[:, -1]
    out[:, :-1] += u[:, 1:]
    out[:, -1] += u[:, 0]
    return out


def jacobi_step(u_hat, stats: SufficientStatistics, lam: float, eps: float = 0.0) -> np.ndarray:
    """One simultaneous Jacobi sweep; returns a new spectrum."""
    u_hat = np.asarray(u_hat, dtype=np.complex128)
    if u_hat.shape != stats.shape:
        raise ValueError(f"spectrum shape {u_hat.shape} does not match statistics {stats.shape}")
    denom = jacobi_denominator(stats, lam, eps)
    nbr = _neighbor_sum(u_hat, np.empty_like(u_hat))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = (stats.ab + (lam / FOUR_PI_SQ) * nbr) / denom
    _check_finite(out)
    return out


def regularized_residual(u_hat, stats: SufficientStatistics, lam: float) -> np.ndarray:
    """``aa * U - ab - (lam / 4 pi^2) Lap(U)``; zero at the exact solution."""
    return stats.aa * u_hat - stats.ab - (lam / FOUR_PI_SQ) * laplacian_periodic(u_hat)


def solve_regularized(
    stats: SufficientStatistics, lam: float, opts: SolverOptions | None = None
) -> KernelEstimate:
    """Scale-regularized kernel by Jacobi relaxation.

    Starts from ``ab / (aa + lam / pi^2)`` and sweeps until the relative
    sup-norm change of a sweep drops to ``opts.tolerance`` and the residual
    of the optimality system is below ``10 * tolerance * max|ab|``. Running
    out of iterations is not an error: the estimate comes back with
    ``converged=False``.

    ``history`` on the result holds the absolute sup-norm change per sweep.
    """
    opts = opts or SolverOptions()
    _require_pairs(stats)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0:
        return solve_closed_form(stats, opts)

    coef = lam / FOUR_PI_SQ
    inv_denom = 1.0 / jacobi_denominator(stats, lam)
    ab = stats.ab
    ab_scale = float(np.max(np.abs(ab)))
    tol = opts.tolerance

    u = ab * inv_denom
    nbr_prev = _neighbor_sum(u, np.empty_like(u))
    nbr_next = np.empty_like(u)
    u_next = np.empty_like(u)
    history = []
    rel = np.inf
    converged = False
    it = 0
    while it < opts.max_iterations:
        np.multiply(nbr_prev, coef, out=u_next)
        u_next += ab
        u_next *= inv_denom
        it += 1

        change = float(np.max(np.abs(u_next - u)))
        history.append(change)
        size = float(np.max(np.abs(u_next)))
        rel = change / size if size > 0 else 0.0
        if not np.isfinite(size):
            _check_finite(u_next)

        _neighbor_sum(u_next, nbr_next)
        if rel <= tol:
            # residual of u_next is coef * (nbr(u) - nbr(u_next)), elementwise
            resid = coef * float(np.max(np.abs(nbr_prev - nbr_next)))
            if resid <= 10.0 * tol * ab_scale:
                u, u_next = u_next, u
                converged = True
                break
        u, u_next = u_next, u
        nbr_prev, nbr_next = nbr_next, nbr_prev

    if not converged:
        log.warning("Jacobi relaxation stopped after %d sweeps (relative change %.3g)", it, rel)
    return KernelEstimate(idft2(u), u, float(lam), it, rel, converged, history)


def fit(stats: SufficientStatistics, lam: float = 0.0, opts: SolverOptions | None = None) -> KernelEstimate:
    """Fit a kernel, dispatching on whether ``lam`` is zero."""
    return solve_regularized(stats, lam, opts)


# --------------------------------------------------------------------------
# objectives


def _check_pairs(pairs, shape):
    pairs = list(pairs)
    if not pairs:
        raise ValueError("objective needs at least one image pair")
    for alpha, beta in pairs:
        if np.shape(alpha) != shape or np.shape(beta) != shape:
            raise ValueError("pair shapes do not match the kernel")
    return pairs


def objective_spatial(kernel, pairs, lam: float) -> float:
    """Mean squared-residual energy over pairs plus the spatial scale penalty.

    ``(1/N) sum_i ||alpha_i * u - beta_i||^2 + (lam / 4 pi^2) sum_x w(x) u(x)^2``
    with ``w`` from :func:`~scalefilter.spectral.distance_weight`.
    """
    kernel = as_image(kernel)
    pairs = _check_pairs(pairs, kernel.shape)
    k_hat = np.fft.fft2(kernel)
    data = 0.0
    for alpha, beta in pairs:
        pred = np.fft.ifft2(np.fft.fft2(alpha) * k_hat).real
        data += float(np.sum((pred - beta) ** 2))
    penalty = float(np.sum(distance_weight(*kernel.shape) * kernel**2))
    return data / len(pairs) + lam / FOUR_PI_SQ * penalty


def objective_spectral(u_hat, pairs, lam: float) -> float:
    """The same objective evaluated on the frequency grid.

    ``c_N * [(1/N) sum_i ||A_i U - B_i||^2 + (lam / 4 pi^2) ||grad U||^2]``
    """
    u_hat = np.asarray(u_hat, dtype=np.complex128)
    pairs = _check_pairs(pairs, u_hat.shape)
    c_n = DftPlan(*u_hat.shape).parseval_constant
    data = 0.0
    for alpha, beta in pairs:
        r = np.fft.fft2(alpha) * u_hat - np.fft.fft2(beta)
        data += float(np.sum(r.real**2 + r.imag**2))
    return c_n * (data / len(pairs) + lam / FOUR_PI_SQ * spectral_gradient_energy(u_hat))


# --------------------------------------------------------------------------
# persistence: a directory holding header.txt, aa.field and ab.field

_HEADER = "header.txt"


def save_statistics(stats: SufficientStatistics, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    gridfield.save_field(stats.aa, os.path.join(directory, "aa.field"))
    gridfield.save_field(stats.ab, os.path.join(directory, "ab.field"))
    with open(os.path.join(directory, _HEADER), "w") as fh:
        fh.write("format = scalefilter-statistics-1\n")
        fh.write(f"n_pairs = {stats.n_pairs}\n")
        fh.write(f"height = {stats.height}\n")
        fh.write(f"width = {stats.width}\n")


def load_statistics(directory) -> SufficientStatistics:
    header = {}
    path = os.path.join(directory, _HEADER)
    try:
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    key, _, value = line.partition("=")
                    header[key.strip()] = value.strip()
        n_pairs = int(header["n_pairs"])
        shape = (int(header["height"]), int(header["width"]))
    except (KeyError, ValueError) as exc:
        raise gridfield.FormatError(f"malformed statistics header {path}: {exc}") from exc
    aa = gridfield.load_field(os.path.join(directory, "aa.field"), kind="real")
    ab = gridfield.load_field(os.path.join(directory, "ab.field"), kind="complex")
    if aa.shape != shape or ab.shape != shape:
        raise gridfield.FormatError(f"statistics fields do not match header dimensions {shape}")
    return SufficientStatistics(aa, ab, n_pairs)
