"""Learning a single linear convolution kernel from image pairs.

The unregularized least-squares kernel comes in closed form from FFTs of
the training images; a scale penalty that grows with distance from the
kernel center turns the problem into a Tikhonov system on the frequency
grid, relaxed by Jacobi sweeps.
"""

from .estimator import (
    DivergenceError,
    EmptyStatisticsError,
    KernelEstimate,
    SolverOptions,
    SufficientStatistics,
    accumulate,
    fit,
    jacobi_step,
    merge,
    objective_spatial,
    objective_spectral,
    solve_closed_form,
    solve_regularized,
    statistics_from_pairs,
)
from .gridfield import FormatError, center_crop, load_field, load_pgm, save_field, save_pgm
from .spectral import DftPlan, SymmetryError, circ_convolve, dft2, idft2, spectral_gradient_energy

__version__ = "0.1.0"
