#!/usr/bin/env python3
"""Learn a convolution kernel from one noiseless image pair.

With clean outputs the unregularized solution is exact: the learned kernel
matches the generator up to round-off.
"""

import numpy as np

from scalefilter import estimator, synthlab
from scalefilter.spectral import circ_convolve

H = W = 128

# a rough texture and a zero-sum kernel (disk minus annulus)
alpha = synthlab.make_texture(H, W, seed=0, correlation_length=0.5)
truth = synthlab.make_zero_sum_kernel(synthlab.ZeroSumKernelSpec(H, W, 2.0, 2.0, 5.0))
beta = circ_convolve(alpha, truth)

stats = estimator.statistics_from_pairs([(alpha, beta)])
est = estimator.solve_closed_form(stats)

print("kernel support (centered, 11x11):")
with np.printoptions(precision=2, suppress=True, linewidth=120):
    print(np.fft.fftshift(est.kernel)[H // 2 - 5 : H // 2 + 6, W // 2 - 5 : W // 2 + 6])
print(f"max |learned - truth| = {np.max(np.abs(est.kernel - truth)):.2e}")
