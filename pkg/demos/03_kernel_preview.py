#!/usr/bin/env python3
"""Build the 9748/861 zero-sum kernel and write a PGM preview.

The three radii below give exactly 861 disk pixels and 9748 annulus pixels.
"""

import sys
from pathlib import Path

import numpy as np

from scalefilter import gridfield, synthlab

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)

spec = synthlab.ZeroSumKernelSpec(160, 160, *synthlab.RATIO_KERNEL_RADII)
kernel = synthlab.make_zero_sum_kernel(spec)
print(f"radii = {[round(float(r), 3) for r in synthlab.RATIO_KERNEL_RADII]}")
print(f"positive pixels = {np.sum(kernel > 0)}, negative pixels = {np.sum(kernel < 0)}")
print(f"positive value = {kernel.max():.6f} (9748/861 = {9748 / 861:.6f})")
print(f"sum = {kernel.sum():.1e}")

view = np.fft.fftshift(kernel)
clipped = gridfield.save_pgm(view, out / "ratio_kernel.pgm", -1.0, kernel.max())
gridfield.save_field(kernel, out / "ratio_kernel.field")
print(f"wrote {out / 'ratio_kernel.pgm'} (clipped {clipped:.0%})")
