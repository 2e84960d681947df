"""Cutting a decaying function off at radius k: the generator gap shrinks with k.

Run:  python demos/core_probe.py
"""

import numpy as np

from pdmpkit.functions import gaussian_decay
from pdmpkit.generator import box_grid, core_convergence_probe, core_gap_bound
from pdmpkit.samplers import SamplerConfig, build_sampler
from pdmpkit.targets import standard_gaussian

spec = build_sampler(SamplerConfig(standard_gaussian(1), "zigzag"))
f = gaussian_decay(2)
ks = [2.0, 4.0, 8.0]
grid = box_grid(2, 24.1, 0.05)
gaps = core_convergence_probe(spec, f, ks, grid)
for k, gap in zip(ks, gaps):
    print(f"k={k:<4} gap={gap:.3e}  bound={core_gap_bound(spec, f, k, grid):.3e}")
