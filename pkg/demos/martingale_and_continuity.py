"""Dynkin martingale residuals along simulated paths, and P_t f -> f as t -> 0.

Run:  python demos/martingale_and_continuity.py
"""

import numpy as np

from pdmpkit.functions import bump, gaussian_decay
from pdmpkit.generator import martingale_residuals, strong_continuity_probe
from pdmpkit.samplers import SamplerConfig, build_sampler
from pdmpkit.targets import standard_gaussian

rng = np.random.default_rng(3)
target = standard_gaussian(1)
f = bump([0.5, 0.5], 0.25, 2.0)
z0 = np.array([0.5, 1.0])

for variant, kw in (("zigzag", {}), ("bps", {"alpha": 0.5}), ("rhmc", {"alpha": 0.0})):
    spec = build_sampler(SamplerConfig(target, variant, **kw))
    res = martingale_residuals(spec, f, z0, [1.0, 2.0], 2000, rng)
    for t, (mean, se) in zip((1.0, 2.0), res):
        print(f"{variant:6s} t={t}: mean residual {mean:+.4f}  SE {se:.4f}")

spec = build_sampler(SamplerConfig(target, "zigzag"))
g = gaussian_decay(2)
states = np.array([[0.0, 1.0], [0.5, -1.0], [1.0, 1.0], [-1.0, -1.0], [2.0, 1.0]])
for row in strong_continuity_probe(spec, g, states, [0.1, 0.01, 0.001], 2000, rng):
    print(f"t={row['t']:<6} sup|P_t f - f| = {row['gap']:.2e}  bound = {row['bound']:.2e}")
