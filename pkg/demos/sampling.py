"""Simulate the four samplers on a correlated Gaussian and compare moments.

Run:  python demos/sampling.py
"""

import numpy as np

from pdmpkit.process import simulate_skeleton
from pdmpkit.samplers import SamplerConfig, build_sampler
from pdmpkit.skeleton import time_average
from pdmpkit.targets import gaussian_potential

target = gaussian_potential([1.0, -0.5], [[1.0, 0.6], [0.6, 2.0]])
print("exact mean", target.mean, "exact var", np.diag(target.covariance))

settings = {
    "zigzag": {},
    "bps": {"alpha": 0.0, "lambda_ref": 1.0},
    "rhmc": {"alpha": 0.5, "lambda_ref": 1.0},
    "pure_reflection": {},
}
for variant, kw in settings.items():
    rng = np.random.default_rng(1)
    spec = build_sampler(SamplerConfig(target, variant, **kw))
    z0 = np.r_[target.mean, rng.standard_normal(2)]
    sk = simulate_skeleton(spec, z0, 2000.0, rng)
    mean = time_average(sk, spec, lambda Z: Z[..., :2])
    second = time_average(sk, spec, lambda Z: Z[..., :2] ** 2)
    print(f"{variant:16s} events={len(sk):6d}  mean={np.round(mean, 3)}  var={np.round(second - mean**2, 3)}")

# Pure reflection only reverses velocity, so it stays on the line through z0
# and does not sample the target.  That is expected.
