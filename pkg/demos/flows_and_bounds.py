"""Flow Jacobians against the exponential bound, and the no-return lower bound.

Run:  python demos/flows_and_bounds.py
"""

import math

import numpy as np

from pdmpkit.bounds import gronwall_check_path, jacobian_norm_flow, no_return_check
from pdmpkit.flows import HarmonicFlow, LinearTransportFlow, scalar_exponential_flow
from pdmpkit.process import simulate_skeleton
from pdmpkit.samplers import SamplerConfig, build_sampler
from pdmpkit.targets import standard_gaussian

rng = np.random.default_rng(0)

# The scalar flow x' = x attains the bound exactly.
flow = scalar_exponential_flow()
for t in (0.5, 1.0, 2.0):
    print(f"x'=x      t={t}: |Dphi| = {jacobian_norm_flow(flow, np.array([1.0]), t):.9f}   e^t = {math.exp(t):.9f}")

# Straight-line transport grows only linearly, the unit oscillator not at all.
for name, flow in (("transport", LinearTransportFlow(1)), ("harmonic", HarmonicFlow(np.eye(1)))):
    t = 3.0
    norm = jacobian_norm_flow(flow, np.array([0.3, -1.0]), t)
    print(f"{name:9s} t={t}: |Dphi| = {norm:.6f}   bound = {math.exp(flow.lipschitz * t):.3f}")

# Whole paths: flips are ±1 diagonal matrices, so the chain rule stays under e^{LT}.
spec = build_sampler(SamplerConfig(standard_gaussian(2), "zigzag"))
sk = simulate_skeleton(spec, rng.standard_normal(4), 5.0, rng)
rep = gronwall_check_path(spec, sk)
print(f"zigzag path with {len(sk)} flips: |DPhi| = {rep.checked:.4f} <= {rep.bound:.1f}")

# No-return: a harmonic flow with an off-centre equilibrium never falls below the bound.
flow = HarmonicFlow(np.diag([2.0, 0.5]), mean=np.array([1.0, -1.0]))
worst = min(no_return_check(flow, z, np.linspace(0, 5, 64)).margin for z in 5 * rng.standard_normal((200, 4)))
print(f"no-return worst margin over 200 starts: {worst:.3e}")
