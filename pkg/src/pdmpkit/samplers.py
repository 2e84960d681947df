"""Builders for the four kinetic PDMP samplers targeting μ = π ⊗ N(0, I).

State layout is z = (q, p) with n positions followed by n velocities.
On Gaussian targets the event clocks along straight lines have affine
hazards and are inverted in closed form; otherwise they are thinned
against envelopes built from the potential's gradient-Lipschitz bound.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .flows import HarmonicFlow, LinearTransportFlow, NumericFlow
from .intensities import ConstantRate, LinearHazard, ThinnedIntensity
from .kernels import AutoregressiveKernel, BounceKernel, FlipKernel, ReflectionKernel
from .process import Clock, PdmpSpec
from .targets import Potential

VARIANTS = ("zigzag", "bps", "rhmc", "pure_reflection", "transport")
HAZARDS = ("auto", "thinning")


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler choice and parameters.

    ``rate_perturbation`` (Zig-Zag only) adds ``c * 1[p_i > 0]`` to every
    switching rate; any c > 0 breaks invariance of μ and serves as a
    negative control.  The ``transport`` variant is a zero-rate diagnostic.
    """

    target: Potential
    variant: str
    lambda_ref: float = 1.0
    alpha: float = 0.0
    hazard: str = "auto"
    lookahead: float = 1.0
    rate_perturbation: float = 0.0
    step: float = 0.01

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown sampler variant {self.variant!r}; choose from {VARIANTS}")
        if self.hazard not in HAZARDS:
            raise ConfigurationError(f"hazard must be one of {HAZARDS}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.lambda_ref >= 0:
            raise ConfigurationError(f"lambda_ref must be >= 0, got {self.lambda_ref}")
        if self.variant == "rhmc" and self.lambda_ref <= 0:
            raise ConfigurationError("rhmc needs lambda_ref > 0")
        if self.variant == "bps" and self.alpha < 1 and self.lambda_ref <= 0:
            raise ConfigurationError("bps with alpha < 1 refreshes and needs lambda_ref > 0")
        if self.rate_perturbation < 0:
            raise ConfigurationError("rate_perturbation must be >= 0")
        if self.rate_perturbation and self.variant != "zigzag":
            raise ConfigurationError("rate_perturbation only applies to zigzag")


def _require_gradient(target):
    if target.gradient is None:
        raise ConfigurationError(f"target {target.name!r} provides no gradient")


def _split(z, n):
    z = np.asarray(z, dtype=float)
    return z[..., :n], z[..., n:]


def _refresh_clock(config, n):
    return Clock(ConstantRate(config.lambda_ref), AutoregressiveKernel(n, config.alpha))


def _closed_form(config):
    return config.hazard == "auto" and config.target.is_gaussian


def build_rhmc(config):
    """Hamiltonian flow g(q, p) = (p, -∇U(q)) with Exp(λ_ref) autoregressive refreshments."""
    target = config.target
    _require_gradient(target)
    n = target.dim
    if target.is_gaussian:
        flow = HarmonicFlow(target.precision, target.mean)
    else:
        def g(z):
            q, p = _split(z, n)
            return np.concatenate([p, -target.gradient(q)], axis=-1)

        dg = None
        if target.hessian is not None:
            def dg(z):
                J = np.zeros((2 * n, 2 * n))
                J[:n, n:] = np.eye(n)
                J[n:, :n] = -target.hessian(z[:n])
                return J

        flow = NumericFlow(g, max(1.0, target.lipschitz), 2 * n, jacobian=dg, step=config.step)
    return PdmpSpec(flow, [_refresh_clock(config, n)], name="rhmc")


def _zigzag_clock(config, i):
    target = config.target
    n = target.dim
    extra = config.rate_perturbation

    def rate(z):
        q, p = _split(z, n)
        pi = p[..., i]
        out = np.maximum(pi * target.gradient(q)[..., i], 0.0)
        return out + extra * (pi > 0) if extra else out

    if _closed_form(config) and not extra:
        prec = target.precision

        def coefficients(z):
            q, p = z[:n], z[n:]
            return p[i] * target.gradient(q)[i], p[i] * (prec[i] @ p)

        intensity = LinearHazard(rate, coefficients)
    else:
        L = target.lipschitz

        def envelope(z, tau):
            q, p = z[:n], z[n:]
            # p_i ∂_iU(q + sp) ≤ p_i ∂_iU(q) + |p_i| L s ‖p‖
            bound = p[i] * target.gradient(q)[i] + abs(p[i]) * L * tau * np.linalg.norm(p)
            return max(bound, 0.0) + (extra if p[i] > 0 else 0.0)

        intensity = ThinnedIntensity(rate, envelope, config.lookahead)
    return Clock(intensity, FlipKernel(n, i))


def build_zigzag(config):
    """Linear transport with one switching clock per coordinate, rate (p_i ∂_iU(q))₊."""
    _require_gradient(config.target)
    n = config.target.dim
    clocks = [_zigzag_clock(config, i) for i in range(n)]
    return PdmpSpec(LinearTransportFlow(n), clocks, name="zigzag")


def _gradient_rate_intensity(config):
    """Intensity ⟨∇U(q), p⟩₊ shared by BPS bounces and the pure reflection process."""
    target = config.target
    n = target.dim

    def rate(z):
        q, p = _split(z, n)
        return np.maximum(np.sum(target.gradient(q) * p, axis=-1), 0.0)

    if _closed_form(config):
        prec = target.precision

        def coefficients(z):
            q, p = z[:n], z[n:]
            return target.gradient(q) @ p, p @ prec @ p

        return LinearHazard(rate, coefficients)

    L = target.lipschitz

    def envelope(z, tau):
        q, p = z[:n], z[n:]
        # ⟨∇U(q + sp), p⟩ ≤ ⟨∇U(q), p⟩ + L s ‖p‖²
        return max(target.gradient(q) @ p + L * tau * (p @ p), 0.0)

    return ThinnedIntensity(rate, envelope, config.lookahead)


def build_bps(config):
    """Bounces at rate ⟨∇U(q), p⟩₊ plus autoregressive refreshments when α < 1."""
    target = config.target
    _require_gradient(target)
    n = target.dim
    clocks = [Clock(_gradient_rate_intensity(config), BounceKernel(target))]
    if config.alpha < 1 and config.lambda_ref > 0:
        clocks.append(_refresh_clock(config, n))
    return PdmpSpec(LinearTransportFlow(n), clocks, name="bps")


def build_pure_reflection(config):
    """Linear transport, full velocity reversal at rate ⟨∇U(q), p⟩₊."""
    target = config.target
    _require_gradient(target)
    n = target.dim
    clock = Clock(_gradient_rate_intensity(config), ReflectionKernel(n))
    return PdmpSpec(LinearTransportFlow(n), [clock], name="pure_reflection")


def build_transport(config):
    """Zero-rate diagnostic: the path is the straight-line flow."""
    n = config.target.dim
    return PdmpSpec(LinearTransportFlow(n), [Clock(ConstantRate(0.0), ReflectionKernel(n))], name="transport")


_BUILDERS = {
    "zigzag": build_zigzag,
    "bps": build_bps,
    "rhmc": build_rhmc,
    "pure_reflection": build_pure_reflection,
    "transport": build_transport,
}


def build_sampler(config):
    return _BUILDERS[config.variant](config)
