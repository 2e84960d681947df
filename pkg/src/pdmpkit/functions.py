"""Smooth test functions with exact gradients, and the radial cutoff η_k.

Everything is built from the smooth step

    ψ(x) = 1 for x ≤ 0,  0 for x ≥ 1,  expit(1/x - 1/(1-x)) in between,

which is the exp(-1/u) construction written as a logistic.  Its slope peaks
at |ψ'(½)| = 2, which fixes the cutoff's outer radius: η falls from 1 at
radius 1 to 0 at radius 3 so that ‖∇η‖ ≤ 1.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

#: outer radius of the cutoff profile (η ≡ 0 outside B(0, CUTOFF_OUTER))
CUTOFF_OUTER = 3.0


def smooth_step(x):
    """ψ(x) and ψ'(x), elementwise."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    val = expit(1.0 / xs - 1.0 / (1.0 - xs))
    slope = -val * (1.0 - val) * (1.0 / xs**2 + 1.0 / (1.0 - xs) ** 2)
    val = np.where(inside, val, np.where(x <= 0, 1.0, 0.0))
    slope = np.where(inside, slope, 0.0)
    return val, slope


@dataclass(frozen=True)
class SmoothFunction:
    """A C¹ function on ℝ^d given by batched ``value`` and ``gradient``.

    ``support_radius`` is a radius R with f ≡ 0 outside B(0, R) (``inf`` if
    f is not compactly supported).
    """

    dim: int
    value: Callable
    gradient: Callable
    support_radius: float = np.inf

    def __call__(self, z):
        return self.value(z)


class TestFunction(SmoothFunction):
    """Radial bump around ``center``: 1 on B(c, a), 0 outside B(c, r)."""

    __test__ = False  # not a pytest class

    def __init__(self, center, inner, outer):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if not 0 <= inner < outer:
            raise ValueError(f"need 0 <= inner < outer, got {inner}, {outer}")
        width = outer - inner

        def value(z):
            rho = np.linalg.norm(np.asarray(z, dtype=float) - center, axis=-1)
            return smooth_step((rho - inner) / width)[0]

        def gradient(z):
            d = np.asarray(z, dtype=float) - center
            rho = np.linalg.norm(d, axis=-1, keepdims=True)
            slope = smooth_step((rho - inner) / width)[1]
            return np.where(rho > 0, slope / width * d / np.where(rho > 0, rho, 1.0), 0.0)

        super().__init__(center.size, value, gradient, float(np.linalg.norm(center) + outer))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "inner", float(inner))
        object.__setattr__(self, "outer", float(outer))


def bump(center, inner, outer):
    return TestFunction(center, inner, outer)


def zero_function(dim):
    return SmoothFunction(dim, lambda z: np.zeros(np.shape(z)[:-1]), lambda z: np.zeros(np.shape(z)), 0.0)


def gaussian_decay(dim):
    """exp(-‖z‖²/2): C¹, vanishing at infinity, not compactly supported."""

    def value(z):
        z = np.asarray(z, dtype=float)
        return np.exp(-0.5 * np.sum(z * z, axis=-1))

    def gradient(z):
        z = np.asarray(z, dtype=float)
        return -z * value(z)[..., None]

    return SmoothFunction(dim, value, gradient)


def random_bumps(rng, dim, count, center_scale=0.5, radius=None):
    """Bumps with random centres and radii sized to the bulk of N(0, I_dim).

    The outer radius is drawn around √dim so every bump carries
    appreciable mass under a standard Gaussian.
    """
    base = np.sqrt(dim) if radius is None else radius
    out = []
    for _ in range(count):
        center = center_scale * rng.standard_normal(dim)
        outer = base * rng.uniform(0.6, 1.4)
        inner = outer * rng.uniform(0.0, 0.6)
        out.append(TestFunction(center, inner, outer))
    return out


@dataclass(frozen=True)
class CutoffFunction:
    """η_k(x) = η(x / k); η ≡ 1 on B(0, 1), η ≡ 0 outside B(0, CUTOFF_OUTER)."""

    k: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("cutoff scale k must be >= 1")

    @property
    def outer_radius(self):
        return CUTOFF_OUTER * self.k

    def _radial(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1, keepdims=True) / self.k
        val, slope = smooth_step((r - 1.0) / (CUTOFF_OUTER - 1.0))
        return x, r, val, slope / (CUTOFF_OUTER - 1.0)

    def value(self, x):
        return self._radial(x)[2][..., 0]

    def gradient(self, x):
        x, r, _, slope = self._radial(x)
        # d/dx η(‖x‖/k) = η'(r) x / (k ‖x‖)
        return np.where(r > 0, slope * x / (self.k**2 * np.where(r > 0, r, 1.0)), 0.0)


def cutoff_apply(f, k):
    """f_k = η_k f, with ∇f_k = f ∇η_k + η_k ∇f and support radius CUTOFF_OUTER·k."""
    eta = CutoffFunction(k)

    def value(z):
        return eta.value(z) * f.value(z)

    def gradient(z):
        return f.value(z)[..., None] * eta.gradient(z) + eta.value(z)[..., None] * f.gradient(z)

    return SmoothFunction(f.dim, value, gradient, min(eta.outer_radius, f.support_radius))


def cutoff_remainder(f, k):
    """f_k - f = (η_k - 1) f, used to evaluate 𝓐f_k - 𝓐f without cancellation."""
    eta = CutoffFunction(k)

    def value(z):
        return (eta.value(z) - 1.0) * f.value(z)

    def gradient(z):
        return f.value(z)[..., None] * eta.gradient(z) + (eta.value(z) - 1.0)[..., None] * f.gradient(z)

    return SmoothFunction(f.dim, value, gradient)
