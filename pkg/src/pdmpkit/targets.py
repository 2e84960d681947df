"""Target potentials U with π(q) ∝ exp(-U(q)), and the product measure μ = π ⊗ N(0, I).

Normalizing constants are never computed: everything downstream only uses
U, ∇U and (when available) the Hessian.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import CapabilityError, ConfigurationError


@dataclass(frozen=True)
class Potential:
    """A potential on ℝⁿ with a certified gradient-Lipschitz bound ``lipschitz``.

    ``value``, ``gradient`` and ``hessian`` accept arrays of shape ``(..., n)``.
    Gaussian potentials also carry ``precision`` and ``mean``, which lets
    the samplers use closed-form flows and hazards.
    """

    dim: int
    value: Callable
    gradient: Callable
    lipschitz: float
    hessian: Optional[Callable] = None
    mean: Optional[np.ndarray] = None
    covariance: Optional[np.ndarray] = None
    sampler: Optional[Callable] = None
    precision: Optional[np.ndarray] = None
    name: str = "custom"

    @property
    def is_gaussian(self):
        return self.precision is not None

    def sample(self, rng, size):
        """``size`` i.i.d. draws from π, shape ``(size, n)``."""
        if self.sampler is None:
            raise CapabilityError(f"potential {self.name!r} has no exact sampler")
        return self.sampler(rng, size)


def _spd(covariance):
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14):
        raise ConfigurationError("covariance must be a symmetric square matrix")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ConfigurationError("covariance is not positive definite") from None
    return cov, chol


def gaussian_potential(mean, covariance):
    """U(q) = ½ (q-m)ᵀ Σ⁻¹ (q-m), with L_U = λ_max(Σ⁻¹) and an exact sampler."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov, chol = _spd(covariance)
    if cov.shape[0] != mean.size:
        raise ConfigurationError(f"mean has length {mean.size}, covariance is {cov.shape}")
    prec = np.linalg.inv(cov)
    prec = 0.5 * (prec + prec.T)
    n = mean.size

    def value(q):
        d = np.asarray(q, dtype=float) - mean
        return 0.5 * np.einsum("...i,ij,...j->...", d, prec, d)

    def gradient(q):
        return (np.asarray(q, dtype=float) - mean) @ prec

    def hessian(q):
        return np.broadcast_to(prec, np.shape(q)[:-1] + (n, n))

    def sampler(rng, size):
        return mean + rng.standard_normal((size, n)) @ chol.T

    return Potential(
        dim=n,
        value=value,
        gradient=gradient,
        lipschitz=float(np.linalg.eigvalsh(prec).max()),
        hessian=hessian,
        mean=mean,
        covariance=cov,
        sampler=sampler,
        precision=prec,
        name="gaussian",
    )


def standard_gaussian(n):
    return gaussian_potential(np.zeros(n), np.eye(n))


def gaussian_mixture_potential(weights, means, covariance):
    """U(q) = -log Σ_i w_i exp(-½ (q-m_i)ᵀ Σ⁻¹ (q-m_i)) with a shared Σ.

    The gradient is P(q - m̄(q)) where m̄(q) is the responsibility-weighted
    mean, and the Hessian is P - P C(q) P with C(q) the responsibility
    covariance of the means.  Since tr(P^½ C P^½) ≤ max_i ‖P^½(m_i - m̄)‖² for
    the plain average m̄, the certified bound is

        L_U = λ_max(P) (1 + max_i ‖Σ^{-½}(m_i - m̄)‖²).
    """
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    means = np.atleast_2d(np.asarray(means, dtype=float))
    if weights.size == 0 or means.shape[0] == 0:
        raise ConfigurationError("mixture needs at least one component")
    if weights.size != means.shape[0]:
        raise ConfigurationError("one weight per component mean is required")
    if np.any(weights <= 0) or not np.isclose(weights.sum(), 1.0, rtol=0, atol=1e-12):
        raise ConfigurationError("mixture weights must be positive and sum to 1")
    cov, chol = _spd(covariance)
    n = means.shape[1]
    if cov.shape[0] != n:
        raise ConfigurationError("covariance dimension does not match the means")
    prec = np.linalg.inv(cov)
    prec = 0.5 * (prec + prec.T)
    log_w = np.log(weights)

    def _log_terms(q):
        d = np.asarray(q, dtype=float)[..., None, :] - means
        return log_w - 0.5 * np.einsum("...ki,ij,...kj->...k", d, prec, d), d

    def value(q):
        terms, _ = _log_terms(q)
        return -logsumexp(terms, axis=-1)

    def _responsibilities(q):
        terms, d = _log_terms(q)
        r = np.exp(terms - logsumexp(terms, axis=-1, keepdims=True))
        return r, d

    def gradient(q):
        r, d = _responsibilities(q)
        return np.einsum("...k,...ki->...i", r, d) @ prec

    def hessian(q):
        r, _ = _responsibilities(q)
        mbar = r @ means
        centred = means - mbar[..., None, :]
        C = np.einsum("...k,...ki,...kj->...ij", r, centred, centred)
        return prec - prec @ C @ prec

    evals, evecs = np.linalg.eigh(cov)
    inv_sqrt = evecs @ np.diag(evals**-0.5) @ evecs.T
    spread = np.max(np.sum(((means - means.mean(axis=0)) @ inv_sqrt) ** 2, axis=1))
    lipschitz = float(np.linalg.eigvalsh(prec).max() * (1.0 + spread))

    mixture_mean = weights @ means
    centred = means - mixture_mean
    mixture_cov = cov + (weights[:, None] * centred).T @ centred

    def sampler(rng, size):
        comp = rng.choice(weights.size, size=size, p=weights)
        return means[comp] + rng.standard_normal((size, n)) @ chol.T

    return Potential(
        dim=n,
        value=value,
        gradient=gradient,
        lipschitz=lipschitz,
        hessian=hessian,
        mean=mixture_mean,
        covariance=mixture_cov,
        sampler=sampler,
        name="gaussian_mixture",
    )


@dataclass(frozen=True)
class ReferenceMeasure:
    """μ = π ⊗ N(0, I_n) on phase space ℝ^{2n}."""

    potential: Potential

    @property
    def dim(self):
        return 2 * self.potential.dim

    def sample(self, rng, size):
        q = self.potential.sample(rng, size)
        p = rng.standard_normal((size, self.potential.dim))
        return np.concatenate([q, p], axis=1)


def sample_reference(measure, n, rng):
    """``n`` i.i.d. phase-space draws from μ, shape ``(n, 2 * dim)``."""
    if measure.potential.sampler is None:
        raise CapabilityError(f"potential {measure.potential.name!r} has no exact sampler")
    if n == 0:
        return np.empty((0, measure.dim))
    return measure.sample(rng, n)
