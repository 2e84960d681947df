"""Jump kernels z' = R(z, ξ) on phase space z = (q, p) ∈ ℝ^{2n}.

``apply`` broadcasts: ``z`` of shape ``(..., 2n)`` against noise of shape
``(..., n)``.  Deterministic kernels take ``xi=None``.
"""

import numpy as np

# ‖∇U(q)‖ below this makes a bounce a no-op
BOUNCE_GRAD_FLOOR = 1e-14


class JumpKernel:
    dim = None
    is_deterministic = True
    is_isometric = False
    is_subcontractive = False
    #: True when DR(z) does not depend on z (flips, reflections, refreshments)
    is_linear = False

    def apply(self, z, xi=None):
        raise NotImplementedError

    def sample_noise(self, rng, shape=()):
        return None

    def jacobian(self, z, xi=None):
        """DR^ξ(z) as a ``(d, d)`` matrix."""
        raise NotImplementedError

    def explains(self, pre, post, xi=None, rtol=1e-10):
        """Whether ``post`` is a possible image of ``pre`` (used for tamper checks).

        With the recorded noise ``xi`` random kernels are checked exactly.
        """
        if self.is_deterministic or xi is not None:
            expected = self.apply(pre, xi)
            return np.linalg.norm(expected - post) <= rtol * (1.0 + np.linalg.norm(expected))
        return True

    @property
    def n(self):
        return self.dim // 2


class FlipKernel(JumpKernel):
    """Negate one velocity coordinate (a Zig-Zag switch)."""

    is_isometric = True
    is_subcontractive = True
    is_linear = True

    def __init__(self, n, index):
        if not 0 <= index < n:
            raise ValueError(f"flip index {index} out of range for n={n}")
        self.dim = 2 * n
        self.index = index

    def apply(self, z, xi=None):
        out = np.array(z, dtype=float)
        out[..., self.n + self.index] *= -1.0
        return out

    def jacobian(self, z=None, xi=None):
        J = np.eye(self.dim)
        J[self.n + self.index, self.n + self.index] = -1.0
        return J


class ReflectionKernel(JumpKernel):
    """(q, p) ↦ (q, -p)."""

    is_isometric = True
    is_subcontractive = True
    is_linear = True

    def __init__(self, n):
        self.dim = 2 * n

    def apply(self, z, xi=None):
        out = np.array(z, dtype=float)
        out[..., self.n :] *= -1.0
        return out

    def jacobian(self, z=None, xi=None):
        return np.diag(np.r_[np.ones(self.n), -np.ones(self.n)])


class BounceKernel(JumpKernel):
    """Reflect p off the hyperplane orthogonal to ∇U(q); q is untouched.

    Isometric (the reflection is orthogonal in p), but the dependence on q
    through ∇U means the full Jacobian is not bounded by one in general.
    """

    is_isometric = True
    is_subcontractive = False

    def __init__(self, potential):
        self.potential = potential
        self.dim = 2 * potential.dim

    def apply(self, z, xi=None):
        z = np.asarray(z, dtype=float)
        n = self.n
        q, p = z[..., :n], z[..., n:]
        grad = self.potential.gradient(q)
        sq = np.sum(grad * grad, axis=-1, keepdims=True)
        ok = sq >= BOUNCE_GRAD_FLOOR**2
        coef = np.where(ok, 2.0 * np.sum(grad * p, axis=-1, keepdims=True) / np.where(ok, sq, 1.0), 0.0)
        out = z.copy()
        out[..., n:] = p - coef * grad
        return out

    def reflection(self, q):
        """The p-block I - 2uuᵀ with u = ∇U(q)/‖∇U(q)‖ (identity if ∇U vanishes)."""
        grad = self.potential.gradient(np.asarray(q, dtype=float))
        norm = np.linalg.norm(grad)
        if norm < BOUNCE_GRAD_FLOOR:
            return np.eye(self.n)
        u = grad / norm
        return np.eye(self.n) - 2.0 * np.outer(u, u)

    def is_differentiable_at(self, z):
        return np.linalg.norm(self.potential.gradient(np.asarray(z)[: self.n])) >= BOUNCE_GRAD_FLOOR

    def jacobian(self, z, xi=None):
        # p-block analytic; q-block by central differences of the map
        z = np.asarray(z, dtype=float)
        n = self.n
        J = np.zeros((self.dim, self.dim))
        J[:n, :n] = np.eye(n)
        J[n:, n:] = self.reflection(z[:n])
        eps = 1e-6 * (1.0 + np.linalg.norm(z[:n]))
        for j in range(n):
            e = np.zeros(self.dim)
            e[j] = eps
            J[n:, j] = (self.apply(z + e)[n:] - self.apply(z - e)[n:]) / (2.0 * eps)
        return J


class AutoregressiveKernel(JumpKernel):
    """(q, p) ↦ (q, αp + √(1-α²) ξ) with ξ ~ N(0, I_n)."""

    is_subcontractive = True
    is_linear = True

    def __init__(self, n, alpha):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        self.dim = 2 * n
        self.alpha = float(alpha)
        self.is_deterministic = alpha == 1.0
        self.is_isometric = alpha == 1.0
        self._mix = float(np.sqrt(1.0 - self.alpha**2))

    def sample_noise(self, rng, shape=()):
        if self.is_deterministic:
            return None
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        return rng.standard_normal(shape + (self.n,))

    def apply(self, z, xi=None):
        z = np.asarray(z, dtype=float)
        if xi is None:
            if not self.is_deterministic:
                raise ValueError("autoregressive kernel with alpha < 1 needs noise")
            return z.copy()
        xi = np.asarray(xi, dtype=float)
        lead = np.broadcast_shapes(z.shape[:-1], xi.shape[:-1])
        out = np.array(np.broadcast_to(z, lead + (self.dim,)))
        out[..., self.n :] = self.alpha * out[..., self.n :] + self._mix * xi
        return out

    def jacobian(self, z=None, xi=None):
        return np.diag(np.r_[np.ones(self.n), np.full(self.n, self.alpha)])

    def explains(self, pre, post, xi=None, rtol=1e-10):
        if self.is_deterministic or xi is not None:
            return super().explains(pre, post, xi, rtol)
        # positions never move at a refreshment
        return np.linalg.norm(pre[: self.n] - post[: self.n]) <= rtol * (1.0 + np.linalg.norm(pre[: self.n]))


def apply_jump(kernel, z, rng):
    """Draw ξ from the kernel's noise law and return ``(R(z, ξ), ξ)``.

    Deterministic kernels record ``None`` as their noise token.
    """
    xi = kernel.sample_noise(rng)
    out = kernel.apply(z, xi)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"jump produced a non-finite state from z={np.asarray(z).tolist()}")
    return out, xi
