"""Deterministic dynamics between jumps.

Every flow solves dz/dt = g(z), z(0) = z0 and exposes the flow map, dense
trajectories and the action of its Jacobian.  Vector fields operate on
arrays of shape ``(..., d)``.
"""

import math

import numpy as np

from .errors import FlowError

LINEAR_TRANSPORT = "closed_form_linear_transport"
HARMONIC = "closed_form_harmonic"
NUMERIC = "numeric"

#: numeric flows take at least this many RK4 steps per call
MIN_STEPS = 16


def _as_state(z, dim):
    z = np.asarray(z, dtype=float)
    if z.shape != (dim,):
        raise ValueError(f"expected a state of shape ({dim},), got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise FlowError(f"non-finite initial state {z}", t=0.0, z=z)
    return z


def _check_time(t):
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"flow time must be finite and >= 0, got {t}")
    return t


class Flow:
    """Base class.  Subclasses set ``kind``, ``dim`` and ``lipschitz``."""

    kind = None
    dim = None
    lipschitz = None

    def vector_field(self, z):
        raise NotImplementedError

    def __call__(self, z, t):
        return self.trajectory(z, [t])[0]

    def trajectory(self, z, times):
        """States at the non-decreasing ``times`` (shape ``(len(times), d)``)."""
        raise NotImplementedError

    def jacobian_action(self, z, t, v):
        """Dφ_t(z) @ v for ``v`` of shape ``(d,)`` or ``(d, k)``."""
        raise NotImplementedError

    def jacobian(self, z, t):
        return self.jacobian_action(z, t, np.eye(self.dim))

    def g0_norm(self):
        """‖g(0)‖, used by the no-return and cutoff bounds."""
        return float(np.linalg.norm(self.vector_field(np.zeros(self.dim))))


class LinearTransportFlow(Flow):
    """φ_t(q, p) = (q + t p, p) on phase space of dimension ``2 * n``."""

    kind = LINEAR_TRANSPORT
    lipschitz = 1.0

    def __init__(self, n):
        self.n = int(n)
        self.dim = 2 * self.n

    def vector_field(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        out[..., : self.n] = z[..., self.n :]
        return out

    def trajectory(self, z, times):
        times = np.asarray(times, dtype=float)
        out = np.repeat(np.asarray(z, dtype=float)[None, :], times.size, axis=0)
        out[:, : self.n] += times[:, None] * out[:, self.n :]
        return out

    def jacobian_action(self, z, t, v):
        v = np.array(v, dtype=float)
        v[: self.n] += t * v[self.n :]
        return v


class HarmonicFlow(Flow):
    """Hamiltonian flow of U(q) = ½ (q - m)ᵀ P (q - m), solved in closed form.

    g(q, p) = (p, -P(q - m)).  With P = V diag(ω²) Vᵀ each eigen-coordinate
    rotates with angular frequency ω.
    """

    kind = HARMONIC

    def __init__(self, precision, mean=None):
        precision = np.atleast_2d(np.asarray(precision, dtype=float))
        self.n = precision.shape[0]
        self.dim = 2 * self.n
        self.precision = precision
        self.mean = np.zeros(self.n) if mean is None else np.asarray(mean, dtype=float)
        evals, self._basis = np.linalg.eigh(precision)
        if evals.min() <= 0:
            raise ValueError("harmonic flow needs a positive definite precision")
        self._omega = np.sqrt(evals)
        # ‖[[0, I], [-P, 0]]‖ = max(1, λ_max(P))
        self.lipschitz = float(max(1.0, evals.max()))

    def vector_field(self, z):
        z = np.asarray(z, dtype=float)
        q, p = z[..., : self.n], z[..., self.n :]
        return np.concatenate([p, -(q - self.mean) @ self.precision], axis=-1)

    def _rotate(self, x, y, times):
        wt = np.multiply.outer(times, self._omega)
        c, s = np.cos(wt), np.sin(wt)
        xt = c * x + (s / self._omega) * y
        yt = -self._omega * s * x + c * y
        return xt, yt

    def trajectory(self, z, times):
        times = np.asarray(times, dtype=float)
        z = np.asarray(z, dtype=float)
        x = (z[: self.n] - self.mean) @ self._basis
        y = z[self.n :] @ self._basis
        xt, yt = self._rotate(x, y, times)
        out = np.concatenate([self.mean + xt @ self._basis.T, yt @ self._basis.T], axis=1)
        out[times == 0] = z
        return out

    def jacobian_action(self, z, t, v):
        v = np.asarray(v, dtype=float)
        vv = v if v.ndim == 2 else v[:, None]
        x = self._basis.T @ vv[: self.n]
        y = self._basis.T @ vv[self.n :]
        wt = self._omega * t
        c, s = np.cos(wt)[:, None], np.sin(wt)[:, None]
        om = self._omega[:, None]
        xt = c * x + (s / om) * y
        yt = -om * s * x + c * y
        out = np.concatenate([self._basis @ xt, self._basis @ yt], axis=0)
        return out if v.ndim == 2 else out[:, 0]


class NumericFlow(Flow):
    """Classical fixed-step RK4 for a general Lipschitz vector field.

    Each call over a gap ``t`` uses ``max(MIN_STEPS, ceil(t / step))`` equal
    steps, so replays of the same gap are bit-identical.  ``jacobian`` is the
    analytic Dg; without it Dg·v falls back to central differences with step
    ``1e-6 * (1 + ‖z‖)``.
    """

    kind = NUMERIC

    def __init__(self, vector_field, lipschitz, dim, jacobian=None, step=0.01):
        if lipschitz <= 0:
            raise ValueError("Lipschitz constant must be positive")
        if step <= 0:
            raise ValueError("step must be positive")
        self._g = vector_field
        self._dg = jacobian
        self.lipschitz = float(lipschitz)
        self.dim = int(dim)
        self.step = float(step)

    def vector_field(self, z):
        return np.asarray(self._g(np.asarray(z, dtype=float)), dtype=float)

    def _n_steps(self, t):
        return max(MIN_STEPS, math.ceil(t / self.step))

    def _advance(self, z, t):
        if t == 0:
            return z.copy()
        n = self._n_steps(t)
        h = t / n
        g = self.vector_field
        # overflow surfaces as a FlowError below rather than as warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(n):
                k1 = g(z)
                k2 = g(z + 0.5 * h * k1)
                k3 = g(z + 0.5 * h * k2)
                k4 = g(z + h * k3)
                z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise FlowError(f"RK4 blow-up over time {t}", t=t, z=z)
        return z

    def trajectory(self, z, times):
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, self.dim))
        state = np.asarray(z, dtype=float)
        prev = 0.0
        for i, t in enumerate(times):
            state = self._advance(state, t - prev)
            out[i] = state
            prev = t
        return out

    def dg_action(self, z, v):
        """Dg(z) @ v for ``v`` of shape ``(d, k)``."""
        if self._dg is not None:
            return np.asarray(self._dg(z), dtype=float) @ v
        norms = np.linalg.norm(v, axis=0)
        safe = np.where(norms > 0, norms, 1.0)
        u = (v / safe).T
        eps = 1e-6 * (1.0 + np.linalg.norm(z))
        diff = self.vector_field(z + eps * u) - self.vector_field(z - eps * u)
        return (diff / (2.0 * eps)).T * norms

    def jacobian_action(self, z, t, v):
        v = np.asarray(v, dtype=float)
        V = v if v.ndim == 2 else v[:, None]
        x = np.asarray(z, dtype=float)
        if t > 0:
            n = self._n_steps(t)
            h = t / n
            g, dg = self.vector_field, self.dg_action
            for _ in range(n):
                k1, m1 = g(x), dg(x, V)
                x2, V2 = x + 0.5 * h * k1, V + 0.5 * h * m1
                k2, m2 = g(x2), dg(x2, V2)
                x3, V3 = x + 0.5 * h * k2, V + 0.5 * h * m2
                k3, m3 = g(x3), dg(x3, V3)
                x4, V4 = x + h * k3, V + h * m3
                k4, m4 = g(x4), dg(x4, V4)
                x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                V = V + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(V))):
                raise FlowError(f"variational RK4 blow-up over time {t}", t=t, z=z)
        return V if v.ndim == 2 else V[:, 0]


def scalar_exponential_flow(step=0.01):
    """g(x) = x on ℝ: φ_t(z) = z eᵗ, the case where ‖Dφ_t‖ ≤ e^{Lt} is sharp."""
    return NumericFlow(lambda z: z, lipschitz=1.0, dim=1, jacobian=lambda z: np.eye(1), step=step)


def evaluate_flow(flow, z, t):
    """φ_t(z) with input validation and blow-up detection."""
    z = _as_state(z, flow.dim)
    t = _check_time(t)
    out = flow(z, t)
    if not np.all(np.isfinite(out)):
        raise FlowError(f"flow produced a non-finite state at t={t} from z={z}", t=t, z=z)
    return out


def flow_jacobian_action(flow, z, t, v):
    """Dφ_t(z) @ v, integrated alongside the flow for numeric kinds."""
    z = _as_state(z, flow.dim)
    t = _check_time(t)
    v = np.asarray(v, dtype=float)
    if v.shape[0] != flow.dim:
        raise ValueError(f"direction has leading dimension {v.shape[0]}, flow has {flow.dim}")
    out = flow.jacobian_action(z, t, v)
    if not np.all(np.isfinite(out)):
        raise FlowError(f"Jacobian action non-finite at t={t} from z={z}", t=t, z=z)
    return out
