"""Numerical checks of the flow and path Jacobian bounds, the no-return
lower bound and the structural assumptions on jump kernels.

Every check returns a :class:`BoundReport`.  ``margin`` is signed so that a
negative value means the inequality is violated; a report passes when
``margin >= -tolerance``.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .errors import PdmpError
from .reports import Check

#: relative slack on operator-norm bounds, covering integrator and FD error
NORM_RTOL = 1e-3
#: full Jacobians are assembled up to this dimension, power iteration above
DENSE_MAX_DIM = 8


class PowerIterationError(PdmpError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


@dataclass
class BoundReport:
    """``checked`` against ``bound``; ``sense='upper'`` means checked ≤ bound."""

    name: str
    checked: float
    bound: float
    tolerance: float
    sense: str = "upper"
    context: Dict[str, Any] = field(default_factory=dict)
    skipped: Optional[str] = None

    @property
    def margin(self):
        if self.sense == "upper":
            return self.bound - self.checked
        return self.checked - self.bound

    @property
    def passed(self):
        if self.skipped is not None:
            return True
        return bool(self.margin >= -self.tolerance)

    def to_check(self):
        details = {"bound": self.bound, "checked": self.checked, "margin": self.margin, "sense": self.sense}
        details.update(self.context)
        return Check(self.name, float(self.checked), 0.0, float(self.bound), self.passed, details, self.skipped)


# ---------------------------------------------------------------- flows


def _adjoint_action(flow, z, t, w):
    """Dφ_t(z)ᵀ w = ∇_z ⟨w, φ_t(z)⟩ by central differences."""
    eps = 1e-6 * (1.0 + np.linalg.norm(z))
    out = np.empty(flow.dim)
    for j in range(flow.dim):
        e = np.zeros(flow.dim)
        e[j] = eps
        out[j] = w @ (flow(z + e, t) - flow(z - e, t)) / (2.0 * eps)
    return out


def jacobian_norm_flow(flow, z, t, max_iter=50, rtol=1e-10):
    """Operator norm ‖Dφ_t(z)‖₂.

    Dense SVD for d ≤ DENSE_MAX_DIM.  Above that, power iteration on DᵀD
    (variational forward actions, finite-difference adjoints) with a
    Rayleigh-Ritz step over all iterates, which copes with clustered top
    singular values.  Stops when the estimate moves by less than ``rtol``.
    """
    z = np.asarray(z, dtype=float)
    if t < 0:
        raise ValueError("t must be >= 0")
    if flow.dim <= DENSE_MAX_DIM:
        return float(np.linalg.norm(flow.jacobian(z, t), 2))
    basis, images = [], []
    u = np.ones(flow.dim)
    history = []
    sigma = 0.0
    for _ in range(min(max_iter, flow.dim)):
        for q in basis:
            u = u - (q @ u) * q
        nu = np.linalg.norm(u)
        if nu <= 1e-12 * (1.0 + sigma):
            return sigma  # the iterates span an invariant subspace
        basis.append(u / nu)
        images.append(flow.jacobian_action(z, t, basis[-1]))
        W = np.column_stack(images)
        _, s, vt = np.linalg.svd(W, full_matrices=False)
        new = float(s[0])
        history.append(new)
        if sigma and abs(new - sigma) <= rtol * new:
            return new
        sigma = new
        x = np.column_stack(basis) @ vt[0]
        u = _adjoint_action(flow, z, t, flow.jacobian_action(z, t, x))
    if len(basis) == flow.dim:
        return sigma
    raise PowerIterationError(f"power iteration did not converge in {max_iter} iterations", history)


def flow_bound_report(flow, z, t):
    """‖Dφ_t(z)‖ against e^{Lt} with NORM_RTOL relative slack."""
    bound = math.exp(flow.lipschitz * t)
    norm = jacobian_norm_flow(flow, z, t)
    return BoundReport("gronwall_flow", norm, bound, NORM_RTOL * bound, context={"t": float(t), "kind": flow.kind})


# ---------------------------------------------------------------- paths


def _kernel_jacobian(kernel, z, xi):
    if kernel.is_linear:
        return kernel.jacobian(z, xi)
    if hasattr(kernel, "reflection"):
        return kernel.jacobian(z, xi)
    eps = 1e-6 * (1.0 + np.linalg.norm(z))
    J = np.empty((kernel.dim, kernel.dim))
    for j in range(kernel.dim):
        e = np.zeros(kernel.dim)
        e[j] = eps
        J[:, j] = (kernel.apply(z + e, xi) - kernel.apply(z - e, xi)) / (2.0 * eps)
    return J


def composed_jacobian(spec, skeleton):
    """Chain-rule Jacobian of z0 ↦ Z_T with event gaps and noise held fixed."""
    J = np.eye(spec.dim)
    prev_t = 0.0
    state = skeleton.initial_state
    for ev in skeleton.events:
        J = spec.flow.jacobian_action(state, ev.t - prev_t, J)
        J = _kernel_jacobian(spec.clocks[ev.clock].kernel, ev.pre, ev.xi) @ J
        prev_t, state = ev.t, ev.post
    return spec.flow.jacobian_action(state, skeleton.horizon - prev_t, J)


def frozen_path_map(spec, skeleton):
    """z0 ↦ Z_T replaying the recorded gaps and noise (events always fire)."""
    gaps = np.diff([0.0] + [ev.t for ev in skeleton.events])
    tail = skeleton.horizon - (skeleton.events[-1].t if skeleton.events else 0.0)

    def F(z):
        z = np.asarray(z, dtype=float)
        for gap, ev in zip(gaps, skeleton.events):
            z = spec.clocks[ev.clock].kernel.apply(spec.flow(z, gap), ev.xi)
        return spec.flow(z, tail)

    return F


def finite_difference_path_jacobian(spec, skeleton, eps=None):
    """Central-difference Jacobian of :func:`frozen_path_map` at z0."""
    z0 = skeleton.initial_state
    F = frozen_path_map(spec, skeleton)
    eps = 1e-6 * (1.0 + np.linalg.norm(z0)) if eps is None else eps
    J = np.empty((spec.dim, spec.dim))
    for j in range(spec.dim):
        e = np.zeros(spec.dim)
        e[j] = eps
        J[:, j] = (F(z0 + e) - F(z0 - e)) / (2.0 * eps)
    return J


def gronwall_check_path(spec, skeleton, rtol=NORM_RTOL):
    """Composed path Jacobian norm against e^{L·horizon}.

    Bounce kernels are not subcontractive in q, so skeletons containing
    bounces are judged on the p-block reflection norms (must equal 1); the
    full composed norm is still measured and reported in ``context``.
    """
    L = spec.flow.lipschitz
    bound = math.exp(L * skeleton.horizon)
    ctx = {"events": len(skeleton), "horizon": float(skeleton.horizon), "bound_full": bound}
    bounce_events = []
    for k, ev in enumerate(skeleton.events):
        kernel = spec.clocks[ev.clock].kernel
        if hasattr(kernel, "is_differentiable_at") and not kernel.is_differentiable_at(ev.pre):
            return BoundReport(
                "gronwall_path", float("nan"), bound, rtol * bound, context=dict(ctx, event=k),
                skipped=f"kernel of clock {ev.clock} not differentiable at event {k}",
            )
        if not kernel.is_subcontractive:
            bounce_events.append(k)
    J = composed_jacobian(spec, skeleton)
    norm = float(np.linalg.norm(J, 2))
    ctx["full_norm"] = norm
    if not bounce_events:
        return BoundReport("gronwall_path", norm, bound, rtol * bound, context=ctx)
    worst = 0.0
    for k in bounce_events:
        ev = skeleton.events[k]
        refl = spec.clocks[ev.clock].kernel.reflection(ev.pre[: spec.dim // 2])
        worst = max(worst, abs(np.linalg.norm(refl, 2) - 1.0))
    ctx["bounce_events"] = len(bounce_events)
    return BoundReport(
        "gronwall_path_bounce_p_block", worst, 0.0, 1e-12, context=ctx,
    )


# ---------------------------------------------------------------- no return


def no_return_rhs(z_norm_sq, t, lipschitz, g0_norm):
    """‖z‖² e^{At} + (B/A)(e^{At} - 1) with A = -4L, B = -‖g(0)‖²/L."""
    A = -4.0 * lipschitz
    B = -(g0_norm**2) / lipschitz
    e = np.exp(A * np.asarray(t, dtype=float))
    return z_norm_sq * e + (B / A) * (e - 1.0)


def no_return_check(flow, z, t_grid, tol=1e-9):
    """Worst-case ‖φ_t(z)‖² - lower bound over the sorted ``t_grid``."""
    z = np.asarray(z, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    L, g0 = flow.lipschitz, flow.g0_norm()
    lhs = np.sum(flow.trajectory(z, t_grid) ** 2, axis=1)
    rhs = no_return_rhs(z @ z, t_grid, L, g0)
    i = int(np.argmin(lhs - rhs))
    ctx = {"t": float(t_grid[i]), "z_norm": float(np.linalg.norm(z)), "A": -4.0 * L, "B": -(g0**2) / L}
    if g0 > 0:
        # the B = -‖g(0)‖/L variant, reported for comparison only
        alt = z @ z * np.exp(-4 * L * t_grid) + (g0 / L) / (4 * L) * (np.exp(-4 * L * t_grid) - 1.0)
        ctx["margin_with_linear_B"] = float(np.min(lhs - alt))
    return BoundReport("no_return", float(lhs[i]), float(rhs[i]), tol, sense="lower", context=ctx)


# ---------------------------------------------------------------- kernels


def kernel_structure_check(kernel, n_pairs, rng, scale=3.0):
    """Probe subcontractivity and isometry on random states and shared noise.

    Returns ``[subcontractivity_report, isometry_report]``; a property the
    kernel does not declare is measured but reported as skipped.
    """
    d = kernel.dim
    X = scale * rng.standard_normal((n_pairs, d))
    Y = scale * rng.standard_normal((n_pairs, d))
    xi = kernel.sample_noise(rng, n_pairs)
    num = np.linalg.norm(kernel.apply(X, xi) - kernel.apply(Y, xi), axis=1)
    den = np.linalg.norm(X - Y, axis=1)
    ratio = float(np.max(num / den))
    sub = BoundReport(
        "kernel_subcontractive", ratio, 1.0, 1e-12, context={"pairs": n_pairs},
        skipped=None if kernel.is_subcontractive else f"not declared subcontractive (measured ratio {ratio:.6g})",
    )
    Z = np.vstack([np.zeros(d), X])
    xi_z = kernel.sample_noise(rng, Z.shape[0])
    norms = np.linalg.norm(Z, axis=1)
    dev = np.abs(np.linalg.norm(kernel.apply(Z, xi_z), axis=1) - norms) / np.maximum(norms, 1.0)
    worst = float(np.max(dev))
    iso = BoundReport(
        "kernel_isometric", worst, 0.0, 1e-12, context={"states": int(Z.shape[0])},
        skipped=None if kernel.is_isometric else f"not declared isometric (measured deviation {worst:.6g})",
    )
    return [sub, iso]
