"""Generator-based diagnostics.

𝓐f(z) = ⟨∇f(z), g(z)⟩ + Σ_i λ_i(z) (Q_i f(z) - f(z)),   Q_i f(z) = E f(R_i(z, ξ)).

Q_i is exact for deterministic kernels and a Monte Carlo average otherwise.
On top of the pointwise generator this module estimates ∫𝓐f dμ, the
Dynkin martingale f(Z_t) - f(Z_0) - ∫_0^t 𝓐f(Z_s) ds, the semigroup
P_t f(z), and the cutoff gaps sup|𝓐(η_k f) - 𝓐f|.
"""

import math

import numpy as np

from .errors import QuadratureError
from .functions import CUTOFF_OUTER, cutoff_remainder
from .process import simulate_skeleton
from .skeleton import evaluate_trajectory

#: |estimate| ≤ PASS_SIGMAS · SE is the statistical pass rule everywhere
PASS_SIGMAS = 4.0


def generator_batch(spec, f, Z, rng=None, q_samples=256):
    """𝓐f at the rows of ``Z``; returns ``(values, standard_errors)``.

    The standard error is the Monte Carlo error of the random-kernel Q terms
    (zero when every kernel is deterministic, NaN when ``q_samples == 1``).
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    m = Z.shape[0]
    out = np.sum(f.gradient(Z) * spec.flow.vector_field(Z), axis=-1)
    var = np.zeros(m)
    fz = None
    for clock in spec.clocks:
        lam = np.asarray(clock.intensity.rate(Z), dtype=float)
        if not np.any(lam):
            continue
        if fz is None:
            fz = f.value(Z)
        kernel = clock.kernel
        if kernel.is_deterministic:
            qf = f.value(kernel.apply(Z))
        else:
            if rng is None:
                raise ValueError("a random kernel needs an rng for its Q estimate")
            xi = kernel.sample_noise(rng, (q_samples, m))
            vals = f.value(kernel.apply(Z[None], xi))
            qf = vals.mean(axis=0)
            if q_samples > 1:
                var += lam**2 * vals.var(axis=0, ddof=1) / q_samples
            else:
                var += np.where(lam > 0, np.nan, 0.0)
        out = out + lam * (qf - fz)
    return out, np.sqrt(var)


def apply_generator(spec, f, z, q_samples=256, rng=None, return_se=False):
    """𝓐f(z) at a single state (optionally with the Q-sampling standard error)."""
    val, se = generator_batch(spec, f, np.asarray(z, dtype=float)[None], rng=rng, q_samples=q_samples)
    if not math.isfinite(val[0]):
        raise FloatingPointError(f"generator is non-finite at z={np.asarray(z).tolist()}")
    return (float(val[0]), float(se[0])) if return_se else float(val[0])


class _Moments:
    """Chan et al. pairwise update of (count, mean, M2), in a fixed order."""

    def __init__(self):
        self.n, self.mean, self.m2 = 0, 0.0, 0.0

    def add(self, x):
        x = np.asarray(x, dtype=float)
        nb = x.size
        if nb == 0:
            return
        mb = float(np.mean(x))
        m2b = float(np.sum((x - mb) ** 2))
        n = self.n + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta**2 * self.n * nb / n
        self.n = n

    @property
    def se(self):
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1) / self.n)


def invariance_residual(spec, f, measure, n, rng, q_samples=1, batch_size=1 << 16):
    """Monte Carlo estimate of ∫𝓐f dμ and its standard error.

    One kernel draw per sample (``q_samples=1``) keeps every summand
    unbiased; the standard error then covers the Q noise as well.  μ is
    invariant-consistent when ``|estimate| ≤ PASS_SIGMAS * SE``.
    """
    acc = _Moments()
    remaining = int(n)
    while remaining > 0:
        size = min(batch_size, remaining)
        Z = measure.sample(rng, size)
        vals, _ = generator_batch(spec, f, Z, rng=rng, q_samples=q_samples)
        acc.add(vals)
        remaining -= size
    return acc.mean, acc.se


def _simpson_weights(panels):
    if panels < 2 or panels % 2:
        raise ValueError("Simpson quadrature needs an even number of panels >= 2")
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * panels)


def path_generator_integrals(spec, f, skeleton, times, rng=None, panels=16, q_samples=256):
    """∫_0^t 𝓐f(Z_s) ds for each ``t`` in the sorted ``times``.

    Every inter-event segment (further split at the requested times) gets
    composite Simpson with ``panels`` sub-intervals along the flow.
    """
    times = np.asarray(times, dtype=float)
    weights = _simpson_weights(panels)
    unit = np.linspace(0.0, 1.0, panels + 1)
    pieces = []  # (segment index, end time, length)
    nodes = []
    segments = list(skeleton.segments(until=times[-1]))
    for seg_index, (start, state, end) in enumerate(segments):
        cuts = [start] + [t for t in times if start < t < end] + [end]
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b <= a:
                continue
            nodes.append(spec.flow.trajectory(state, (a - start) + (b - a) * unit))
            pieces.append((seg_index, b, b - a))
    if not pieces:
        return np.zeros(times.size)
    vals, _ = generator_batch(spec, f, np.concatenate(nodes), rng=rng, q_samples=q_samples)
    vals = vals.reshape(len(pieces), panels + 1)
    bad = ~np.all(np.isfinite(vals), axis=1)
    if np.any(bad):
        seg = pieces[int(np.argmax(bad))][0]
        start, _, end = segments[seg]
        raise QuadratureError(f"non-finite generator on segment {seg} = [{start}, {end}]")
    integrals = (vals @ weights) * np.array([p[2] for p in pieces])
    cumulative = np.cumsum(integrals)
    ends = np.array([p[1] for p in pieces])
    idx = np.searchsorted(ends, times, side="right") - 1
    return np.where(idx >= 0, cumulative[np.maximum(idx, 0)], 0.0)


def martingale_residuals(spec, f, z0, times, n_paths, rng, panels=16, q_samples=256):
    """Mean and SE of M_t = f(Z_t) - f(Z_0) - ∫_0^t 𝓐f(Z_s) ds at each ``t``.

    All times share one set of paths simulated to ``max(times)``.  Returns
    an array of shape ``(len(times), 2)`` with columns (mean, SE).
    """
    times = np.sort(np.atleast_1d(np.asarray(times, dtype=float)))
    z0 = np.asarray(z0, dtype=float)
    out = np.zeros((times.size, 2))
    positive = times > 0
    if not np.any(positive):
        return out
    ts = times[positive]
    f0 = float(f.value(z0))
    res = np.empty((n_paths, ts.size))
    for i in range(n_paths):
        sk = simulate_skeleton(spec, z0, ts[-1], rng)
        ends = np.array([f.value(evaluate_trajectory(sk, spec, t)) for t in ts])
        res[i] = ends - f0 - path_generator_integrals(spec, f, sk, ts, rng, panels, q_samples)
    mean = res.mean(axis=0)
    se = res.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros(ts.size)
    out[positive, 0] = mean
    out[positive, 1] = se
    return out


def martingale_residual(spec, f, z0, t, n_paths, rng, panels=16, q_samples=256):
    mean, se = martingale_residuals(spec, f, z0, [t], n_paths, rng, panels, q_samples)[0]
    return float(mean), float(se)


def semigroup_estimate(spec, f, z, t, n_paths, rng):
    """Monte Carlo P_t f(z) = E_z f(Z_t) with its standard error."""
    z = np.asarray(z, dtype=float)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return float(f.value(z)), 0.0
    vals = np.empty(n_paths)
    for i in range(n_paths):
        sk = simulate_skeleton(spec, z, t, rng)
        vals[i] = f.value(evaluate_trajectory(sk, spec, t))
    se = vals.std(ddof=1) / math.sqrt(n_paths) if n_paths > 1 else 0.0
    return float(vals.mean()), float(se)


def strong_continuity_probe(spec, f, states, ts, n_paths, rng, sup_grid=None, q_samples=256):
    """Compare sup_z |P̂_t f(z) - f(z)| over ``states`` with t · sup|𝓐f|.

    ``sup_grid`` (default: ``states``) is where sup|𝓐f| is taken.  Returns a
    list of dicts with keys ``t``, ``gap``, ``se``, ``bound`` where ``bound``
    is t · sup|𝓐f| + PASS_SIGMAS · se.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    grid = states if sup_grid is None else np.vstack([states, sup_grid])
    gen, _ = generator_batch(spec, f, grid, rng=rng, q_samples=q_samples)
    sup_gen = float(np.max(np.abs(gen)))
    fz = f.value(states)
    rows = []
    for t in ts:
        gaps, ses = [], []
        for z, f0 in zip(states, fz):
            est, se = semigroup_estimate(spec, f, z, t, n_paths, rng)
            gaps.append(abs(est - f0))
            ses.append(se)
        se = max(ses)
        rows.append({"t": float(t), "gap": max(gaps), "se": se, "bound": t * sup_gen + PASS_SIGMAS * se, "sup_generator": sup_gen})
    return rows


def core_convergence_probe(spec, f, k_list, grid, rng=None, q_samples=256):
    """sup over ``grid`` of |𝓐(η_k f) - 𝓐f| for each cutoff scale k.

    Evaluated as |𝓐((η_k - 1) f)| by linearity, so the gap carries no
    cancellation error.  The grid should cover B(0, CUTOFF_OUTER·max k).
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    gaps = []
    for k in k_list:
        vals, _ = generator_batch(spec, cutoff_remainder(f, k), grid, rng=rng, q_samples=q_samples)
        gaps.append(float(np.max(np.abs(vals))))
    return gaps


def core_gap_bound(spec, f, k, grid, rng=None, q_samples=256):
    """Dominating expression for the cutoff gap at scale k (isometric jumps).

    (c L + ‖g(0)‖) sup_{‖z‖≥k} |f(z)| + sup_{‖z‖≥k} |𝓐f(z)|, with c the
    cutoff's outer radius and both sups taken over ``grid``.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    outside = grid[np.linalg.norm(grid, axis=1) >= k]
    if outside.size == 0:
        return 0.0
    gen, _ = generator_batch(spec, f, outside, rng=rng, q_samples=q_samples)
    flow = spec.flow
    return float(
        (CUTOFF_OUTER * flow.lipschitz + flow.g0_norm()) * np.max(np.abs(f.value(outside)))
        + np.max(np.abs(gen))
    )


def box_grid(dim, radius, spacing):
    """Regular grid on [-radius, radius]^dim with the given spacing."""
    axis = np.arange(-radius, radius + 0.5 * spacing, spacing)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
