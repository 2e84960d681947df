import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdmpkit.bounds import (
    BoundReport,
    PowerIterationError,
    composed_jacobian,
    finite_difference_path_jacobian,
    flow_bound_report,
    gronwall_check_path,
    jacobian_norm_flow,
    kernel_structure_check,
    no_return_check,
    no_return_rhs,
)
from pdmpkit.flows import HarmonicFlow, LinearTransportFlow, NumericFlow, scalar_exponential_flow
from pdmpkit.kernels import AutoregressiveKernel, BounceKernel, FlipKernel, ReflectionKernel
from pdmpkit.process import simulate_skeleton
from pdmpkit.samplers import SamplerConfig, build_sampler
from pdmpkit.skeleton import Event, EventSkeleton
from pdmpkit.targets import gaussian_potential, standard_gaussian


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T / n + 0.3 * np.eye(n)


def test_identity_at_time_zero():
    for flow in (LinearTransportFlow(2), HarmonicFlow(np.eye(2)), scalar_exponential_flow()):
        assert jacobian_norm_flow(flow, np.ones(flow.dim), 0.0) == pytest.approx(1.0, abs=1e-14)


def test_scalar_flow_is_sharp():
    assert jacobian_norm_flow(scalar_exponential_flow(), np.array([0.7]), 1.0) == pytest.approx(math.e, rel=1e-9)
    rep = flow_bound_report(scalar_exponential_flow(), np.array([0.7]), 1.0)
    assert rep.passed and abs(rep.margin) <= 1e-8


@pytest.mark.parametrize("t", [0.3, 1.0, 4.2])
def test_rotation_has_unit_norm(t):
    flow = HarmonicFlow(np.eye(1))
    J = flow.jacobian(np.array([1.0, -2.0]), t)
    # oracle: singular values of a rotation matrix
    np.testing.assert_allclose(np.linalg.svd(J, compute_uv=False), [1.0, 1.0], atol=1e-14)
    assert jacobian_norm_flow(flow, np.array([1.0, -2.0]), t) == pytest.approx(1.0, abs=1e-13)
    assert jacobian_norm_flow(flow, np.array([1.0, -2.0]), t) <= math.exp(t)


def test_power_iteration_matches_dense_svd(rng):
    P = random_spd(rng, 10)
    flow = HarmonicFlow(P)
    z = rng.standard_normal(20)
    for t in (0.2, 1.5):
        dense = np.linalg.norm(flow.jacobian(z, t), 2)
        assert jacobian_norm_flow(flow, z, t) == pytest.approx(dense, rel=1e-6)


def test_power_iteration_on_numeric_flow(rng):
    P = random_spd(rng, 5)
    A = np.zeros((10, 10))
    A[:5, 5:] = np.eye(5)
    A[5:, :5] = -P
    flow = NumericFlow(lambda z: z @ A.T, max(1.0, np.linalg.eigvalsh(P).max()), 10, jacobian=lambda z: A, step=0.01)
    z = rng.standard_normal(10)
    dense = np.linalg.norm(flow.jacobian(z, 1.0), 2)
    assert jacobian_norm_flow(flow, z, 1.0) == pytest.approx(dense, rel=1e-6)
    assert dense <= math.exp(flow.lipschitz)


def test_power_iteration_failure_carries_history(rng):
    flow = HarmonicFlow(random_spd(rng, 10))
    with pytest.raises(PowerIterationError) as info:
        jacobian_norm_flow(flow, rng.standard_normal(20), 1.0, max_iter=2, rtol=0.0)
    assert len(info.value.history) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 5))
def test_gronwall_flow_bound_holds(seed, t):
    rng = np.random.default_rng(seed)
    flow = HarmonicFlow(random_spd(rng, 2), mean=rng.standard_normal(2))
    rep = flow_bound_report(flow, 3 * rng.standard_normal(4), t)
    assert rep.passed


def test_zero_event_path_reduces_to_flow():
    spec = build_sampler(SamplerConfig(standard_gaussian(1), "zigzag"))
    sk = EventSkeleton(np.array([0.0, 0.0]), 3.0)
    rep = gronwall_check_path(spec, sk)
    assert rep.checked == pytest.approx(jacobian_norm_flow(spec.flow, sk.initial_state, 3.0))
    assert rep.bound == pytest.approx(math.exp(3.0))


@pytest.mark.parametrize("variant", ["zigzag", "pure_reflection"])
def test_path_jacobian_chain_rule_matches_finite_differences(variant, rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(2), variant))
    for _ in range(20):
        sk = simulate_skeleton(spec, rng.standard_normal(4), 5.0, rng)
        J = composed_jacobian(spec, sk)
        fd = finite_difference_path_jacobian(spec, sk)
        assert np.linalg.norm(J - fd) <= 1e-4 * max(1.0, np.linalg.norm(J))
        rep = gronwall_check_path(spec, sk)
        assert rep.name == "gronwall_path" and rep.passed


def test_zigzag_kernel_jacobians_are_signed_identities(rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "zigzag"))
    for clock in spec.clocks:
        J = clock.kernel.jacobian()
        assert np.all(J == np.diag(np.diag(J))) and set(np.abs(np.diag(J))) == {1.0}


def test_bounce_path_judged_on_p_block(rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "bps", alpha=1.0))
    sk = simulate_skeleton(spec, rng.standard_normal(4), 5.0, rng)
    assert len(sk) > 0
    rep = gronwall_check_path(spec, sk)
    assert rep.name == "gronwall_path_bounce_p_block"
    assert rep.passed and rep.checked <= 1e-12
    assert "full_norm" in rep.context


def test_bounce_p_block_is_orthogonal_reflection(rng):
    k = BounceKernel(gaussian_potential(np.zeros(3), random_spd(rng, 3)))
    q = rng.standard_normal(3)
    R = k.reflection(q)
    u = k.potential.gradient(q)
    u = u / np.linalg.norm(u)
    np.testing.assert_allclose(R, np.eye(3) - 2 * np.outer(u, u), atol=1e-14)
    np.testing.assert_allclose(np.linalg.svd(R, compute_uv=False), np.ones(3), atol=1e-14)


def test_non_differentiable_bounce_is_skipped():
    spec = build_sampler(SamplerConfig(standard_gaussian(1), "bps", alpha=1.0))
    z = np.array([0.0, 1.0])
    ev = Event(0.5, z.copy(), z.copy(), 0, None)
    sk = EventSkeleton(np.array([-0.5, 1.0]), 1.0, [ev])
    rep = gronwall_check_path(spec, sk)
    assert rep.skipped and "event 0" in rep.skipped
    assert rep.passed


def test_no_return_examples():
    t = np.linspace(0, 5, 51)
    rep = no_return_check(LinearTransportFlow(1), np.array([1.0, 0.0]), t)
    assert rep.passed and rep.context["B"] == 0.0
    # scalar exponential: ‖φ_t(2)‖² = 4e^{2t} ≥ 4e^{-4t}
    rep = no_return_check(scalar_exponential_flow(), np.array([2.0]), t)
    np.testing.assert_allclose(no_return_rhs(4.0, t, 1.0, 0.0), 4 * np.exp(-4 * t))
    assert rep.passed and rep.margin >= 0
    rep = no_return_check(HarmonicFlow(np.eye(1)), np.array([0.3, 0.4]), np.array([0.0]))
    assert rep.checked == pytest.approx(rep.bound) == pytest.approx(0.25)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_no_return_holds_with_offset_equilibrium(seed):
    rng = np.random.default_rng(seed)
    flow = HarmonicFlow(random_spd(rng, 2), mean=2 * rng.standard_normal(2))
    z = rng.standard_normal(4) * rng.uniform(0, 20)
    assert no_return_check(flow, z, np.linspace(0, 5, 64)).passed


def test_kernel_structure_reports(rng):
    sub, iso = kernel_structure_check(ReflectionKernel(2), 1000, rng)
    assert sub.passed and iso.passed and iso.checked <= 1e-15 and not iso.skipped
    sub, iso = kernel_structure_check(AutoregressiveKernel(2, 0.4), 1000, rng)
    assert sub.passed and not sub.skipped and sub.checked <= 1.0
    assert iso.skipped and "not declared isometric" in iso.skipped
    sub, iso = kernel_structure_check(BounceKernel(standard_gaussian(2)), 1000, rng)
    assert sub.skipped and iso.passed and not iso.skipped
    for kernel in (FlipKernel(2, 0), ReflectionKernel(2), BounceKernel(standard_gaussian(2))):
        assert np.linalg.norm(kernel.apply(np.zeros(4))) == 0.0


def test_autoregressive_contraction_matches_direct_norm(rng):
    alpha = 0.3
    k = AutoregressiveKernel(2, alpha)
    x, y = rng.standard_normal((2, 4))
    xi = k.sample_noise(rng)
    d = x - y
    expected = np.linalg.norm(np.r_[d[:2], alpha * d[2:]])
    assert np.linalg.norm(k.apply(x, xi) - k.apply(y, xi)) == pytest.approx(expected, rel=1e-12)


def test_report_margin_sign():
    up = BoundReport("x", 1.0, 2.0, 0.0)
    low = BoundReport("y", 1.0, 2.0, 0.0, sense="lower")
    assert up.margin == 1.0 and up.passed
    assert low.margin == -1.0 and not low.passed
    check = low.to_check()
    assert check.name == "y" and not check.passed
