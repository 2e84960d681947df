import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from pdmpkit.errors import ConfigurationError, SimulationError, SkeletonError
from pdmpkit.flows import HarmonicFlow, LinearTransportFlow
from pdmpkit.intensities import ConstantRate
from pdmpkit.kernels import FlipKernel, ReflectionKernel
from pdmpkit.process import Clock, PdmpSpec, simulate_skeleton
from pdmpkit.samplers import SamplerConfig, build_sampler
from pdmpkit.skeleton import (
    EventSkeleton,
    check_replay,
    dense_states,
    evaluate_trajectory,
    read_skeleton,
    time_average,
    write_skeleton,
)
from pdmpkit.targets import standard_gaussian


def poisson_spec(rate=1.0):
    return PdmpSpec(LinearTransportFlow(1), [Clock(ConstantRate(rate), ReflectionKernel(1))])


class FixedTime:
    """Intensity that always proposes the same holding time."""

    def __init__(self, w):
        self.w = w

    def rate(self, z):
        return np.ones(np.shape(z)[:-1])

    def sample_time(self, flow, z, horizon, rng):
        return self.w if self.w <= horizon else None


def test_zero_rate_gives_no_events(rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "transport"))
    sk = simulate_skeleton(spec, np.array([0.0, 0.0, 1.0, 0.5]), 10.0, rng)
    assert len(sk) == 0 and sk.horizon == 10.0


def test_poisson_event_count(rng):
    # oracle: N_T ~ Poisson(T) for a unit-rate clock
    counts = np.array([len(simulate_skeleton(poisson_spec(), np.array([0.0, 1.0]), 10.0, rng)) for _ in range(10**4)])
    assert 9.7 <= counts.mean() <= 10.3
    assert abs(counts.var() - 10.0) <= 4 * math.sqrt(2 * 10.0**2 / 10**4) * 3


def test_bps_bounce_fires_against_gradient(rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "bps", alpha=1.0))
    for _ in range(200):
        q = rng.standard_normal(2)
        p = rng.standard_normal(2)
        if q @ p >= 0:
            p = -p
        sk = simulate_skeleton(spec, np.r_[q, p], 1e9, rng, n_events=1)
        ev = sk.events[0]
        # hazard (⟨q + tp, p⟩)₊ is zero until t = -⟨q,p⟩/‖p‖²
        assert ev.t >= -(q @ p) / (p @ p) - 1e-12
        assert ev.pre[:2] @ ev.pre[2:] >= -1e-12


def test_ties_go_to_lowest_clock(rng):
    clocks = [Clock(FixedTime(1.0), FlipKernel(2, 1)), Clock(FixedTime(1.0), FlipKernel(2, 0))]
    spec = PdmpSpec(LinearTransportFlow(2), clocks)
    sk = simulate_skeleton(spec, np.array([0.0, 0.0, 1.0, 1.0]), 2.5, rng)
    assert [e.clock for e in sk.events] == [0, 0]
    np.testing.assert_array_equal(sk.events[0].post, [1.0, 1.0, 1.0, -1.0])


def test_n_events_truncates_horizon(rng):
    sk = simulate_skeleton(poisson_spec(), np.array([0.0, 1.0]), 1e6, rng, n_events=7)
    assert len(sk) == 7 and sk.horizon == sk.events[-1].t


def test_runaway_guard_names_horizon_and_count(rng):
    with pytest.raises(SimulationError, match=r"5 events before horizon 1000"):
        simulate_skeleton(poisson_spec(100.0), np.array([0.0, 1.0]), 1000.0, rng, max_events=5)


def test_bad_inputs(rng):
    with pytest.raises(ValueError):
        simulate_skeleton(poisson_spec(), np.array([0.0, 1.0]), 0.0, rng)
    with pytest.raises(ValueError):
        simulate_skeleton(poisson_spec(), np.array([0.0, 1.0, 2.0]), 1.0, rng)
    with pytest.raises(ConfigurationError):
        PdmpSpec(LinearTransportFlow(1), [])
    with pytest.raises(ConfigurationError):
        PdmpSpec(LinearTransportFlow(1), [Clock(ConstantRate(1.0), FlipKernel(2, 0))])


def test_same_seed_same_skeleton():
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "bps", alpha=0.3))
    a = simulate_skeleton(spec, np.ones(4), 20.0, np.random.default_rng(5))
    b = simulate_skeleton(spec, np.ones(4), 20.0, np.random.default_rng(5))
    assert len(a) == len(b) > 0
    for ea, eb in zip(a.events, b.events):
        assert ea.t == eb.t and ea.clock == eb.clock
        np.testing.assert_array_equal(ea.post, eb.post)
        np.testing.assert_array_equal(ea.xi, eb.xi)


def test_trajectory_conventions(rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(1), "zigzag"))
    z0 = np.array([0.5, 1.0])
    sk = simulate_skeleton(spec, z0, 10.0, rng)
    assert len(sk) > 0
    np.testing.assert_array_equal(evaluate_trajectory(sk, spec, 0.0), z0)
    for ev in sk.events:
        np.testing.assert_array_equal(evaluate_trajectory(sk, spec, ev.t), ev.post)
    with pytest.raises(ValueError):
        evaluate_trajectory(sk, spec, 10.5)
    with pytest.raises(ValueError):
        evaluate_trajectory(sk, spec, -0.1)


def test_zero_event_trajectory_is_the_flow():
    spec = build_sampler(SamplerConfig(standard_gaussian(1), "transport"))
    sk = EventSkeleton(np.array([0.0, 1.0]), 5.0)
    np.testing.assert_array_equal(evaluate_trajectory(sk, spec, 5.0), [5.0, 1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dense_states_agree_with_pointwise(seed):
    rng = np.random.default_rng(seed)
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "bps", alpha=0.5))
    sk = simulate_skeleton(spec, rng.standard_normal(4), 5.0, rng)
    grid = np.sort(np.r_[np.linspace(0, 5, 23), sk.times])
    dense = dense_states(sk, spec, grid)
    for t, row in zip(grid, dense):
        np.testing.assert_allclose(row, evaluate_trajectory(sk, spec, t), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_event_times_increase_and_replay(seed):
    rng = np.random.default_rng(seed)
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "rhmc", alpha=0.2))
    sk = simulate_skeleton(spec, rng.standard_normal(4), 10.0, rng)
    assert np.all(np.diff(np.r_[0.0, sk.times]) > 0)
    assert np.all(sk.times <= sk.horizon)
    check_replay(sk, spec)


def test_round_trip_is_exact(tmp_path, rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(2), "bps", alpha=0.5))
    sk = simulate_skeleton(spec, rng.standard_normal(4), 10.0, rng)
    path = tmp_path / "sk.jsonl"
    write_skeleton(path, sk, seed=3, sampler="bps")
    back, head = read_skeleton(path)
    assert head["seed"] == 3 and head["sampler"] == "bps"
    assert back.horizon == sk.horizon and len(back) == len(sk)
    np.testing.assert_array_equal(back.initial_state, sk.initial_state)
    for a, b in zip(sk.events, back.events):
        assert a.t == b.t and a.clock == b.clock
        np.testing.assert_array_equal(a.pre, b.pre)
        np.testing.assert_array_equal(a.post, b.post)
        if a.xi is None:
            assert b.xi is None
        else:
            np.testing.assert_array_equal(a.xi, b.xi)
    check_replay(back, spec)


@pytest.mark.parametrize("field", ["post", "pre"])
def test_tampering_names_the_event(field, rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(1), "zigzag"))
    sk = simulate_skeleton(spec, np.array([0.5, 1.0]), 20.0, rng)
    k = len(sk) // 2
    ev = sk.events[k]
    bad = getattr(ev, field).copy()
    bad[0] += 0.01
    sk.events[k] = ev._replace(**{field: bad})
    with pytest.raises(SkeletonError) as info:
        check_replay(sk, spec)
    assert info.value.event_index == k
    assert f"event {k}" in str(info.value)


def test_tampered_refresh_noise_is_detected(rng):
    spec = build_sampler(SamplerConfig(standard_gaussian(1), "rhmc", alpha=0.5))
    sk = simulate_skeleton(spec, np.array([0.5, 1.0]), 20.0, rng)
    ev = sk.events[0]
    sk.events[0] = ev._replace(post=ev.post + np.array([0.0, 0.1]))
    with pytest.raises(SkeletonError, match="event 0"):
        check_replay(sk, spec)


def test_malformed_file(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"d": 2, "z0": [0, 1], "horizon": 1}\n{"k": 0, "t": "x"}\n')
    with pytest.raises(SkeletonError, match="bad.jsonl:2"):
        read_skeleton(path)
    path.write_text("")
    with pytest.raises(SkeletonError):
        read_skeleton(path)


def test_time_average_matches_quadrature(rng):
    spec = PdmpSpec(HarmonicFlow(np.eye(1)), [Clock(ConstantRate(1.0), ReflectionKernel(1))])
    sk = simulate_skeleton(spec, np.array([1.0, 0.0]), 6.0, rng)
    fn = lambda Z: np.asarray(Z)[..., 0] ** 2  # noqa: E731
    oracle = 0.0
    for start, z, end in sk.segments():
        oracle += integrate.quad(lambda s: spec.flow(z, s)[0] ** 2, 0, end - start, epsabs=1e-12)[0]
    assert time_average(sk, spec, fn, panels=256) == pytest.approx(oracle / 6.0, rel=1e-9)
