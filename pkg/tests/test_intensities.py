import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from pdmpkit.errors import EnvelopeError
from pdmpkit.flows import LinearTransportFlow
from pdmpkit.intensities import ConstantRate, LinearHazard, ThinnedIntensity, invert_linear_hazard
from pdmpkit.process import sample_event_time

coef = st.floats(-5, 5, allow_nan=False).filter(lambda x: abs(x) > 1e-3)


def cumulative_hazard(a, b, s):
    return integrate.quad(lambda u: max(a + b * u, 0.0), 0.0, s, points=[-a / b] if b else None, limit=200)[0]


def test_constant_rate_inversion():
    assert ConstantRate(2.0).invert(1.0) == 0.5
    assert ConstantRate(0.0).invert(1.0) == math.inf
    with pytest.raises(ValueError):
        ConstantRate(-1.0)


def test_constant_rate_law(rng):
    flow = LinearTransportFlow(1)
    clock = ConstantRate(3.0)
    draws = [clock.sample_time(flow, np.zeros(2), 1e6, rng) for _ in range(20000)]
    assert stats.kstest(draws, stats.expon(scale=1 / 3.0).cdf).pvalue > 1e-3


def test_zero_rate_never_fires(rng):
    assert sample_event_time(ConstantRate(0.0), LinearTransportFlow(1), np.zeros(2), 10.0, rng) is None


@settings(max_examples=200, deadline=None)
@given(coef, coef, st.floats(1e-3, 10))
def test_linear_hazard_inversion_solves_cumulative_hazard(a, b, e):
    # oracle: numerical quadrature of (a + b u)+ and a bracketing root find
    s = invert_linear_hazard(a, b, e)
    if math.isinf(s):
        assert b < 0
        total = a * a / (2 * -b) if a > 0 else 0.0
        assert total <= e * (1 + 1e-9)
        return
    assert cumulative_hazard(a, b, s) == pytest.approx(e, rel=1e-7, abs=1e-10)
    root = optimize.brentq(lambda x: cumulative_hazard(a, b, x) - e, max(0.0, -a / b) if b > 0 else 0.0, s + 10.0)
    assert s == pytest.approx(root, rel=1e-6)


def test_linear_hazard_special_cases():
    assert invert_linear_hazard(2.0, 0.0, 1.0) == 0.5
    assert invert_linear_hazard(-1.0, 0.0, 1.0) == math.inf
    # starts negative, turns positive at s = 1 then grows like (s - 1)
    assert invert_linear_hazard(-1.0, 1.0, 0.5) == pytest.approx(2.0)


def test_linear_hazard_truncates_at_horizon():
    hz = LinearHazard(lambda z: np.ones(np.shape(z)[:-1]), lambda z: (1.0, 0.0))

    class Fixed:
        def standard_exponential(self):
            return 5.0

    assert hz.sample_time(LinearTransportFlow(1), np.zeros(2), 4.0, Fixed()) is None
    assert hz.sample_time(LinearTransportFlow(1), np.zeros(2), 6.0, Fixed()) == 5.0


def _ramp(n_window_checks=None):
    # rate (q p)+ along linear transport from (q, p): exactly a linear hazard
    def rate(z):
        z = np.asarray(z)
        return np.maximum(z[..., 0] * z[..., 1], 0.0)

    def envelope(z, tau):
        q, p = z
        return max(q * p + tau * p * p, 0.0)

    return rate, envelope


def test_thinning_matches_closed_form_law(rng):
    rate, envelope = _ramp()
    thin = ThinnedIntensity(rate, envelope, lookahead=0.5)
    exact = LinearHazard(rate, lambda z: (z[0] * z[1], z[1] ** 2))
    flow = LinearTransportFlow(1)
    z = np.array([-0.5, 1.2])
    a = [thin.sample_time(flow, z, 100.0, rng) for _ in range(20000)]
    b = [exact.sample_time(flow, z, 100.0, rng) for _ in range(20000)]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_thinning_respects_horizon(rng):
    rate, envelope = _ramp()
    thin = ThinnedIntensity(rate, envelope)
    flow = LinearTransportFlow(1)
    out = [thin.sample_time(flow, np.array([-3.0, 1.0]), 1.0, rng) for _ in range(200)]
    assert all(w is None for w in out)  # rate is zero on [0, 1]


def test_envelope_violation_is_an_error(rng):
    rate, _ = _ramp()
    thin = ThinnedIntensity(rate, lambda z, tau: 1e-3)
    with pytest.raises(EnvelopeError) as info:
        for _ in range(100):
            thin.sample_time(LinearTransportFlow(1), np.array([2.0, 2.0]), 50.0, rng)
    assert info.value.s > 0


def test_bad_lookahead():
    with pytest.raises(ValueError):
        ThinnedIntensity(lambda z: 0.0, lambda z, t: 0.0, lookahead=0.0)


def test_sample_event_time_needs_positive_horizon(rng):
    with pytest.raises(ValueError):
        sample_event_time(ConstantRate(1.0), LinearTransportFlow(1), np.zeros(2), 0.0, rng)
