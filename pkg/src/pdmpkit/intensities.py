"""Jump intensities and exact sampling of the time to the next jump.

Given the process sits at z, the holding time W has survival function
exp(-∫_0^t λ(φ_s(z)) ds).  Three samplers realize that law:

* ``ConstantRate``: exponential inversion.
* ``LinearHazard``: the rate along the flow is (a + b s)₊ (plus nothing else),
  so the cumulative hazard is inverted in closed form.
* ``ThinnedIntensity``: Poisson thinning against a per-window constant
  envelope, chaining lookahead windows up to the horizon.

All ``rate`` methods accept arrays of shape ``(..., d)``.
"""

import math

import numpy as np

from .errors import EnvelopeError

CONSTANT_RATE = "constant_rate"
LINEAR_HAZARD = "linear_hazard_closed_form"
GENERIC_THINNING = "generic_thinning"

# relative slack when comparing the rate against its envelope
_ENVELOPE_RTOL = 1e-12


class Intensity:
    kind = None

    def rate(self, z):
        raise NotImplementedError

    def sample_time(self, flow, z, horizon, rng):
        """A draw of W truncated to (0, horizon], or None if W > horizon."""
        raise NotImplementedError


class ConstantRate(Intensity):
    kind = CONSTANT_RATE

    def __init__(self, value):
        if not value >= 0:
            raise ValueError(f"rate must be >= 0, got {value}")
        self.value = float(value)

    def rate(self, z):
        return np.full(np.shape(z)[:-1], self.value)

    def invert(self, e):
        """Time at which the cumulative hazard reaches the Exp(1) variate ``e``."""
        return math.inf if self.value == 0 else e / self.value

    def sample_time(self, flow, z, horizon, rng):
        if self.value == 0:
            return None
        w = self.invert(rng.standard_exponential())
        return w if w <= horizon else None


def invert_linear_hazard(a, b, e):
    """Solve ∫_0^s (a + b u)₊ du = e for s; ``inf`` if the total hazard is below e."""
    if b == 0:
        return e / a if a > 0 else math.inf
    if b > 0:
        start = max(0.0, -a / b)
        a0 = max(a, 0.0)
        # rationalized root of a0 x + b x² / 2 = e
        return start + 2.0 * e / (a0 + math.sqrt(a0 * a0 + 2.0 * b * e))
    # b < 0: hazard is positive only on [0, a / |b|)
    if a <= 0:
        return math.inf
    disc = a * a + 2.0 * b * e
    if disc <= 0:
        return math.inf
    return 2.0 * e / (a + math.sqrt(disc))


class LinearHazard(Intensity):
    """Rate whose restriction to the flow line is (a + b s)₊.

    ``coefficients(z)`` returns ``(a, b)`` for a single state; ``rate_fn`` is
    the batched rate.  Only valid together with the flow it was derived for
    (linear transport for the built-in samplers).
    """

    kind = LINEAR_HAZARD

    def __init__(self, rate_fn, coefficients):
        self._rate = rate_fn
        self.coefficients = coefficients

    def rate(self, z):
        return self._rate(z)

    def invert(self, z, e):
        a, b = self.coefficients(z)
        return invert_linear_hazard(float(a), float(b), e)

    def sample_time(self, flow, z, horizon, rng):
        w = self.invert(z, rng.standard_exponential())
        return w if w <= horizon else None


class ThinnedIntensity(Intensity):
    """Generic rate sampled by thinning.

    ``envelope(z, tau)`` must bound the rate along the flow over ``[0, tau]``
    started from ``z``.  A proposal where the rate exceeds the envelope is a
    hard error: clipping would bias the holding-time law.
    """

    kind = GENERIC_THINNING

    def __init__(self, rate_fn, envelope, lookahead=1.0):
        if lookahead <= 0:
            raise ValueError("lookahead must be positive")
        self._rate = rate_fn
        self.envelope = envelope
        self.lookahead = float(lookahead)

    def rate(self, z):
        return self._rate(z)

    def sample_time(self, flow, z, horizon, rng):
        window_start = 0.0
        z_window = np.asarray(z, dtype=float)
        while window_start < horizon:
            tau = min(self.lookahead, horizon - window_start)
            bound = float(self.envelope(z_window, tau))
            if bound > 0:
                s = rng.standard_exponential() / bound
                while s <= tau:
                    z_s = flow(z_window, s)
                    lam = float(self._rate(z_s))
                    if lam > bound * (1.0 + _ENVELOPE_RTOL) + _ENVELOPE_RTOL:
                        raise EnvelopeError(
                            f"rate {lam} exceeds envelope {bound} at s={window_start + s} "
                            f"from z={np.asarray(z).tolist()}",
                            z=np.asarray(z),
                            s=window_start + s,
                        )
                    if rng.random() * bound < lam:
                        return min(window_start + s, horizon)
                    s += rng.standard_exponential() / bound
            z_window = flow(z_window, tau)
            window_start += tau
        return None
