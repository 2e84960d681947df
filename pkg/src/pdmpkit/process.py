"""PDMP definition (flow plus clocks) and exact event-driven simulation.

Starting from z, each clock i proposes a holding time from its own law
μ_z^i; the earliest fires (ties go to the lowest clock index), the state is
flowed to that time and the clock's kernel is applied.  All clocks then
redraw from the new state, which is exact because the competing hazards
are memoryless given the current state.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, SimulationError
from .flows import Flow
from .intensities import Intensity
from .kernels import JumpKernel, apply_jump
from .skeleton import Event, EventSkeleton

DEFAULT_MAX_EVENTS = 10**8


@dataclass(frozen=True)
class Clock:
    intensity: Intensity
    kernel: JumpKernel


@dataclass(frozen=True)
class PdmpSpec:
    flow: Flow
    clocks: Sequence[Clock]
    name: str = "pdmp"

    def __post_init__(self):
        object.__setattr__(self, "clocks", tuple(self.clocks))
        if not self.clocks:
            raise ConfigurationError("a PDMP needs at least one clock")
        for i, clock in enumerate(self.clocks):
            if clock.kernel.dim != self.flow.dim:
                raise ConfigurationError(
                    f"clock {i} kernel has dimension {clock.kernel.dim}, flow has {self.flow.dim}"
                )

    @property
    def dim(self):
        return self.flow.dim

    @property
    def isometric(self):
        return all(c.kernel.is_isometric for c in self.clocks)

    def total_rate(self, z):
        return sum(c.intensity.rate(z) for c in self.clocks)


def sample_event_time(intensity, flow, z, horizon, rng):
    """Holding time W ~ μ_z truncated to (0, horizon]; ``None`` means no event."""
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    return intensity.sample_time(flow, np.asarray(z, dtype=float), horizon, rng)


def simulate_skeleton(spec, z0, horizon, rng, max_events=DEFAULT_MAX_EVENTS, n_events=None):
    """Simulate the jump skeleton on ``[0, horizon]``.

    With ``n_events`` the run stops after that many jumps and the skeleton
    horizon is the last jump time.  ``max_events`` is a runaway guard.
    """
    horizon = float(horizon)
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    z = np.array(z0, dtype=float)
    if z.shape != (spec.dim,) or not np.all(np.isfinite(z)):
        raise ValueError(f"initial state must be a finite vector of length {spec.dim}")
    z0 = z.copy()
    flow = spec.flow
    clocks = spec.clocks
    events = []
    t = 0.0
    while True:
        remaining = horizon - t
        if remaining <= 0:
            break
        best, best_w = -1, math.inf
        for i, clock in enumerate(clocks):
            w = clock.intensity.sample_time(flow, z, remaining, rng)
            if w is not None and w < best_w:
                best, best_w = i, w
        if best < 0:
            break
        if len(events) >= max_events:
            raise SimulationError(
                f"event-count guard tripped: {len(events)} events before horizon {horizon}"
            )
        pre = flow(z, best_w)
        post, xi = apply_jump(clocks[best].kernel, pre, rng)
        t_next = t + best_w
        if t_next <= t:
            # a zero holding time would break strict monotonicity
            raise SimulationError(f"non-increasing event time {t_next} after {t}")
        t = t_next
        events.append(Event(t, pre, post, best, xi))
        z = post
        if n_events is not None and len(events) >= n_events:
            horizon = t
            break
    return EventSkeleton(initial_state=z0, horizon=horizon, events=events)
