"""Event skeletons: the finite record from which a whole càdlàg path is rebuilt.

Serialized as JSON lines.  The header line is
``{"d", "z0", "horizon", "seed", ...}`` and each event line is
``{"k", "t", "pre", "post", "clock"}`` plus ``"xi"`` when the kernel drew
noise.  Floats go through ``repr`` so a round trip is exact.
"""

import bisect
import csv
import json
from dataclasses import dataclass, field
from typing import Any, List, NamedTuple

import numpy as np

from .errors import SkeletonError


class Event(NamedTuple):
    t: float
    pre: np.ndarray
    post: np.ndarray
    clock: int
    xi: Any = None


@dataclass
class EventSkeleton:
    initial_state: np.ndarray
    horizon: float
    events: List[Event] = field(default_factory=list)

    def __len__(self):
        return len(self.events)

    @property
    def dim(self):
        return self.initial_state.size

    @property
    def times(self):
        return np.array([e.t for e in self.events])

    def post_state(self, k):
        """State right after event ``k``; ``k = -1`` is the initial state."""
        return self.initial_state if k < 0 else self.events[k].post

    def segments(self, until=None):
        """Yield ``(start_time, start_state, end_time)`` for each inter-event piece."""
        end = self.horizon if until is None else until
        start, state = 0.0, self.initial_state
        for ev in self.events:
            if ev.t > end:
                break
            yield start, state, ev.t
            start, state = ev.t, ev.post
        yield start, state, end


def evaluate_trajectory(skeleton, spec, t):
    """Z_t, right-continuous: at an event time the post-jump state is returned."""
    t = float(t)
    if not 0.0 <= t <= skeleton.horizon:
        raise ValueError(f"t={t} outside [0, {skeleton.horizon}]")
    times = [e.t for e in skeleton.events]
    k = bisect.bisect_right(times, t) - 1
    if k < 0:
        return spec.flow(skeleton.initial_state, t)
    ev = skeleton.events[k]
    return ev.post.copy() if t == ev.t else spec.flow(ev.post, t - ev.t)


def dense_states(skeleton, spec, grid):
    """Z_t on a sorted time grid, shape ``(len(grid), d)``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size and (np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > skeleton.horizon):
        raise ValueError("grid must be sorted and lie inside [0, horizon]")
    times = [e.t for e in skeleton.events]
    out = np.empty((grid.size, skeleton.dim))
    # index of the last event at or before each grid time
    last = np.searchsorted(times, grid, side="right") - 1
    for k in np.unique(last):
        rows = np.nonzero(last == k)[0]
        base_t = 0.0 if k < 0 else times[k]
        out[rows] = spec.flow.trajectory(skeleton.post_state(k), grid[rows] - base_t)
    return out


def check_replay(skeleton, spec, rtol=1e-8):
    """Verify the skeleton against ``spec``.

    Each pre-jump state must equal the flow of the previous post-jump state,
    and each post-jump state must be reachable from its pre-jump state by the
    recorded clock's kernel.
    """
    prev_t, prev = 0.0, skeleton.initial_state
    last = -np.inf
    for k, ev in enumerate(skeleton.events):
        if not (ev.t > last and 0.0 < ev.t <= skeleton.horizon):
            raise SkeletonError(f"event {k}: time {ev.t} is not increasing inside (0, horizon]", k)
        expected = spec.flow(prev, ev.t - prev_t)
        err = np.linalg.norm(expected - ev.pre)
        if not err <= rtol * (1.0 + np.linalg.norm(expected)):
            raise SkeletonError(
                f"event {k}: pre-jump state deviates by {err:.3e} from the flow of the previous post-jump state", k
            )
        if not 0 <= ev.clock < len(spec.clocks):
            raise SkeletonError(f"event {k}: unknown clock index {ev.clock}", k)
        if not spec.clocks[ev.clock].kernel.explains(ev.pre, ev.post, ev.xi):
            raise SkeletonError(f"event {k}: post-jump state is not an image of the pre-jump state under clock {ev.clock}", k)
        last = ev.t
        prev_t, prev = ev.t, ev.post


def _floats(a):
    return [float(x) for x in np.asarray(a).ravel()]


def write_skeleton(path, skeleton, seed, **header):
    """Write the JSONL form; extra keyword arguments go into the header."""
    head = {"d": skeleton.dim, "z0": _floats(skeleton.initial_state), "horizon": float(skeleton.horizon), "seed": seed}
    head.update(header)
    with open(path, "w") as fh:
        fh.write(json.dumps(head) + "\n")
        for k, ev in enumerate(skeleton.events):
            rec = {"k": k, "t": float(ev.t), "pre": _floats(ev.pre), "post": _floats(ev.post), "clock": int(ev.clock)}
            if ev.xi is not None:
                rec["xi"] = _floats(ev.xi)
            fh.write(json.dumps(rec) + "\n")


def read_skeleton(path):
    """Return ``(skeleton, header)``."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise SkeletonError(f"{path}: empty skeleton file")
    try:
        head = json.loads(lines[0])
        d = int(head["d"])
        z0 = np.array(head["z0"], dtype=float)
        horizon = float(head["horizon"])
    except (ValueError, KeyError, TypeError) as exc:
        raise SkeletonError(f"{path}: bad header ({exc})") from None
    if z0.shape != (d,):
        raise SkeletonError(f"{path}: header z0 has length {z0.size}, expected {d}")
    events = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            xi = np.array(rec["xi"], dtype=float) if "xi" in rec else None
            ev = Event(float(rec["t"]), np.array(rec["pre"], dtype=float), np.array(rec["post"], dtype=float), int(rec["clock"]), xi)
            k = int(rec["k"])
        except (ValueError, KeyError, TypeError) as exc:
            raise SkeletonError(f"{path}:{lineno}: bad event record ({exc})", lineno - 2) from None
        if k != len(events) or ev.pre.shape != (d,) or ev.post.shape != (d,):
            raise SkeletonError(f"{path}:{lineno}: event {k} inconsistent with header", k)
        events.append(ev)
    return EventSkeleton(z0, horizon, events), head


def write_dense_csv(path, grid, states):
    """CSV with columns ``t, z_1, ..., z_d``."""
    states = np.asarray(states)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"z_{i + 1}" for i in range(states.shape[1])])
        for t, row in zip(grid, states):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row])


def time_average(skeleton, spec, fn, panels=8):
    """(1/T) ∫_0^T fn(Z_s) ds, by composite Simpson on every inter-event segment.

    ``fn`` maps states of shape ``(m, d)`` to ``(m,)`` or ``(m, k)``.  Along
    linear transport, polynomials of degree ≤ 3 in z are integrated exactly.
    """
    from .generator import _simpson_weights

    w = _simpson_weights(panels)
    unit = np.linspace(0.0, 1.0, panels + 1)
    total = 0.0
    for start, state, end in skeleton.segments():
        if end <= start:
            continue
        vals = np.asarray(fn(spec.flow.trajectory(state, (end - start) * unit)), dtype=float)
        total = total + (end - start) * np.tensordot(w, vals, axes=(0, 0))
    return total / skeleton.horizon
