"""Exception hierarchy shared across the package."""


class PdmpError(Exception):
    """Base class for all errors raised by pdmpkit."""


class ConfigurationError(PdmpError, ValueError):
    """A sampler, target or run configuration is invalid."""


class CapabilityError(PdmpError):
    """An operation needs something the object does not provide (e.g. an exact sampler)."""


class FlowError(PdmpError, FloatingPointError):
    """Flow integration produced a non-finite state."""

    def __init__(self, message, t=None, z=None):
        super().__init__(message)
        self.t = t
        self.z = z


class EnvelopeError(PdmpError):
    """A thinning envelope was exceeded by the true rate."""

    def __init__(self, message, z=None, s=None):
        super().__init__(message)
        self.z = z
        self.s = s


class SimulationError(PdmpError):
    """Runaway simulation, e.g. the event-count guard tripped."""


class SkeletonError(PdmpError, ValueError):
    """An event skeleton is malformed or fails replay consistency."""

    def __init__(self, message, event_index=None):
        super().__init__(message)
        self.event_index = event_index


class QuadratureError(PdmpError, FloatingPointError):
    """Generator quadrature hit a non-finite value on a segment."""
