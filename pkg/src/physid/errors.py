"""Exception types shared across the engine and pipeline."""


class PhysidError(Exception):
    """Base class for all errors raised by this package."""


class MalformedMesh(PhysidError):
    """Mesh file is syntactically or topologically invalid."""


class DegenerateMesh(PhysidError):
    """Mesh has no usable geometry (e.g. zero total surface area)."""


class NonFiniteInput(PhysidError):
    """An input vector or scalar contains NaN/Inf."""


class NonFiniteState(PhysidError):
    """Integration produced NaN/Inf; carries the first offending node index."""

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


class InvalidParameter(PhysidError):
    """Parameter outside its documented range."""


class EmptyMask(PhysidError):
    """Static mask has zero width or height."""


class ClientUnavailable(PhysidError):
    """External model endpoint is down and no fixture covers the request."""


class ResponseParseFailure(PhysidError):
    """Model response did not match the answer grammar; raw text preserved."""

    def __init__(self, task: str, raw: str, message: str | None = None):
        super().__init__(message or f"unparseable response for task {task!r}")
        self.task = task
        self.raw = raw


class StageTimeout(PhysidError):
    """A pipeline stage exceeded its deadline."""

    def __init__(self, stage: str, deadline_s: float):
        super().__init__(f"stage {stage!r} exceeded {deadline_s:.1f}s deadline")
        self.stage = stage
        self.deadline_s = deadline_s


class InconsistentResult(PhysidError):
    """Pipeline result cannot be turned into a simulation session."""


class EmptyInput(PhysidError):
    """Metric called on an empty prediction set."""


class WeightMismatch(PhysidError):
    """Property-error weight vector is malformed."""


class DimensionMismatch(PhysidError):
    """Images compared by a metric do not share shape/dtype."""


class MalformedMessage(PhysidError):
    """Wire message violates the session protocol."""


class SessionLimitExceeded(PhysidError):
    """Server refused a new session because the configured cap is reached."""
