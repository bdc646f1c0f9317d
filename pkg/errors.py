from typing import Optional


class LabError(Exception):
    """Base class for every failure raised by the lab modules."""


class ScheduleError(LabError, ValueError):
    pass


class GeometryError(LabError, ValueError):
    pass


class DepthCapExceeded(LabError):
    def __init__(self, requested: int, cap: int, what: str = "depth"):
        super().__init__(f"Requested {what} {requested} exceeds the cap {cap}.")
        self.requested = requested
        self.cap = cap


class EvaluationError(LabError, ValueError):
    pass


class ProbeInapplicable(LabError, ValueError):
    """The probe preconditions do not hold for the given address or level."""


class InconclusiveProbe(LabError):
    def __init__(self, message: str, needed_depth: Optional[int] = None):
        if needed_depth is not None:
            message = f"{message} (needs depth {needed_depth})"
        super().__init__(message)
        self.needed_depth = needed_depth
