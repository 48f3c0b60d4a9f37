"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class DimensionError(EngineError):
    """Tensor shapes are incompatible with an operation's contract."""


class ScheduleError(EngineError):
    """An operator schedule is malformed (e.g. a buffer read before any write)."""


class BundleError(EngineError):
    """Base class for weight-bundle and feature-file errors."""


class BundleFormatError(BundleError):
    """A container file does not parse: bad magic, version, table, or bounds."""


class BundleConsistencyError(BundleError):
    """A container parsed but its contents contradict its config block."""


class StabilityError(BundleError):
    """A loaded state matrix is not strictly negative (unstable recurrence)."""


class HarnessError(EngineError):
    """Harness-level consistency failure (sample counts, empty inputs, modes)."""
