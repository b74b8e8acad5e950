"""Exception types shared across the package."""


class GazeScanError(Exception):
    """Base class for all package errors."""


class DomainError(GazeScanError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ScenarioValidationError(GazeScanError, ValueError):
    """Scenario file failed validation; carries one message per offending path."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("scenario validation failed:\n" + "\n".join(self.errors))


class RecordError(GazeScanError, RuntimeError):
    """Base class for run-record load/replay failures."""


class RecordVersionError(RecordError):
    """Record schema version is not supported."""


class RecordCorruptError(RecordError):
    """Record file is truncated or structurally inconsistent."""


class ReplayMismatchError(RecordError):
    """Recomputed telemetry diverged from the recorded payload."""
