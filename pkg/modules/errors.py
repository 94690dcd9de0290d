"""Error types shared by every module.

Each error knows the process exit code the CLI should report and how to
render itself as the ``{"success": False, "error": ...}`` payload.
"""


class CompassError(Exception):
    """Base error for the package."""

    exit_code = 1

    def __init__(self, message, details=None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def to_dict(self):
        payload = {"success": False, "error": self.message, "type": type(self).__name__}
        if self.details:
            payload["details"] = self.details
        return payload


class ConfigError(CompassError, ValueError):
    """Invalid run configuration."""

    exit_code = 2


class InvalidSpecError(ConfigError):
    """Invalid code spec, noise parameters or probabilities."""


class DimensionError(CompassError, ValueError):
    """Length or shape mismatch between operands."""

    exit_code = 2


class ConstructionError(CompassError):
    """A built code violates one of its invariants."""

    exit_code = 2

    def __init__(self, invariant, message, details=None):
        details = dict(details or {})
        details["invariant"] = invariant
        super().__init__(f"{invariant}: {message}", details)
        self.invariant = invariant


class SizeError(CompassError):
    """Exhaustive search refused because the code is too large."""

    exit_code = 2


class WeightError(CompassError, ValueError):
    """Edge probability outside the range where log-likelihood weights are positive."""

    exit_code = 2


class StructureError(CompassError):
    """Decoder graph structure violation (column weight, disconnected defect)."""

    exit_code = 3


class DecodeError(CompassError):
    """Runtime failure while decoding a shot."""

    exit_code = 3


class FitError(CompassError):
    """Threshold fit degenerate or failed to converge."""

    exit_code = 4
