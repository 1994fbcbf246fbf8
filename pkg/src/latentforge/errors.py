"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LatentForgeError(Exception):
    """Base class for every error raised by this package."""


class SpaceMismatchError(LatentForgeError, ValueError):
    """A latent was offered to an oracle configured for a different space."""


class SeedNotFoundError(LatentForgeError):
    """Random sampling exhausted its call budget without a fitness hit."""

    def __init__(self, target: str, budget: int):
        super().__init__(f"no seed for group {target!r} within {budget} oracle calls")
        self.target = target
        self.budget = budget


class CalibrationError(LatentForgeError):
    """Weight calibration failed to converge; carries the last error vector."""

    def __init__(self, message: str, per_group_error: dict):
        super().__init__(message)
        self.per_group_error = dict(per_group_error)


class TransportError(LatentForgeError):
    """External oracle process failed to answer a request."""

    def __init__(self, message: str, request_id=None):
        super().__init__(message)
        self.request_id = request_id


class ProtocolError(TransportError):
    """External oracle answered with something unparseable; never retried."""

    def __init__(self, message: str, raw_line: str = "", request_id=None):
        super().__init__(message, request_id=request_id)
        self.raw_line = raw_line


class OracleTimeoutError(TransportError):
    """External oracle did not answer within the configured timeout."""


class UnsupportedAuditError(LatentForgeError):
    """The requested audit needs oracle features that are not available."""


class ManifestFormatError(LatentForgeError, ValueError):
    """A manifest, checkpoint, or sidecar file failed to parse or verify."""


class ConfigError(LatentForgeError, ValueError):
    """A configuration file failed to parse; carries the offending line."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no
